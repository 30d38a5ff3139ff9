"""Command-line front end.

Exit codes: 0 on success, 1 on configuration errors, 2 on runtime or
numerical errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from finitekey import __version__
from finitekey._backend import BACKEND
from finitekey.errors import ConfigurationError
from finitekey.experiments import (FIGURE_NAMES, CurveSpec, RunConfig,
                                   config_from_dict, figure_config, run)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage errors are configuration errors
        raise ConfigurationError(message)


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="JSON configuration file")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--workers", type=int, metavar="N",
                        help="concurrent sweep-point workers")
    parser.add_argument("--no-cache", action="store_true",
                        help="recompute even when a cached result exists")
    parser.add_argument("--protocol", choices=("sps", "wcp", "both"),
                        help="protocol selection")
    parser.add_argument("--loss-db", type=float, help="channel loss (dB)")
    parser.add_argument("--time-s", type=float, help="acquisition time (s)")
    parser.add_argument("--mean-n", type=float,
                        help="source mean photon number")
    parser.add_argument("--g2", type=float,
                        help="source second-order correlation")


def build_parser() -> _Parser:
    parser = _Parser(prog="finitekey",
                     description="Finite-key secure key rates: non-decoy "
                                 "single-photon source versus 2-decoy weak "
                                 "coherent pulses.")
    parser.add_argument("--version", action="version",
                        version=f"finitekey {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("point", "optimise both protocols at one operating point"),
                            ("compare", "point evaluation forcing a side-by-side comparison"),
                            ("sweep-loss", "key rate versus channel loss"),
                            ("sweep-time", "key rate versus acquisition time"),
                            ("max-loss", "maximum tolerable loss versus acquisition time")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    fig = sub.add_parser("figure", help="run a figure-reproduction preset")
    fig.add_argument("name", choices=FIGURE_NAMES)
    _add_common(fig)
    return parser


def _load_config(args, kind: str) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if args.protocol:
        raw["protocol"] = args.protocol
    sps = dict(raw.get("sps", {}))
    if args.mean_n is not None:
        sps["mean_n"] = args.mean_n
    if args.g2 is not None:
        sps["g2"] = args.g2
    if sps:
        raw["sps"] = sps
    point = dict(raw.get("point", {}))
    if args.loss_db is not None:
        point["loss_db"] = args.loss_db
    if args.time_s is not None:
        point["time_s"] = args.time_s
    if point:
        raw["point"] = point
    config = config_from_dict(raw, kind)
    updates = {}
    if args.out:
        updates["out_dir"] = args.out
    if args.workers:
        updates["workers"] = args.workers
    if args.no_cache:
        updates["cache"] = False
    if config.label == "run":
        updates["label"] = kind
    if updates:
        config = dataclasses.replace(config, **updates)
    return config


def _print_records(records, kind: str):
    for rec in records:
        bits = f"skl={rec.skl:.6g} bits  skr={rec.skr:.6g}/pulse"
        if rec.skr_per_sec is not None:
            bits += f"  {rec.skr_per_sec:.6g}/s"
        extra = ""
        if rec.max_loss_db is not None:
            extra = f"  max_loss={rec.max_loss_db:.2f} dB"
        print(f"{rec.protocol:>16}  {rec.axis_name}={rec.axis_value:.6g}  "
              f"{bits}  abort={rec.abort_reason}{extra}")
    if kind == "compare" and len(records) >= 2:
        by_label = {rec.protocol: rec.skl for rec in records}
        if "sps" in by_label and "wcp" in by_label:
            lead = "sps" if by_label["sps"] >= by_label["wcp"] else "wcp"
            print(f"advantage: {lead} "
                  f"(delta {abs(by_label['sps'] - by_label['wcp']):.6g} bits)")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "figure":
            base = _load_config(args, "point")
            config, kind = figure_config(args.name, base)
            if args.out:
                config = dataclasses.replace(config, out_dir=args.out)
            if args.no_cache:
                config = dataclasses.replace(config, cache=False)
            if args.workers:
                config = dataclasses.replace(config, workers=args.workers)
        else:
            kind = args.command
            config = _load_config(args, kind)
            if kind == "compare":
                config = dataclasses.replace(
                    config, curves=(CurveSpec(protocol="sps", label="sps",
                                              mean_n=config.curves[0].mean_n or 0.0142,
                                              g2=config.curves[0].g2 or 0.036),
                                    CurveSpec(protocol="wcp", label="wcp")))
        records, paths, cached = run(config, kind)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if cached:
        print("(cached result)")
    if kind in ("point", "compare") or len(records) <= 12:
        _print_records(records, kind)
    else:
        print(f"{len(records)} records")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
