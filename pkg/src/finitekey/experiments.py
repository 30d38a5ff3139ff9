"""Experiment runner: operating points, sweeps, figure presets, CSV emission,
run manifests and result caching.

Sweep points are independent; they can be evaluated by a process pool and are
always collected in axis order, so reruns of an unchanged configuration
reproduce byte-identical CSV output. Caching is keyed by a hash of the fully
resolved configuration plus the code version and kernel backend.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from finitekey._backend import BACKEND
from finitekey.channel import SystemParams
from finitekey.errors import ConfigurationError, NoPositiveKeyError
from finitekey.finite_stats import SecurityParams
from finitekey.optimize import (GridSpec, max_tolerable_loss, optimize_sps,
                                optimize_wcp)
from finitekey.photon_source import SpsSource

CODE_VERSION = "0.1.0"

CSV_COLUMNS = ("axis_name", "axis_value", "protocol", "mean_n", "g2", "p_x_opt",
               "eta_tr_opt", "mu1_opt", "mu2_opt", "pmu1_opt", "pmu2_opt",
               "skl_bits", "skr_per_pulse", "skr_per_second", "abort_reason",
               "max_loss_db")

FIGURE_NAMES = ("fig1", "fig2", "fig3", "fig4a", "fig4b")


@dataclass(frozen=True)
class CurveSpec:
    """One curve of a run: a protocol plus its fixed source parameters."""

    protocol: str                 # "sps" | "wcp"
    label: str                    # protocol column in the CSV
    mean_n: float | None = None
    g2: float | None = None
    variant: str = "plain"
    time_s: float | None = None   # per-curve block override (None = config value)
    n_sent: float | None = None


@dataclass(frozen=True)
class SweepSpec:
    """Axis of a sweep; exactly one of the two axes per run."""

    axis: str                     # "loss_db" | "time_s"
    start: float
    stop: float
    step: float = 1.0             # loss axis resolution (dB)
    points_per_decade: int = 25   # time axis resolution (log sampling)

    def values(self) -> list:
        if self.start > self.stop:
            raise ConfigurationError(
                f"sweep range is empty: start={self.start} stop={self.stop}")
        if self.axis == "loss_db":
            n = int(round((self.stop - self.start) / self.step))
            return [self.start + i * self.step for i in range(n + 1)]
        if self.axis == "time_s":
            if self.start <= 0.0:
                raise ConfigurationError("time axis must start above 0 s")
            decades = math.log10(self.stop / self.start)
            n = max(1, int(round(decades * self.points_per_decade)))
            return [self.start * 10.0 ** (decades * i / n) for i in range(n + 1)]
        raise ConfigurationError(f"unknown sweep axis: {self.axis!r}")


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams = SystemParams()
    security: SecurityParams = SecurityParams()
    curves: tuple = (CurveSpec(protocol="sps", label="sps",
                               mean_n=0.0142, g2=0.036),)
    sweep: SweepSpec | None = None
    loss_db: float = 10.0
    time_s: float = 60.0
    n_sent: float | None = None
    grid: GridSpec = GridSpec()
    max_loss_tol_db: float = 0.05
    out_dir: str = "out"
    label: str = "run"
    cache: bool = True
    workers: int = 1
    emit_plot_script: bool = True

    def block_size(self, curve: CurveSpec) -> float:
        if curve.n_sent is not None:
            return curve.n_sent
        if curve.time_s is not None:
            return self.system.rep_rate * curve.time_s
        if self.n_sent is not None:
            return self.n_sent
        return self.system.rep_rate * self.time_s


@dataclass(frozen=True)
class SweepRecord:
    axis_name: str
    axis_value: float
    protocol: str
    mean_n: float | None
    g2: float | None
    params: dict
    skl: float
    skr: float
    skr_per_sec: float | None
    abort_reason: str
    max_loss_db: float | None = None


def _source_for(curve: CurveSpec) -> SpsSource:
    if curve.mean_n is None or curve.g2 is None:
        raise ConfigurationError(
            f"curve {curve.label!r}: sps curves need mean_n and g2")
    return SpsSource(mean=curve.mean_n, g2=curve.g2)


def _record(curve: CurveSpec, axis_name: str, axis_value: float, opt,
            n_sent: float, rep_rate: float,
            max_loss_db: float | None = None) -> SweepRecord:
    key = opt.best_key
    return SweepRecord(axis_name=axis_name, axis_value=axis_value,
                       protocol=curve.label, mean_n=curve.mean_n, g2=curve.g2,
                       params=dict(opt.best_params), skl=key.skl, skr=key.skr,
                       skr_per_sec=key.skl / (n_sent / rep_rate),
                       abort_reason=key.abort_reason.value,
                       max_loss_db=max_loss_db)


def run_point(config: RunConfig, loss_db: float, n_sent: float,
              axis_name: str = "loss_db",
              axis_value: float | None = None) -> list:
    """Optimise every configured curve at one operating point."""
    axis_value = loss_db if axis_value is None else axis_value
    records = []
    for curve in config.curves:
        n = config.block_size(curve) if curve.time_s or curve.n_sent else n_sent
        if curve.protocol == "sps":
            opt = optimize_sps(config.system, _source_for(curve), loss_db, n,
                               config.security, curve.variant, config.grid)
        elif curve.protocol == "wcp":
            opt = optimize_wcp(config.system, loss_db, n, config.security,
                               config.grid)
        else:
            raise ConfigurationError(
                f"curve {curve.label!r}: unknown protocol {curve.protocol!r}")
        records.append(_record(curve, axis_name, axis_value, opt, n,
                               config.system.rep_rate))
    return records


def _point_task(args):
    config, kind, axis_value = args
    try:
        if kind == "sweep-loss":
            return _sweep_loss_point(config, axis_value)
        if kind == "sweep-time":
            return _sweep_time_point(config, axis_value)
        if kind == "max-loss":
            return _max_loss_point(config, axis_value)
        raise ConfigurationError(f"unknown run kind: {kind!r}")
    except (NoPositiveKeyError, ConfigurationError):
        raise
    except Exception as exc:  # per-point failure must not abort the sweep
        return [SweepRecord(axis_name="error", axis_value=axis_value,
                            protocol=f"error:{type(exc).__name__}", mean_n=None,
                            g2=None, params={}, skl=0.0, skr=0.0,
                            skr_per_sec=None, abort_reason=str(exc))]


def _sweep_loss_point(config: RunConfig, loss_db: float) -> list:
    n_default = config.block_size(CurveSpec(protocol="sps", label=""))
    return run_point(config, loss_db, n_default, axis_name="loss_db",
                     axis_value=loss_db)


def _sweep_time_point(config: RunConfig, time_s: float) -> list:
    n_sent = config.system.rep_rate * time_s
    return run_point(config, config.loss_db, n_sent, axis_name="time_s",
                     axis_value=time_s)


def _max_loss_point(config: RunConfig, time_s: float) -> list:
    n_sent = config.system.rep_rate * time_s
    records = []
    for curve in config.curves:
        source = _source_for(curve) if curve.protocol == "sps" else None
        try:
            found = max_tolerable_loss(config.system, curve.protocol, n_sent,
                                       tol_db=config.max_loss_tol_db,
                                       source=source, security=config.security,
                                       variant=curve.variant, grid=config.grid)
        except NoPositiveKeyError:
            records.append(SweepRecord(axis_name="time_s", axis_value=time_s,
                                       protocol=curve.label, mean_n=curve.mean_n,
                                       g2=curve.g2, params={}, skl=0.0, skr=0.0,
                                       skr_per_sec=None, abort_reason="none-found",
                                       max_loss_db=None))
            continue
        records.append(_record(curve, "time_s", time_s, found.at_loss, n_sent,
                               config.system.rep_rate,
                               max_loss_db=found.loss_db))
    return records


def _run_points(config: RunConfig, kind: str, axis_values: list) -> list:
    tasks = [(config, kind, v) for v in axis_values]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_point = list(pool.map(_point_task, tasks))
    else:
        per_point = [_point_task(t) for t in tasks]
    return [rec for recs in per_point for rec in recs]


def sweep_loss(config: RunConfig) -> list:
    sweep = config.sweep or SweepSpec(axis="loss_db", start=0.0, stop=30.0)
    if sweep.axis != "loss_db":
        raise ConfigurationError("sweep-loss needs a loss_db axis")
    return _run_points(config, "sweep-loss", sweep.values())


def sweep_time(config: RunConfig) -> list:
    sweep = config.sweep or SweepSpec(axis="time_s", start=0.01, stop=100.0)
    if sweep.axis != "time_s":
        raise ConfigurationError("sweep-time needs a time_s axis")
    return _run_points(config, "sweep-time", sweep.values())


def find_max_loss(config: RunConfig) -> list:
    sweep = config.sweep or SweepSpec(axis="time_s", start=0.01, stop=100.0)
    if sweep.axis != "time_s":
        raise ConfigurationError("max-loss needs a time_s axis")
    return _run_points(config, "max-loss", sweep.values())


# --- configuration ingestion -------------------------------------------------

_SECTION_KEYS = {"system", "security", "protocol", "sps", "curves", "point",
                 "sweep_loss", "sweep_time", "optimizer", "max_loss", "output",
                 "label"}


def _build(cls, section: dict, path: str):
    names = {f.name for f in dataclasses.fields(cls)}
    bad = set(section) - names
    if bad:
        raise ConfigurationError(f"{path}: unknown fields {sorted(bad)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def config_from_dict(raw: dict, kind: str = "point") -> RunConfig:
    """Build a RunConfig from parsed JSON, with field-level diagnostics."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration root must be an object")
    bad = set(raw) - _SECTION_KEYS
    if bad:
        raise ConfigurationError(f"unknown configuration sections {sorted(bad)}")
    system = _build(SystemParams, raw.get("system", {}), "system")
    security = _build(SecurityParams, raw.get("security", {}), "security")
    grid_raw = dict(raw.get("optimizer", {}))
    if "pmu_seeds" in grid_raw:
        grid_raw["pmu_seeds"] = tuple(tuple(s) for s in grid_raw["pmu_seeds"])
    grid = _build(GridSpec, grid_raw, "optimizer")

    protocol = raw.get("protocol", "both")
    if "curves" in raw:
        curves = tuple(_build(CurveSpec, c, f"curves[{i}]")
                       for i, c in enumerate(raw["curves"]))
    else:
        sps_raw = raw.get("sps", {})
        mean_n = sps_raw.get("mean_n", 0.0142)
        g2 = sps_raw.get("g2", 0.036)
        variant = sps_raw.get("variant", "plain")
        sps_curve = CurveSpec(protocol="sps", label="sps", mean_n=mean_n,
                              g2=g2, variant=variant)
        wcp_curve = CurveSpec(protocol="wcp", label="wcp")
        if protocol == "sps":
            curves = (sps_curve,)
        elif protocol == "wcp":
            curves = (wcp_curve,)
        elif protocol == "both":
            curves = (sps_curve, wcp_curve)
        else:
            raise ConfigurationError(f"protocol must be sps|wcp|both: {protocol!r}")

    point = raw.get("point", {})
    for key in point:
        if key not in ("loss_db", "time_s", "n_sent"):
            raise ConfigurationError(f"point: unknown field {key!r}")
    if point.get("loss_db", 10.0) < 0.0:
        raise ConfigurationError(f"point.loss_db must be >= 0: {point['loss_db']!r}")
    if point.get("time_s") is not None and point.get("time_s", 60.0) <= 0.0:
        raise ConfigurationError(f"point.time_s must be > 0: {point['time_s']!r}")
    if point.get("n_sent") is not None and point["n_sent"] <= 0.0:
        raise ConfigurationError(f"point.n_sent must be > 0: {point['n_sent']!r}")

    sweep = None
    if kind == "sweep-loss" or (kind == "point" and "sweep_loss" in raw):
        sl = dict(raw.get("sweep_loss", {}))
        sl.setdefault("start", 0.0)
        sl.setdefault("stop", 30.0)
        sweep = _build(SweepSpec, {"axis": "loss_db", **sl}, "sweep_loss")
    elif kind in ("sweep-time", "max-loss"):
        st = dict(raw.get("sweep_time", {}))
        st.setdefault("start", 0.01)
        st.setdefault("stop", 100.0)
        sweep = _build(SweepSpec, {"axis": "time_s", **st}, "sweep_time")

    ml = raw.get("max_loss", {})
    for key in ml:
        if key != "tol_db":
            raise ConfigurationError(f"max_loss: unknown field {key!r}")
    out = raw.get("output", {})
    for key in out:
        if key not in ("dir", "cache", "workers", "plot_script"):
            raise ConfigurationError(f"output: unknown field {key!r}")

    return RunConfig(system=system, security=security, curves=curves,
                     sweep=sweep,
                     loss_db=point.get("loss_db", 10.0),
                     time_s=point.get("time_s", 60.0),
                     n_sent=point.get("n_sent"),
                     grid=grid,
                     max_loss_tol_db=ml.get("tol_db", 0.05),
                     out_dir=out.get("dir", "out"),
                     label=raw.get("label", "run"),
                     cache=out.get("cache", True),
                     workers=out.get("workers", 1),
                     emit_plot_script=out.get("plot_script", True))


# --- figure presets ----------------------------------------------------------

def figure_config(name: str, base: RunConfig | None = None):
    """Preset (config, kind) pairs reproducing the headline figures."""
    base = base or RunConfig()
    common = dict(system=base.system, security=base.security, grid=base.grid,
                  out_dir=base.out_dir, cache=base.cache, workers=base.workers,
                  emit_plot_script=base.emit_plot_script,
                  max_loss_tol_db=base.max_loss_tol_db)
    if name == "fig1":
        curves = tuple(CurveSpec(protocol="sps", label=label, mean_n=0.0142,
                                 g2=0.036, variant=variant)
                       for label, variant in (("sps", "plain"),
                                              ("sps-vac-lb", "bounded-vacuum"),
                                              ("sps-vac-exact", "exact-vacuum")))
        cfg = RunConfig(curves=curves, time_s=60.0, label="fig1",
                        sweep=SweepSpec(axis="loss_db", start=20.0, stop=36.0,
                                        step=0.25), **common)
        return cfg, "sweep-loss"
    if name == "fig2":
        curves = []
        for g2 in (0.036, 0.018, 0.001):
            for tag, time_s, n_sent in (("1s", 1.0, None), ("60s", 60.0, None),
                                        ("asymptotic", None, 1e15)):
                curves.append(CurveSpec(protocol="sps",
                                        label=f"sps:g2={g2}:{tag}",
                                        mean_n=0.0142, g2=g2,
                                        time_s=time_s, n_sent=n_sent))
        cfg = RunConfig(curves=tuple(curves), label="fig2",
                        sweep=SweepSpec(axis="loss_db", start=0.0, stop=45.0,
                                        step=0.5), **common)
        return cfg, "sweep-loss"
    if name == "fig3":
        curves = [CurveSpec(protocol="sps", label=f"sps:n={m}", mean_n=m,
                            g2=0.036) for m in (0.0142, 0.05, 0.2, 0.5)]
        curves.append(CurveSpec(protocol="wcp", label="wcp"))
        cfg = RunConfig(curves=tuple(curves), label="fig3",
                        sweep=SweepSpec(axis="time_s", start=1e-3, stop=1e3,
                                        points_per_decade=base.sweep.points_per_decade
                                        if base.sweep else 25), **common)
        return cfg, "max-loss"
    if name in ("fig4a", "fig4b"):
        loss = 10.0 if name == "fig4a" else 20.0
        curves = [CurveSpec(protocol="sps", label=f"sps:n={m}", mean_n=m,
                            g2=0.036) for m in (0.0142, 0.142, 0.5)]
        curves.append(CurveSpec(protocol="wcp", label="wcp"))
        cfg = RunConfig(curves=tuple(curves), label=name, loss_db=loss,
                        sweep=SweepSpec(axis="time_s", start=10.0 ** -2.5,
                                        stop=10.0 ** 2.5,
                                        points_per_decade=base.sweep.points_per_decade
                                        if base.sweep else 25), **common)
        return cfg, "sweep-time"
    raise ConfigurationError(f"unknown figure preset {name!r} "
                             f"(choose from {', '.join(FIGURE_NAMES)})")


# --- output emission and caching ---------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # float() strips numpy scalar wrappers
    return str(value)


def _row(rec: SweepRecord) -> list:
    p = rec.params
    return [rec.axis_name, _fmt(rec.axis_value), rec.protocol, _fmt(rec.mean_n),
            _fmt(rec.g2), _fmt(p.get("p_x")), _fmt(p.get("eta_tr")),
            _fmt(p.get("mu1")), _fmt(p.get("mu2")), _fmt(p.get("p_mu1")),
            _fmt(p.get("p_mu2")), _fmt(rec.skl), _fmt(rec.skr),
            _fmt(rec.skr_per_sec), rec.abort_reason, _fmt(rec.max_loss_db)]


def config_hash(config: RunConfig, kind: str) -> str:
    resolved = dataclasses.asdict(config)
    payload = json.dumps({"config": resolved, "kind": kind,
                          "code_version": CODE_VERSION, "backend": BACKEND},
                         sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


def _atomic_write(path: str, data: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_load(config: RunConfig, kind: str) -> list | None:
    path = os.path.join(config.out_dir, ".cache", config_hash(config, kind) + ".json")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        raw = json.load(fh)
    return [SweepRecord(**rec) for rec in raw]


def cache_store(config: RunConfig, kind: str, records: list):
    cache_dir = os.path.join(config.out_dir, ".cache")
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, config_hash(config, kind) + ".json")
    data = json.dumps([dataclasses.asdict(rec) for rec in records])
    _atomic_write(path, data)


def emit_outputs(records: list, config: RunConfig, kind: str) -> dict:
    """Write the CSV, the run manifest and (optionally) a plot script.

    Returns the mapping of artifact names to paths.
    """
    if not records:
        raise ValueError("no records to emit")
    os.makedirs(config.out_dir, exist_ok=True)
    base = os.path.join(config.out_dir, config.label)
    csv_path = base + ".csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(_row(rec) for rec in records)
    csv_text = buf.getvalue()
    _atomic_write(csv_path, csv_text)
    paths = {"csv": csv_path}

    manifest = {
        "label": config.label,
        "kind": kind,
        "config": dataclasses.asdict(config),
        "config_hash": config_hash(config, kind),
        "code_version": CODE_VERSION,
        "backend": BACKEND,
        "records": len(records),
        "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
    }
    manifest_path = base + ".manifest.json"
    _atomic_write(manifest_path, json.dumps(manifest, indent=2, default=str) + "\n")
    paths["manifest"] = manifest_path

    if config.emit_plot_script:
        plot_path = base + "_plot.py"
        _atomic_write(plot_path, _plot_script(config.label, kind))
        paths["plot_script"] = plot_path
    return paths


def run(config: RunConfig, kind: str) -> tuple:
    """Orchestrate one run: cache lookup, evaluation, emission."""
    records = cache_load(config, kind) if config.cache else None
    cached = records is not None
    if records is None:
        if kind == "sweep-loss":
            records = sweep_loss(config)
        elif kind == "sweep-time":
            records = sweep_time(config)
        elif kind == "max-loss":
            records = find_max_loss(config)
        elif kind in ("point", "compare"):
            n_sent = config.block_size(CurveSpec(protocol="sps", label=""))
            records = run_point(config, config.loss_db, n_sent)
        else:
            raise ConfigurationError(f"unknown run kind: {kind!r}")
        if config.cache:
            cache_store(config, kind, records)
    paths = emit_outputs(records, config, kind)
    return records, paths, cached


def _plot_script(label: str, kind: str) -> str:
    if kind == "max-loss":
        y_col = "max_loss_db"
        y_label = "max tolerable loss (dB)"
        x_label, scale = "acquisition time (s)", "semilogx"
    elif kind == "sweep-time":
        y_col = "skr_per_pulse"
        y_label = "secure key rate (bits/pulse)"
        x_label, scale = "acquisition time (s)", "loglog"
    else:
        y_col = "skr_per_pulse"
        y_label = "secure key rate (bits/pulse)"
        x_label, scale = "channel loss (dB)", "semilogy"
    return f'''"""Plot {label}.csv (generated alongside the data)."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

curves = defaultdict(lambda: ([], []))
with open("{label}.csv") as fh:
    for r in csv.DictReader(fh):
        if not r["axis_value"] or not r["{y_col}"]:
            continue
        y = float(r["{y_col}"])
        if y <= 0.0:
            continue
        xs, ys = curves[r["protocol"]]
        xs.append(float(r["axis_value"]))
        ys.append(y)

fig, ax = plt.subplots(figsize=(7, 5))
for name, (xs, ys) in sorted(curves.items()):
    ax.{scale}(xs, ys, label=name)
ax.set_xlabel("{x_label}")
ax.set_ylabel("{y_label}")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig("{label}.png", dpi=200)
print("wrote {label}.png")
'''
