"""Scalar kernels for finite-key secure-key-length evaluation.

Pure-Python reference backend. ``finitekey._ckernels`` is a compiled mirror
of every public function here; the active backend is picked in
``finitekey._backend``. Keep the two implementations in lockstep, including
the order of floating-point operations, so that both backends agree to a
few ulps (the compiled build disables FMA contraction for the same reason).
"""

from __future__ import annotations

import math

BACKEND_NAME = "python"

# Abort codes shared with the compiled backend.
ABORT_NONE = 0
ABORT_PHASE_THRESHOLD = 1
ABORT_PNS_CONDITION = 2
ABORT_NEGATIVE_LENGTH = 3

# Vacuum-accounting variants of the non-decoy protocol.
VARIANT_PLAIN = 0
VARIANT_EXACT_VACUUM = 1
VARIANT_BOUNDED_VACUUM = 2

_TWO_PI = 2.0 * math.pi

# Inverse-normal-CDF rational approximation coefficients (Acklam), refined
# below with one Halley step so the result is accurate to ~1 ulp.
_ICDF_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
           1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ICDF_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
           6.680131188771972e+01, -1.328068155288572e+01)
_ICDF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
           -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ICDF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
           3.754408661907416e+00)
_ICDF_PLOW = 0.02425


def binary_entropy(e: float) -> float:
    """Binary entropy H(e) in bits, with H(0) = H(1) = 0 by continuity."""
    if e < 0.0 or e > 1.0:
        raise ValueError(f"binary entropy argument outside [0, 1]: {e!r}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -(e * math.log2(e) + (1.0 - e) * math.log2(1.0 - e))


def chernoff_observed_upper(expected: float, eps: float) -> float:
    """Upper bound on an observed Bernoulli-sum count given its expectation.

    Pr[observed >= bound] <= eps under the independent-trials model. Equals
    (1 + Delta_U) * expected in multiplicative form and tends to the
    additive residue beta = -ln(eps) as expected -> 0.
    """
    if expected < 0.0:
        raise ValueError("expected count must be nonnegative")
    beta = _beta(eps)
    return expected + 0.5 * (beta + math.sqrt(8.0 * beta * expected + beta * beta))


def chernoff_observed_lower(expected: float, eps: float) -> float:
    """Lower-tail companion: Pr[observed <= bound] <= eps, floored at 0."""
    if expected < 0.0:
        raise ValueError("expected count must be nonnegative")
    beta = _beta(eps)
    low = expected - math.sqrt(2.0 * beta * expected)
    return low if low > 0.0 else 0.0


def chernoff_expected_upper(observed: float, eps: float) -> float:
    """Largest expectation consistent with an observed count.

    Closed-form inverse of :func:`chernoff_observed_lower`: solves
    observed = E - sqrt(2 beta E) for E.
    """
    if observed < 0.0:
        raise ValueError("observed count must be nonnegative")
    beta = _beta(eps)
    return observed + beta + math.sqrt(beta * beta + 2.0 * beta * observed)


def chernoff_expected_lower(observed: float, eps: float) -> float:
    """Smallest expectation consistent with an observed count, floored at 0.

    Closed-form inverse of :func:`chernoff_observed_upper`.
    """
    if observed < 0.0:
        raise ValueError("observed count must be nonnegative")
    beta = _beta(eps)
    low = observed - 0.5 * (math.sqrt(beta * beta + 8.0 * beta * observed) - beta)
    return low if low > 0.0 else 0.0


def _beta(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1): {eps!r}")
    return -math.log(eps)


def _entropic_expected_upper(observed: float, beta: float) -> float:
    """Largest mean whose lower tail at ``observed`` still exceeds exp(-beta).

    Inverts the entropic Chernoff lower-tail exponent
    E - O + O ln(O/E) = beta by Newton from the (looser) quadratic closed
    form; the exponent is convex in E, so the iteration descends
    monotonically onto the root.
    """
    if observed <= 0.0:
        return beta
    e = observed + beta + math.sqrt(beta * beta + 2.0 * beta * observed)
    for _ in range(60):
        g = e - observed + observed * math.log(observed / e) - beta
        step = g / (1.0 - observed / e)
        e -= step
        if abs(step) <= 1e-13 * e:
            break
    return e


def rate_fluctuation_upper(n: float, k: float, lam: float, eps: float) -> float:
    """Tail increment for random sampling without replacement.

    Given an observed error rate ``lam`` on a sample of size ``k``, the rate
    on the disjoint unobserved sample of size ``n`` exceeds ``lam`` plus the
    returned increment with probability at most ``eps``.

    Construction: conditioned on the total error count, the observed count is
    a hypergeometric variable whose lower tail is dominated by the binomial
    with the population rate, so the entropic Chernoff inversion bounds the
    population count from the observation; the unobserved-sample rate follows
    by subtraction. Validated against a hypergeometric Monte Carlo oracle in
    the test suite. ``lam`` is clamped below by 1/(2k) (a conservative
    resolution floor when no errors were observed); the result lies in
    [0, 1 - lam].
    """
    if n <= 0.0 or k <= 0.0:
        raise ValueError("sample sizes for the sampling bound must be positive")
    if lam < 0.0 or lam > 1.0:
        raise ValueError(f"rate outside [0, 1]: {lam!r}")
    beta = _beta(eps)
    floor = 0.5 / k
    if lam < floor:
        lam = floor
    if lam > 1.0 - floor:
        lam = 1.0 - floor
    observed = k * lam
    out = ((n + k) / (n * k)) * (_entropic_expected_upper(observed, beta) - observed)
    cap = 1.0 - lam
    return out if out < cap else cap


def inv_normal_cdf(p: float) -> float:
    """Inverse standard normal CDF (rational approximation + Halley step)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1): {p!r}")
    a, b, c, d = _ICDF_A, _ICDF_B, _ICDF_C, _ICDF_D
    if p < _ICDF_PLOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
             / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    elif p <= 1.0 - _ICDF_PLOW:
        q = p - 0.5
        r = q * q
        x = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
             / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = err * math.sqrt(_TWO_PI) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def binomial_quantile(eps: float, n: float, p: float) -> float:
    """Smallest k with binomial CDF(k; n, p) >= eps.

    Exact summation for n <= 10^4 (k returned as an integer-valued float);
    Gaussian quantile approximation above, where the staircase is
    negligible relative to the count scale.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1): {eps!r}")
    if n <= 0.0:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return float(n)
    if n > 10000.0:
        x = n * p + inv_normal_cdf(eps) * math.sqrt(n * p * (1.0 - p))
        if x < 0.0:
            return 0.0
        return x if x < n else float(n)
    ni = int(n + 0.5)
    if ni < 1:
        return 0.0
    mean = ni * p
    sd = math.sqrt(ni * p * (1.0 - p))
    # 25 sigma leaves < 1e-137 CDF mass below the start point while keeping
    # the seed pmf representable; the recursion would stick at 0 otherwise.
    k0 = int(math.floor(mean - 25.0 * sd - 5.0))
    if k0 < 0:
        k0 = 0
    lnp = math.log(p)
    lnq = math.log(1.0 - p)
    lpmf = (math.lgamma(ni + 1.0) - math.lgamma(k0 + 1.0) - math.lgamma(ni - k0 + 1.0)
            + k0 * lnp + (ni - k0) * lnq)
    pmf = math.exp(lpmf)
    cdf = pmf
    k = k0
    ratio = p / (1.0 - p)
    while cdf < eps and k < ni:
        k += 1
        pmf *= (ni - k + 1.0) / k * ratio
        cdf += pmf
    return float(k)


def error_correction_leakage(n: float, q: float, eps_cor: float) -> float:
    """Bits disclosed by one-way error correction on n sifted bits at QBER q.

    Finite-size approximation built from the binomial quantile of the error
    count, floored at 1.16 * n * H(q), the efficiency no practical code beats.
    """
    if n <= 0.0:
        raise ValueError("block size must be positive")
    if q < 0.0 or q >= 0.5:
        raise ValueError(f"error rate outside [0, 0.5): {q!r}")
    if q == 0.0:
        return 0.0
    h = binary_entropy(q)
    floor_bits = 1.16 * n * h
    lr = math.log2((1.0 - q) / q)
    finv = binomial_quantile(eps_cor, n, 1.0 - q)
    approx = (n * h + (n * (1.0 - q) - finv - 1.0) * lr
              - 0.5 * math.log2(n) - math.log2(1.0 / eps_cor))
    return approx if approx > floor_bits else floor_bits


def poisson_probs(mu: float, tail_tol: float) -> list:
    """Truncated Poisson pmf with the residual tail folded into the last bin."""
    if mu < 0.0:
        raise ValueError("mean photon number must be nonnegative")
    if tail_tol <= 0.0:
        raise ValueError("tail tolerance must be positive")
    if mu == 0.0:
        return [1.0]
    p = math.exp(-mu)
    probs = [p]
    cum = p
    k = 0
    while 1.0 - cum >= tail_tol and k < 512:
        k += 1
        p = p * (mu / k)
        probs.append(p)
        cum += p
    probs[-1] += 1.0 - cum
    return probs


def click_probability(probs, eta_sys: float, p_dc: float) -> float:
    """Detection probability for one pulse drawn from ``probs``.

    Exact expression sum_k p_k [1 - (1 - p_dc)(1 - eta_sys)^k]; the k = 0
    term reduces to the dark-count probability.
    """
    if eta_sys < 0.0 or eta_sys > 1.0:
        raise ValueError(f"transmissivity outside [0, 1]: {eta_sys!r}")
    one_m = 1.0 - eta_sys
    survive = 1.0 - p_dc
    acc = probs[0] * p_dc
    f = 1.0
    for k in range(1, len(probs)):
        f *= one_m
        acc += probs[k] * (1.0 - survive * f)
    return acc


def error_probability(probs, eta_sys: float, p_dc: float, p_mis: float) -> float:
    """Error-event probability: half the vacuum dark counts plus misaligned clicks."""
    if eta_sys < 0.0 or eta_sys > 1.0:
        raise ValueError(f"transmissivity outside [0, 1]: {eta_sys!r}")
    one_m = 1.0 - eta_sys
    survive = 1.0 - p_dc
    acc = 0.5 * probs[0] * p_dc
    f = 1.0
    for k in range(1, len(probs)):
        f *= one_m
        acc += probs[k] * (1.0 - survive * f) * p_mis
    return acc


def sps_key_length(n_sent: float, p_x: float, eta_tr: float, mean_n: float,
                   g2: float, eta_sys: float, p_dc: float, p_mis: float,
                   eps_sec: float, eps_cor: float, phi_th: float,
                   variant: int) -> tuple:
    """Secure key length of the non-decoy protocol on expected-value counts.

    Fused evaluation used by the optimiser; mirrors the composition of the
    typed module operations. Returns (skl, abort_code, phi_bar).
    """
    m = eta_tr * mean_n
    p2 = 0.5 * g2 * m * m
    p1 = m - 2.0 * p2
    p0 = 1.0 - p1 - p2
    one_m = 1.0 - eta_sys
    survive = 1.0 - p_dc
    c1 = 1.0 - survive * one_m
    c2 = 1.0 - survive * (one_m * one_m)
    p_click = p0 * p_dc + p1 * c1 + p2 * c2
    p_err = 0.5 * p0 * p_dc + (p1 * c1 + p2 * c2) * p_mis
    pmp = p2
    eps_pe = 2.0 * eps_sec / 3.0
    p_z = 1.0 - p_x
    wx = n_sent * p_x * p_x
    wz = n_sent * p_z * p_z
    n_rx = wx * p_click
    n_rz = wz * p_click
    m_x = wx * p_err
    m_z = wz * p_err
    if p_click <= pmp:
        return 0.0, ABORT_PNS_CONDITION, 0.0
    sec_x = n_rx - chernoff_observed_upper(wx * pmp, eps_pe)
    sec_z = n_rz - chernoff_observed_upper(wz * pmp, eps_pe)
    credit = 0.0
    if variant == VARIANT_EXACT_VACUUM:
        # The vacuum contribution (dark-count clicks on empty pulses) is
        # known exactly, so it is credited in full and subtracted without a
        # concentration penalty.
        credit = wx * p0 * p_dc
        sec_x -= credit
        sec_z -= wz * p0 * p_dc
    elif variant == VARIANT_BOUNDED_VACUUM:
        if m > 1.0:
            raise ValueError("bounded-vacuum accounting needs attenuated mean <= 1")
        # Credit the certified lower bound 1 - <n>; subtract the worst-case
        # (all-pulses-empty) dark-count ceiling with its concentration margin.
        credit = wx * (1.0 - m) * p_dc
        sec_x -= chernoff_observed_upper(wx * p_dc, eps_pe)
        sec_z -= chernoff_observed_upper(wz * p_dc, eps_pe)
    if sec_x <= 0.0 or sec_z <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, 0.0
    phi = m_z / sec_z
    if phi > 1.0:
        phi = 1.0
    phi_bar = phi + rate_fluctuation_upper(n_rx, n_rz, phi, eps_pe)
    if phi_bar > 1.0:
        phi_bar = 1.0
    if phi_bar >= phi_th:
        return 0.0, ABORT_PHASE_THRESHOLD, phi_bar
    leak = error_correction_leakage(n_rx, m_x / n_rx, eps_cor)
    skl = (credit + sec_x * (1.0 - binary_entropy(phi_bar)) - leak
           - 2.0 * math.log2(3.0 / eps_sec) - math.log2(2.0 / eps_cor))
    if skl <= 0.0:
        return 0.0, ABORT_NEGATIVE_LENGTH, phi_bar
    return skl, ABORT_NONE, phi_bar


def wcp_key_length(n_sent: float, p_x: float, mu1: float, mu2: float, mu3: float,
                   pmu1: float, pmu2: float, eta_sys: float, p_dc: float,
                   p_mis: float, eps_sec: float, eps_cor: float, phi_th: float,
                   tail_tol: float = 1e-12) -> tuple:
    """Secure key length of the 2-decoy protocol on expected-value counts.

    Fused evaluation used by the optimiser. Returns (skl, abort_code, phi_bar).
    """
    pmu3 = 1.0 - pmu1 - pmu2
    d = mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3
    if d <= 0.0:
        raise ValueError("decoy intensities do not satisfy mu1 > mu2 > mu3")
    mus = (mu1, mu2, mu3)
    pmus = (pmu1, pmu2, pmu3)
    p_z = 1.0 - p_x
    wx = n_sent * p_x * p_x
    wz = n_sent * p_z * p_z
    nx = [0.0, 0.0, 0.0]
    nz = [0.0, 0.0, 0.0]
    mx = [0.0, 0.0, 0.0]
    mz = [0.0, 0.0, 0.0]
    for j in range(3):
        probs = poisson_probs(mus[j], tail_tol)
        pc = click_probability(probs, eta_sys, p_dc)
        pe = error_probability(probs, eta_sys, p_dc, p_mis)
        nx[j] = wx * pmus[j] * pc
        nz[j] = wz * pmus[j] * pc
        mx[j] = wx * pmus[j] * pe
        mz[j] = wz * pmus[j] * pe
    eps_e = eps_sec / 21.0
    scale = (math.exp(mu1) / pmu1, math.exp(mu2) / pmu2, math.exp(mu3) / pmu3)
    nx_lo = [scale[j] * chernoff_expected_lower(nx[j], eps_e) for j in range(3)]
    nx_hi = [scale[j] * chernoff_expected_upper(nx[j], eps_e) for j in range(3)]
    nz_lo = [scale[j] * chernoff_expected_lower(nz[j], eps_e) for j in range(3)]
    nz_hi = [scale[j] * chernoff_expected_upper(nz[j], eps_e) for j in range(3)]
    mz_hi2 = scale[1] * chernoff_expected_upper(mz[1], eps_e)
    mz_lo3 = scale[2] * chernoff_expected_lower(mz[2], eps_e)
    tau0 = (pmu1 * math.exp(-mu1) + pmu2 * math.exp(-mu2) + pmu3 * math.exp(-mu3))
    tau1 = (pmu1 * math.exp(-mu1) * mu1 + pmu2 * math.exp(-mu2) * mu2
            + pmu3 * math.exp(-mu3) * mu3)
    dmu = mu2 - mu3
    s0x = tau0 * (mu2 * nx_lo[2] - mu3 * nx_hi[1]) / dmu
    s0x = _clamp(s0x, 0.0, wx * tau0)
    s0z = tau0 * (mu2 * nz_lo[2] - mu3 * nz_hi[1]) / dmu
    s0z = _clamp(s0z, 0.0, wz * tau0)
    ratio = (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1)
    s1x = tau1 * mu1 * (nx_lo[1] - nx_hi[2] - ratio * (nx_hi[0] - s0x / tau0)) / d
    s1x = _clamp(s1x, 0.0, wx * tau1)
    s1z = tau1 * mu1 * (nz_lo[1] - nz_hi[2] - ratio * (nz_hi[0] - s0z / tau0)) / d
    s1z = _clamp(s1z, 0.0, wz * tau1)
    v1 = tau1 * (mz_hi2 - mz_lo3) / dmu
    v1 = _clamp(v1, 0.0, wz * tau1)
    # The decoy algebra bounds expectations; convert back to observed-count
    # bounds before they enter the key formula and the sampling bound.
    s0x = chernoff_observed_lower(s0x, eps_e)
    s1x = chernoff_observed_lower(s1x, eps_e)
    s1z = chernoff_observed_lower(s1z, eps_e)
    v1 = _clamp(chernoff_observed_upper(v1, eps_e), 0.0, wz * tau1)
    if s1x <= 0.0 or s1z <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, 0.0
    rate = v1 / s1z
    if rate > 1.0:
        rate = 1.0
    phi_bar = rate + rate_fluctuation_upper(s1x, s1z, rate, eps_e)
    if phi_bar > 1.0:
        phi_bar = 1.0
    if phi_bar >= phi_th:
        return 0.0, ABORT_PHASE_THRESHOLD, phi_bar
    n_tot = nx[0] + nx[1] + nx[2]
    m_tot = mx[0] + mx[1] + mx[2]
    if n_tot <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, phi_bar
    leak = error_correction_leakage(n_tot, m_tot / n_tot, eps_cor)
    skl = (s0x + s1x * (1.0 - binary_entropy(phi_bar)) - leak
           - 6.0 * math.log2(21.0 / eps_sec) - math.log2(2.0 / eps_cor))
    if skl <= 0.0:
        return 0.0, ABORT_NEGATIVE_LENGTH, phi_bar
    return skl, ABORT_NONE, phi_bar


def _clamp(x: float, lo: float, hi: float) -> float:
    if x < lo:
        return lo
    return x if x < hi else hi
