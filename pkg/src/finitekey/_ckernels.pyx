# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for finite-key secure-key-length evaluation.

Mirror of ``finitekey._kernels_py``; keep both in lockstep, including the
order of floating-point operations (the build disables FMA contraction so
the two backends agree to a few ulps).
"""

from libc.math cimport erfc, exp, floor, lgamma, log, log2, sqrt

BACKEND_NAME = "cython"

ABORT_NONE = 0
ABORT_PHASE_THRESHOLD = 1
ABORT_PNS_CONDITION = 2
ABORT_NEGATIVE_LENGTH = 3

VARIANT_PLAIN = 0
VARIANT_EXACT_VACUUM = 1
VARIANT_BOUNDED_VACUUM = 2

cdef double _TWO_PI = 6.283185307179586476925287
cdef int _POISSON_CAP = 520

cdef double _A0 = -3.969683028665376e+01, _A1 = 2.209460984245205e+02
cdef double _A2 = -2.759285104469687e+02, _A3 = 1.383577518672690e+02
cdef double _A4 = -3.066479806614716e+01, _A5 = 2.506628277459239e+00
cdef double _B0 = -5.447609879822406e+01, _B1 = 1.615858368580409e+02
cdef double _B2 = -1.556989798598866e+02, _B3 = 6.680131188771972e+01
cdef double _B4 = -1.328068155288572e+01
cdef double _C0 = -7.784894002430293e-03, _C1 = -3.223964580411365e-01
cdef double _C2 = -2.400758277161838e+00, _C3 = -2.549732539343734e+00
cdef double _C4 = 4.374664141464968e+00, _C5 = 2.938163982698783e+00
cdef double _D0 = 7.784695709041462e-03, _D1 = 3.224671290700398e-01
cdef double _D2 = 2.445134137142996e+00, _D3 = 3.754408661907416e+00
cdef double _ICDF_PLOW = 0.02425


cdef inline double _entropy(double e):
    if e == 0.0 or e == 1.0:
        return 0.0
    return -(e * log2(e) + (1.0 - e) * log2(1.0 - e))


def binary_entropy(double e):
    """Binary entropy H(e) in bits, with H(0) = H(1) = 0 by continuity."""
    if e < 0.0 or e > 1.0:
        raise ValueError(f"binary entropy argument outside [0, 1]: {e!r}")
    return _entropy(e)


cdef inline double _beta_of(double eps) except -1.0:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1): {eps!r}")
    return -log(eps)


cdef inline double _obs_upper(double expected, double beta):
    return expected + 0.5 * (beta + sqrt(8.0 * beta * expected + beta * beta))


cdef inline double _obs_lower(double expected, double beta):
    cdef double low = expected - sqrt(2.0 * beta * expected)
    return low if low > 0.0 else 0.0


cdef inline double _exp_upper(double observed, double beta):
    return observed + beta + sqrt(beta * beta + 2.0 * beta * observed)


cdef inline double _exp_lower(double observed, double beta):
    cdef double low = observed - 0.5 * (sqrt(beta * beta + 8.0 * beta * observed) - beta)
    return low if low > 0.0 else 0.0


def chernoff_observed_upper(double expected, double eps):
    """Upper bound on an observed Bernoulli-sum count given its expectation."""
    if expected < 0.0:
        raise ValueError("expected count must be nonnegative")
    return _obs_upper(expected, _beta_of(eps))


def chernoff_observed_lower(double expected, double eps):
    """Lower-tail companion: Pr[observed <= bound] <= eps, floored at 0."""
    if expected < 0.0:
        raise ValueError("expected count must be nonnegative")
    return _obs_lower(expected, _beta_of(eps))


def chernoff_expected_upper(double observed, double eps):
    """Largest expectation consistent with an observed count."""
    if observed < 0.0:
        raise ValueError("observed count must be nonnegative")
    return _exp_upper(observed, _beta_of(eps))


def chernoff_expected_lower(double observed, double eps):
    """Smallest expectation consistent with an observed count, floored at 0."""
    if observed < 0.0:
        raise ValueError("observed count must be nonnegative")
    return _exp_lower(observed, _beta_of(eps))


cdef double _entropic_expected_upper(double observed, double beta):
    cdef double e, g, step
    cdef int i
    if observed <= 0.0:
        return beta
    e = observed + beta + sqrt(beta * beta + 2.0 * beta * observed)
    for i in range(60):
        g = e - observed + observed * log(observed / e) - beta
        step = g / (1.0 - observed / e)
        e -= step
        if step <= 1e-13 * e and step >= -1e-13 * e:
            break
    return e


cdef double _rate_fluct(double n, double k, double lam, double beta):
    cdef double floor_lam, observed, out, cap
    floor_lam = 0.5 / k
    if lam < floor_lam:
        lam = floor_lam
    if lam > 1.0 - floor_lam:
        lam = 1.0 - floor_lam
    observed = k * lam
    out = ((n + k) / (n * k)) * (_entropic_expected_upper(observed, beta) - observed)
    cap = 1.0 - lam
    return out if out < cap else cap


def rate_fluctuation_upper(double n, double k, double lam, double eps):
    """Tail increment for random sampling without replacement.

    Chernoff expected-value inversion of the binomial dominating the
    hypergeometric observation; see the pure-Python mirror for the full
    construction notes.
    """
    if n <= 0.0 or k <= 0.0:
        raise ValueError("sample sizes for the sampling bound must be positive")
    if lam < 0.0 or lam > 1.0:
        raise ValueError(f"rate outside [0, 1]: {lam!r}")
    return _rate_fluct(n, k, lam, _beta_of(eps))


cdef double _inv_normal(double p):
    cdef double q, r, x, err, u
    if p < _ICDF_PLOW:
        q = sqrt(-2.0 * log(p))
        x = ((((((_C0 * q + _C1) * q + _C2) * q + _C3) * q + _C4) * q + _C5)
             / ((((_D0 * q + _D1) * q + _D2) * q + _D3) * q + 1.0))
    elif p <= 1.0 - _ICDF_PLOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A0 * r + _A1) * r + _A2) * r + _A3) * r + _A4) * r + _A5) * q
             / (((((_B0 * r + _B1) * r + _B2) * r + _B3) * r + _B4) * r + 1.0))
    else:
        q = sqrt(-2.0 * log(1.0 - p))
        x = -((((((_C0 * q + _C1) * q + _C2) * q + _C3) * q + _C4) * q + _C5)
              / ((((_D0 * q + _D1) * q + _D2) * q + _D3) * q + 1.0))
    err = 0.5 * erfc(-x / sqrt(2.0)) - p
    u = err * sqrt(_TWO_PI) * exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def inv_normal_cdf(double p):
    """Inverse standard normal CDF (rational approximation + Halley step)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1): {p!r}")
    return _inv_normal(p)


cdef double _binom_quantile(double eps, double n, double p):
    cdef double x, mean, sd, lnp, lnq, lpmf, pmf, cdf, ratio
    cdef long ni, k0, k
    if n <= 0.0:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return n
    if n > 10000.0:
        x = n * p + _inv_normal(eps) * sqrt(n * p * (1.0 - p))
        if x < 0.0:
            return 0.0
        return x if x < n else n
    ni = <long> (n + 0.5)
    if ni < 1:
        return 0.0
    mean = ni * p
    sd = sqrt(ni * p * (1.0 - p))
    k0 = <long> floor(mean - 25.0 * sd - 5.0)
    if k0 < 0:
        k0 = 0
    lnp = log(p)
    lnq = log(1.0 - p)
    lpmf = (lgamma(ni + 1.0) - lgamma(k0 + 1.0) - lgamma(ni - k0 + 1.0)
            + k0 * lnp + (ni - k0) * lnq)
    pmf = exp(lpmf)
    cdf = pmf
    k = k0
    ratio = p / (1.0 - p)
    while cdf < eps and k < ni:
        k += 1
        pmf *= (ni - k + 1.0) / k * ratio
        cdf += pmf
    return <double> k


def binomial_quantile(double eps, double n, double p):
    """Smallest k with binomial CDF(k; n, p) >= eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1): {eps!r}")
    return _binom_quantile(eps, n, p)


cdef double _ec_leakage(double n, double q, double eps_cor) except -1.0:
    cdef double h, floor_bits, lr, finv, approx
    if q == 0.0:
        return 0.0
    h = _entropy(q)
    floor_bits = 1.16 * n * h
    lr = log2((1.0 - q) / q)
    finv = _binom_quantile(eps_cor, n, 1.0 - q)
    approx = (n * h + (n * (1.0 - q) - finv - 1.0) * lr
              - 0.5 * log2(n) - log2(1.0 / eps_cor))
    return approx if approx > floor_bits else floor_bits


def error_correction_leakage(double n, double q, double eps_cor):
    """Bits disclosed by one-way error correction, floored at 1.16 n H(q)."""
    if n <= 0.0:
        raise ValueError("block size must be positive")
    if q < 0.0 or q >= 0.5:
        raise ValueError(f"error rate outside [0, 0.5): {q!r}")
    if not 0.0 < eps_cor < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1): {eps_cor!r}")
    return _ec_leakage(n, q, eps_cor)


cdef int _poisson_fill(double mu, double tail_tol, double* out):
    """Fill ``out`` with the truncated pmf; returns the number of bins."""
    cdef double p, cum
    cdef int k
    if mu == 0.0:
        out[0] = 1.0
        return 1
    p = exp(-mu)
    out[0] = p
    cum = p
    k = 0
    while 1.0 - cum >= tail_tol and k < 511:
        k += 1
        p = p * (mu / k)
        out[k] = p
        cum += p
    out[k] += 1.0 - cum
    return k + 1


def poisson_probs(double mu, double tail_tol):
    """Truncated Poisson pmf with the residual tail folded into the last bin."""
    cdef double buf[520]
    cdef int n, i
    if mu < 0.0:
        raise ValueError("mean photon number must be nonnegative")
    if tail_tol <= 0.0:
        raise ValueError("tail tolerance must be positive")
    n = _poisson_fill(mu, tail_tol, buf)
    return [buf[i] for i in range(n)]


cdef double _click_c(double* probs, int n, double eta_sys, double p_dc):
    cdef double one_m = 1.0 - eta_sys
    cdef double survive = 1.0 - p_dc
    cdef double acc = probs[0] * p_dc
    cdef double f = 1.0
    cdef int k
    for k in range(1, n):
        f *= one_m
        acc += probs[k] * (1.0 - survive * f)
    return acc


cdef double _error_c(double* probs, int n, double eta_sys, double p_dc, double p_mis):
    cdef double one_m = 1.0 - eta_sys
    cdef double survive = 1.0 - p_dc
    cdef double acc = 0.5 * probs[0] * p_dc
    cdef double f = 1.0
    cdef int k
    for k in range(1, n):
        f *= one_m
        acc += probs[k] * (1.0 - survive * f) * p_mis
    return acc


def click_probability(probs, double eta_sys, double p_dc):
    """Detection probability for one pulse drawn from ``probs``."""
    cdef double one_m, survive, acc, f
    cdef Py_ssize_t k, n
    if eta_sys < 0.0 or eta_sys > 1.0:
        raise ValueError(f"transmissivity outside [0, 1]: {eta_sys!r}")
    one_m = 1.0 - eta_sys
    survive = 1.0 - p_dc
    n = len(probs)
    acc = <double> probs[0] * p_dc
    f = 1.0
    for k in range(1, n):
        f *= one_m
        acc += <double> probs[k] * (1.0 - survive * f)
    return acc


def error_probability(probs, double eta_sys, double p_dc, double p_mis):
    """Error-event probability: half the vacuum dark counts plus misaligned clicks."""
    cdef double one_m, survive, acc, f
    cdef Py_ssize_t k, n
    if eta_sys < 0.0 or eta_sys > 1.0:
        raise ValueError(f"transmissivity outside [0, 1]: {eta_sys!r}")
    one_m = 1.0 - eta_sys
    survive = 1.0 - p_dc
    n = len(probs)
    acc = 0.5 * <double> probs[0] * p_dc
    f = 1.0
    for k in range(1, n):
        f *= one_m
        acc += <double> probs[k] * (1.0 - survive * f) * p_mis
    return acc


def sps_key_length(double n_sent, double p_x, double eta_tr, double mean_n,
                   double g2, double eta_sys, double p_dc, double p_mis,
                   double eps_sec, double eps_cor, double phi_th, int variant):
    """Secure key length of the non-decoy protocol on expected-value counts.

    Returns (skl, abort_code, phi_bar).
    """
    cdef double m, p2, p1, p0, one_m, survive, c1, c2, p_click, p_err, pmp
    cdef double eps_pe, p_z, wx, wz, n_rx, n_rz, m_x, m_z, beta_pe
    cdef double sec_x, sec_z, credit, phi, phi_bar, leak, skl
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
    beta_pe = _beta_of(eps_pe)
    sec_x = n_rx - _obs_upper(wx * pmp, beta_pe)
    sec_z = n_rz - _obs_upper(wz * pmp, beta_pe)
    credit = 0.0
    if variant == VARIANT_EXACT_VACUUM:
        credit = wx * p0 * p_dc
        sec_x -= credit
        sec_z -= wz * p0 * p_dc
    elif variant == VARIANT_BOUNDED_VACUUM:
        if m > 1.0:
            raise ValueError("bounded-vacuum accounting needs attenuated mean <= 1")
        credit = wx * (1.0 - m) * p_dc
        sec_x -= _obs_upper(wx * p_dc, beta_pe)
        sec_z -= _obs_upper(wz * p_dc, beta_pe)
    if sec_x <= 0.0 or sec_z <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, 0.0
    phi = m_z / sec_z
    if phi > 1.0:
        phi = 1.0
    phi_bar = phi + _rate_fluct(n_rx, n_rz, phi, beta_pe)
    if phi_bar > 1.0:
        phi_bar = 1.0
    if phi_bar >= phi_th:
        return 0.0, ABORT_PHASE_THRESHOLD, phi_bar
    leak = _ec_leakage(n_rx, m_x / n_rx, eps_cor)
    skl = (credit + sec_x * (1.0 - _entropy(phi_bar)) - leak
           - 2.0 * log2(3.0 / eps_sec) - log2(2.0 / eps_cor))
    if skl <= 0.0:
        return 0.0, ABORT_NEGATIVE_LENGTH, phi_bar
    return skl, ABORT_NONE, phi_bar


def wcp_key_length(double n_sent, double p_x, double mu1, double mu2, double mu3,
                   double pmu1, double pmu2, double eta_sys, double p_dc,
                   double p_mis, double eps_sec, double eps_cor, double phi_th,
                   double tail_tol=1e-12):
    """Secure key length of the 2-decoy protocol on expected-value counts.

    Returns (skl, abort_code, phi_bar).
    """
    cdef double buf[520]
    cdef double nx[3]
    cdef double nz[3]
    cdef double mx[3]
    cdef double mz[3]
    cdef double nx_lo[3]
    cdef double nx_hi[3]
    cdef double nz_lo[3]
    cdef double nz_hi[3]
    cdef double mus[3]
    cdef double pmus[3]
    cdef double scale[3]
    cdef double pmu3, d, p_z, wx, wz, pc, pe, eps_e, beta_e
    cdef double mz_hi2, mz_lo3, tau0, tau1, dmu, s0x, s0z, ratio, s1x, s1z, v1
    cdef double rate, phi_bar, n_tot, m_tot, leak, skl, cap
    cdef int j, nlen
    pmu3 = 1.0 - pmu1 - pmu2
    d = mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3
    if d <= 0.0:
        raise ValueError("decoy intensities do not satisfy mu1 > mu2 > mu3")
    mus[0] = mu1; mus[1] = mu2; mus[2] = mu3
    pmus[0] = pmu1; pmus[1] = pmu2; pmus[2] = pmu3
    p_z = 1.0 - p_x
    wx = n_sent * p_x * p_x
    wz = n_sent * p_z * p_z
    for j in range(3):
        nlen = _poisson_fill(mus[j], tail_tol, buf)
        pc = _click_c(buf, nlen, eta_sys, p_dc)
        pe = _error_c(buf, nlen, eta_sys, p_dc, p_mis)
        nx[j] = wx * pmus[j] * pc
        nz[j] = wz * pmus[j] * pc
        mx[j] = wx * pmus[j] * pe
        mz[j] = wz * pmus[j] * pe
    eps_e = eps_sec / 21.0
    beta_e = _beta_of(eps_e)
    for j in range(3):
        scale[j] = exp(mus[j]) / pmus[j]
        nx_lo[j] = scale[j] * _exp_lower(nx[j], beta_e)
        nx_hi[j] = scale[j] * _exp_upper(nx[j], beta_e)
        nz_lo[j] = scale[j] * _exp_lower(nz[j], beta_e)
        nz_hi[j] = scale[j] * _exp_upper(nz[j], beta_e)
    mz_hi2 = scale[1] * _exp_upper(mz[1], beta_e)
    mz_lo3 = scale[2] * _exp_lower(mz[2], beta_e)
    tau0 = (pmu1 * exp(-mu1) + pmu2 * exp(-mu2) + pmu3 * exp(-mu3))
    tau1 = (pmu1 * exp(-mu1) * mu1 + pmu2 * exp(-mu2) * mu2
            + pmu3 * exp(-mu3) * mu3)
    dmu = mu2 - mu3
    s0x = tau0 * (mu2 * nx_lo[2] - mu3 * nx_hi[1]) / dmu
    cap = wx * tau0
    s0x = 0.0 if s0x < 0.0 else (s0x if s0x < cap else cap)
    s0z = tau0 * (mu2 * nz_lo[2] - mu3 * nz_hi[1]) / dmu
    cap = wz * tau0
    s0z = 0.0 if s0z < 0.0 else (s0z if s0z < cap else cap)
    ratio = (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1)
    s1x = tau1 * mu1 * (nx_lo[1] - nx_hi[2] - ratio * (nx_hi[0] - s0x / tau0)) / d
    cap = wx * tau1
    s1x = 0.0 if s1x < 0.0 else (s1x if s1x < cap else cap)
    s1z = tau1 * mu1 * (nz_lo[1] - nz_hi[2] - ratio * (nz_hi[0] - s0z / tau0)) / d
    cap = wz * tau1
    s1z = 0.0 if s1z < 0.0 else (s1z if s1z < cap else cap)
    v1 = tau1 * (mz_hi2 - mz_lo3) / dmu
    cap = wz * tau1
    v1 = 0.0 if v1 < 0.0 else (v1 if v1 < cap else cap)
    # The decoy algebra bounds expectations; convert back to observed-count
    # bounds before they enter the key formula and the sampling bound.
    s0x = _obs_lower(s0x, beta_e)
    s1x = _obs_lower(s1x, beta_e)
    s1z = _obs_lower(s1z, beta_e)
    v1 = _obs_upper(v1, beta_e)
    v1 = v1 if v1 < cap else cap
    if s1x <= 0.0 or s1z <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, 0.0
    rate = v1 / s1z
    if rate > 1.0:
        rate = 1.0
    phi_bar = rate + _rate_fluct(s1x, s1z, rate, beta_e)
    if phi_bar > 1.0:
        phi_bar = 1.0
    if phi_bar >= phi_th:
        return 0.0, ABORT_PHASE_THRESHOLD, phi_bar
    n_tot = nx[0] + nx[1] + nx[2]
    m_tot = mx[0] + mx[1] + mx[2]
    if n_tot <= 0.0:
        return 0.0, ABORT_PNS_CONDITION, phi_bar
    leak = _ec_leakage(n_tot, m_tot / n_tot, eps_cor)
    skl = (s0x + s1x * (1.0 - _entropy(phi_bar)) - leak
           - 6.0 * log2(21.0 / eps_sec) - log2(2.0 / eps_cor))
    if skl <= 0.0:
        return 0.0, ABORT_NEGATIVE_LENGTH, phi_bar
    return skl, ABORT_NONE, phi_bar
