"""Spectral Sobolev norms, source frequencies, the Hölder exponent and certificates.

The negative-order norm used throughout is the spectral one,
``||g||_s^2 = sum_j (1 + mu_j^2)^s <g, phi_j>_q^2``; it stands in for the
H^{-1} norm, the equivalence constant being absorbed into fitted constants.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ReconstructionError, SpectralError, ValidationError
from .reconstruct import tol_freq_match

TOL_TAIL = 1e-4
_LOG_2_OVER_PI = math.log(2.0 / math.pi)


def spectral_coefficients(g, eigensystem):
    """Weighted inner products ``<g, phi_j>_q`` for every resolved pair."""
    medium = eigensystem.medium
    weights = medium.grid.trapezoid_weights() * medium.index
    return eigensystem.modes.T @ (weights * np.asarray(g, dtype=float))


def spectral_norm(g, eigensystem, s, *, tol_tail=TOL_TAIL):
    """``(sum_j (1 + mu_j^2)^s <g, phi_j>_q^2)^{1/2}`` over the resolved pairs.

    For ``s >= 0`` the last tenth of the resolved modes must carry at most
    ``tol_tail`` of the sum, otherwise ``SpectralError("TAIL_NOT_RESOLVED")``.
    """
    psi = spectral_coefficients(g, eigensystem)
    terms = (1.0 + eigensystem.mus**2) ** s * psi**2
    total = float(np.sum(terms))
    if s >= 0 and total > 0:
        n_tail = max(1, len(terms) // 10)
        tail = float(np.sum(terms[-n_tail:]))
        if tail > tol_tail * total:
            raise SpectralError(
                "TAIL_NOT_RESOLVED",
                f"last {n_tail} modes carry {tail / total:.2e} of the s = {s} sum",
            )
    return math.sqrt(total)


def source_frequency(source, medium, eigensystem, *, tol_tail=TOL_TAIL):
    """``(mu_f, mu_f_tilde)``.

    ``mu_f = ||f||_{L^2} / ||f||_{-1}`` with the grid L^2 norm, and
    ``mu_f_tilde = ||g||_0 / ||g||_{-1}`` for ``g = f / (1 + q)``.
    """
    f = np.asarray(source.f_values, dtype=float)
    if not np.any(f):
        raise ValidationError("ZERO_SOURCE", "source frequency is undefined for f = 0")
    grid = medium.grid
    mu_f = math.sqrt(grid.integrate(f**2)) / spectral_norm(f, eigensystem, -1)
    g = f / medium.index
    mu_tilde = spectral_norm(g, eigensystem, 0, tol_tail=tol_tail) / spectral_norm(g, eigensystem, -1)
    return mu_f, mu_tilde


def _log_expm1(x):
    """``log(e^x - 1)`` without overflow."""
    return x + math.log1p(-math.exp(-x)) if x > 1.0 else math.log(math.expm1(x))


def _eta_log_ratio(s, K, n_h):
    if not s > K:
        raise ValidationError("DOMAIN", f"eta needs s > K, got s = {s}, K = {K}")
    if not K > 0 or int(n_h) != n_h or n_h < 1:
        raise ValidationError("DOMAIN", f"eta needs K > 0 and integer n_h >= 1 (K = {K}, n_h = {n_h})")
    # d = log((e^K - 1)^n_h) - log((e^s - 1)^n_h) < 0
    d = n_h * (_log_expm1(K) - _log_expm1(s))
    # ratio = e^d / sqrt(1 - e^{2d})
    return d - 0.5 * math.log(-math.expm1(2.0 * d))


def eta_exponent(s, K, n_h):
    """``(2/pi) arctan((e^K - 1)^n_h / ((e^s - 1)^{2 n_h} - (e^K - 1)^{2 n_h})^{1/2})``.

    Evaluated through logarithms; underflows gracefully to 0 for large
    ``s * n_h`` (see :func:`log_eta_exponent` for the exact logarithm).
    """
    log_ratio = _eta_log_ratio(s, K, n_h)
    if log_ratio > 700:
        return 1.0 - (2.0 / math.pi) * math.atan(math.exp(-log_ratio))
    return (2.0 / math.pi) * math.atan(math.exp(log_ratio))


def log_eta_exponent(s, K, n_h):
    """Natural logarithm of :func:`eta_exponent`, finite where ``eta`` underflows."""
    log_ratio = _eta_log_ratio(s, K, n_h)
    if log_ratio < -20:
        # arctan(t) = t (1 - t^2/3 + ...)
        return _LOG_2_OVER_PI + log_ratio + math.log1p(-math.exp(2 * log_ratio) / 3.0)
    return math.log(eta_exponent(s, K, n_h))


@dataclass
class StabilityReport:
    mu_f: float
    mu_f_tilde: float
    K: float
    n_h: int
    eta: float
    data_sup: float
    bound_rhs: float
    holds: bool
    C_empirical: float
    norm_h_minus_1: float = float("nan")
    regime: str = "theorem1"
    eps: float = float("nan")
    flags: list = field(default_factory=list)
    two_constants: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, float) and not math.isfinite(val):
                out[key] = None if math.isnan(val) else str(val)
        return out


def data_sup(records, k_max):
    """``sup|Im phi(0, .)| + sup|Im phi(1, .)|`` over records with ``0 < k <= k_max``."""
    band = [r for r in records if 0 < r.k <= k_max]
    if not band:
        return 0.0
    return max(abs(r.im_phi_0) for r in band) + max(abs(r.im_phi_1) for r in band)


def _check_band(eigensystem, records, k_max):
    ks = np.array([r.k for r in records])
    for pair in eigensystem.pairs:
        if 0.0 < pair.mu <= k_max:
            if ks.size == 0 or not np.any(np.abs(ks - pair.mu) <= tol_freq_match(pair.mu)):
                raise ReconstructionError(
                    "INSUFFICIENT_BAND", f"no passive record at mu_{pair.j} = {pair.mu!r}"
                )


def certify_theorem1(source, medium, eigensystem, passive, *, C0=None):
    """Empirical Lipschitz certificate on the band ``(0, sqrt(2) mu_f_tilde]``.

    The band constant is ``c_0 = sqrt(2) mu_f_tilde / mu_f``.  ``C_empirical``
    is the smallest ``C_0`` for which
    ``||f||_{-1} <= C_0 (mu_f + 1) (sup|Im phi(0,.)| + sup|Im phi(1,.)|)``.
    With ``C0`` given, ``bound_rhs`` and ``holds`` use it instead.
    """
    mu_f, mu_tilde = source_frequency(source, medium, eigensystem)
    band = math.sqrt(2.0) * mu_tilde
    if band > eigensystem.mu_max_resolved:
        raise ReconstructionError(
            "INSUFFICIENT_BAND", f"eigensystem resolved to {eigensystem.mu_max_resolved} < {band}"
        )
    _check_band(eigensystem, passive, band)
    norm = spectral_norm(source.f_values, eigensystem, -1)
    sup = data_sup(passive, band)
    c_emp = norm / ((mu_f + 1.0) * sup) if sup > 0 else math.inf
    if C0 is None:
        rhs = c_emp * (mu_f + 1.0) * sup if math.isfinite(c_emp) else math.inf
        holds = math.isfinite(c_emp)
    else:
        rhs = C0 * (mu_f + 1.0) * sup
        holds = norm <= rhs
    return StabilityReport(
        mu_f=mu_f, mu_f_tilde=mu_tilde, K=band, n_h=0, eta=1.0, data_sup=sup, bound_rhs=rhs,
        holds=bool(holds), C_empirical=c_emp, norm_h_minus_1=norm, regime="theorem1",
    )


def certify_theorem2(source, medium, eigensystem, passive, K, *, C0, strip=None, w_field=None,
                     n_h=1, check_ks=(), slack=0.01):
    """Conditional Hölder certificate from data on the short band ``(0, K)``.

    ``eps = C0 (mu_f + 1) data_sup(0, K)``; the bound is ``C^{1-eta} eps^eta``
    with ``eta = eta(sqrt(2) mu_f_tilde, K, n_h)`` and
    ``C = C0 (mu_f + 1) 2 M_f``, which is what chaining the band estimate
    with the two-constants inequality produces.  ``eps >= 1`` is reported in
    ``flags`` as ``EPS_TOO_LARGE``; zero data for a nonzero source as
    ``CONTRADICTION``.  When ``strip`` and ``w_field`` are given the
    two-constants inequality is checked directly at ``check_ks``.
    """
    from .continuation import two_constants_check

    mu_f, mu_tilde = source_frequency(source, medium, eigensystem)
    band = math.sqrt(2.0) * mu_tilde
    if K >= band:
        report = certify_theorem1(source, medium, eigensystem, passive, C0=C0)
        report.regime = "reduced_to_theorem1"
        report.K = K
        return report
    norm = spectral_norm(source.f_values, eigensystem, -1)
    sup = data_sup(passive, K)
    eps = C0 * (mu_f + 1.0) * sup
    flags = []
    if eps >= 1.0:
        flags.append("EPS_TOO_LARGE")
    eta = eta_exponent(band, K, n_h)
    m_f = strip.M_f_estimate if strip is not None else math.nan
    big_c = C0 * (mu_f + 1.0) * 2.0 * m_f if strip is not None else math.nan
    if sup == 0.0:
        flags.append("CONTRADICTION")
        rhs = 0.0
    elif strip is not None:
        rhs = big_c ** (1.0 - eta) * eps**eta
    else:
        rhs = math.nan
    holds = norm <= rhs if math.isfinite(rhs) else False
    table = []
    if strip is not None and w_field is not None:
        for k in check_ks:
            lhs, rhs_k, ok = two_constants_check(strip, w_field, K, k, slack=slack)
            table.append({"k": float(k), "lhs": lhs, "rhs": rhs_k, "holds": bool(ok)})
    return StabilityReport(
        mu_f=mu_f, mu_f_tilde=mu_tilde, K=K, n_h=int(n_h), eta=eta, data_sup=sup, bound_rhs=rhs,
        holds=bool(holds), C_empirical=C0, norm_h_minus_1=norm, regime="theorem2", eps=eps,
        flags=flags, two_constants=table,
    )
