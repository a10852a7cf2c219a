"""Source recovery from passive data read at the Neumann eigenfrequencies.

At ``k = mu_j`` the real part ``w`` of the field satisfies the Neumann-type
system whose boundary fluxes are ``k Im phi(0, k)`` and ``-k Im phi(1, k)``;
testing it against ``phi_j`` cancels the volume terms and leaves

    f_j = int f phi_j = -mu_j (phi_j(0) Im phi(0, mu_j) + phi_j(1) Im phi(1, mu_j)).

On the node grid this holds exactly for the discrete eigenpairs, so records
must be taken at the computed eigenfrequencies.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ReconstructionError, SpectralError, ValidationError

DEFAULT_ZERO_MODE_KS = (1e-2, 5e-3, 2.5e-3)
# small-k solves lose about log10(1/(h k)^2) digits; corrections below this are noise
_EXTRAP_FLOOR = 1e-9


def tol_freq_match(mu):
    return 1e-8 * max(1.0, mu)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Coefficients ``(j, f_j)`` of the expansion of ``f / (1 + q)``."""

    coeffs: tuple
    truncation: int
    provenance: str = "from_passive"

    def __post_init__(self):
        coeffs = tuple((int(j), float(c)) for j, c in self.coeffs)
        idx = [j for j, _ in coeffs]
        if len(set(idx)) != len(idx):
            raise ValidationError("BAD_COEFFS", "duplicate coefficient indices")
        if any(not 1 <= j <= self.truncation for j in idx):
            raise ValidationError("BAD_COEFFS", f"indices must lie in 1..{self.truncation}")
        if self.provenance not in ("from_passive", "from_inner_product"):
            raise ValidationError("BAD_COEFFS", f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "coeffs", tuple(sorted(coeffs)))

    def as_dict(self):
        return dict(self.coeffs)

    def values(self):
        return np.array([c for _, c in self.coeffs])


def coefficient_from_passive(pair, record):
    """``f_j`` from one passive record taken at ``k = mu_j``."""
    if pair.mu == 0.0:
        raise ReconstructionError("ZERO_MODE", "mu_1 = 0: use zero_mode_from_passive")
    if abs(record.k - pair.mu) > tol_freq_match(pair.mu):
        raise ReconstructionError(
            "FREQ_MISMATCH", f"record at k = {record.k!r} does not match mu_{pair.j} = {pair.mu!r}"
        )
    return -pair.mu * (pair.boundary_0 * record.im_phi_0 + pair.boundary_1 * record.im_phi_1)


def _neville_at_zero(t, y):
    """Polynomial extrapolation of ``y(t)`` to ``t = 0``; returns the diagonal estimates."""
    t = list(t)
    table = list(y)
    diagonal = [table[0]]
    n = len(t)
    for level in range(1, n):
        for i in range(n - level):
            ti, tj = t[i], t[i + level]
            table[i] = (tj * table[i] - ti * table[i + 1]) / (tj - ti)
        diagonal.append(table[0])
    return diagonal


def zero_mode_from_passive(pair1, records, *, mu_next=None, strict=True):
    """Limit of ``-k (phi_1(0) Im phi(0, k) + phi_1(1) Im phi(1, k))`` as ``k -> 0+``.

    The quantity differs from ``f_1`` by a term even in ``k`` starting at
    ``k^2``, so the samples are extrapolated polynomially in ``k^2``.
    Raises ``EXTRAPOLATION_UNSTABLE`` when the successive corrections grow,
    unless ``strict=False``; noisy records make the corrections erratic while
    the extrapolation itself only amplifies the noise by about 2.
    """
    if pair1.mu != 0.0:
        raise ReconstructionError("NOT_ZERO_MODE", f"pair {pair1.j} has mu = {pair1.mu}")
    recs = sorted(records, key=lambda r: -r.k)
    if len(recs) < 2:
        raise ReconstructionError("EXTRAPOLATION_UNSTABLE", "need at least two small-k records")
    if mu_next is not None and recs[0].k >= mu_next:
        raise ReconstructionError(
            "FREQ_MISMATCH", f"zero-mode samples must lie below mu_2 = {mu_next}"
        )
    ks = np.array([r.k for r in recs])
    raw = [-r.k * (pair1.boundary_0 * r.im_phi_0 + pair1.boundary_1 * r.im_phi_1) for r in recs]
    diag = _neville_at_zero(ks**2, raw)
    steps = np.abs(np.diff(diag))
    scale = max(1.0, float(np.max(np.abs(raw))))
    if strict and steps.size > 1 and steps[-1] > steps[0] and steps[-1] > _EXTRAP_FLOOR * scale:
        raise ReconstructionError(
            "EXTRAPOLATION_UNSTABLE", f"corrections grow: {steps.tolist()}"
        )
    return float(diag[-1])


def truncation_level(eigensystem, mu_target):
    """Largest ``J`` with ``mu_J <= mu_target`` (at least 1)."""
    if mu_target > eigensystem.mu_max_resolved:
        raise SpectralError(
            "RESOLUTION_EXCEEDED",
            f"mu_target = {mu_target} beyond resolved {eigensystem.mu_max_resolved}",
        )
    return max(1, int(np.count_nonzero(eigensystem.mus <= mu_target)))


def measurement_frequencies(eigensystem, J, zero_mode_ks=DEFAULT_ZERO_MODE_KS):
    """Wavenumbers at which passive data must be recorded to recover ``f_1..f_J``."""
    mus = [p.mu for p in eigensystem.pairs[:J] if p.mu > 0]
    return list(zero_mode_ks or ()) + mus


def coefficients_from_records(eigensystem, records, J, *, zero_mode=True, strict=True):
    """Coefficients ``f_1..f_J`` from a pool of passive records.

    Each positive eigenfrequency is matched to a record within
    :func:`tol_freq_match`; records below ``mu_2`` that match no eigenfrequency
    feed the zero-mode extrapolation. With ``zero_mode=False`` the constant
    mode is skipped; ``strict`` is passed to :func:`zero_mode_from_passive`.
    """
    if J > len(eigensystem):
        raise SpectralError("MISSING_PAIR", f"J = {J} exceeds the {len(eigensystem)} resolved pairs")
    records = list(records)
    ks = np.array([r.k for r in records])
    out = []
    for pair in eigensystem.pairs[:J]:
        if pair.mu == 0.0:
            continue
        hits = np.nonzero(np.abs(ks - pair.mu) <= tol_freq_match(pair.mu))[0] if ks.size else []
        if len(hits) == 0:
            raise ReconstructionError("MISSING_RECORD", f"no record at mu_{pair.j} = {pair.mu!r}")
        out.append((pair.j, coefficient_from_passive(pair, records[hits[0]])))
    if zero_mode:
        first = eigensystem.pair(1)
        mu2 = eigensystem.pairs[1].mu if len(eigensystem) > 1 else np.inf
        small = [r for r in records if r.k < 0.5 * mu2
                 and not any(abs(r.k - p.mu) <= tol_freq_match(p.mu) for p in eigensystem.pairs)]
        if not small:
            raise ReconstructionError("MISSING_RECORD", "no small-k records for the zero mode")
        out.append((1, zero_mode_from_passive(first, small, mu_next=mu2, strict=strict)))
    return SpectralCoefficients(tuple(out), J, "from_passive")


def inner_product_coefficients(f_values, eigensystem, J):
    """Independent oracle: trapezoidal ``int f phi_j`` for ``j <= J``."""
    grid = eigensystem.medium.grid
    vals = grid.integrate(eigensystem.modes[:, :J].T * np.asarray(f_values))
    return SpectralCoefficients(tuple(zip(range(1, J + 1), vals)), J, "from_inner_product")


def assemble_source(coeffs, eigensystem, medium):
    """Nodal estimate ``(1 + q) sum_j f_j phi_j``."""
    total = np.zeros(medium.grid.n_nodes)
    for j, fj in coeffs.coeffs:
        if j > len(eigensystem):
            raise ReconstructionError("MISSING_PAIR", f"eigenpair {j} is not in the eigensystem")
        total += fj * eigensystem.pair(j).phi_values
    return medium.index * total


def relative_l2_error(f_hat, f_values, grid):
    f = np.asarray(f_values)
    return float(np.sqrt(grid.integrate((np.asarray(f_hat) - f) ** 2) / grid.integrate(f**2)))
