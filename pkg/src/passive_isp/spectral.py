"""Weighted Neumann eigenproblem ``-phi'' = mu^2 (1 + q) phi`` on the node grid.

The discrete pencil is ``K phi = mu^2 B phi`` with the Neumann stiffness
``K = (1/h) tridiag(-1, [1, 2, ..., 2, 1], -1)`` and the trapezoidal weighted
mass ``B = h diag(w_i (1 + q_i))``.  It is reduced to the symmetric
tridiagonal matrix ``B^{-1/2} K B^{-1/2}``; LAPACK's bisection gives the
eigenpairs and an independent Sturm count certifies that none was skipped.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .exceptions import SpectralError, ValidationError

# top resolved frequency over n_cells (about 20 points per wavelength)
RESOLUTION_GUARD = 0.1
TOL_SIGN = 1e-10
# kernel detection, relative to the largest pencil entry
_ZERO_EIG = 1e3 * np.finfo(float).eps


@dataclass(frozen=True)
class EigenPair:
    """One Neumann eigenpair; ``phi_values`` is normalized in the weighted norm."""

    j: int
    mu: float
    phi_values: np.ndarray
    boundary_0: float
    boundary_1: float
    residual: float = 0.0

    def __post_init__(self):
        arr = np.array(self.phi_values, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "phi_values", arr)

    def flipped(self):
        """The same pair with the opposite sign convention."""
        return EigenPair(self.j, self.mu, -self.phi_values, -self.boundary_0, -self.boundary_1,
                         self.residual)


@dataclass(frozen=True)
class EigenSystem:
    medium: object
    pairs: tuple
    mu_max_resolved: float
    sturm_count: int

    @property
    def mus(self):
        return np.array([p.mu for p in self.pairs])

    @property
    def modes(self):
        """Eigenvectors as columns, shape ``(n_nodes, J)``."""
        return np.stack([p.phi_values for p in self.pairs], axis=1)

    def pair(self, j):
        if not 1 <= j <= len(self.pairs):
            raise SpectralError("MISSING_PAIR", f"eigenpair {j} not resolved (have {len(self.pairs)})")
        return self.pairs[j - 1]

    def __len__(self):
        return len(self.pairs)


def pencil(medium):
    """Diagonal and off-diagonal of ``B^{-1/2} K B^{-1/2}`` plus the mass diagonal."""
    grid = medium.grid
    h = grid.spacing
    k_diag = np.full(grid.n_nodes, 2.0 / h)
    k_diag[0] = k_diag[-1] = 1.0 / h
    mass = grid.trapezoid_weights() * medium.index
    d = k_diag / mass
    e = -1.0 / (h * np.sqrt(mass[:-1] * mass[1:]))
    return d, e, mass


def sturm_count(d, e, sigma):
    """Number of eigenvalues below ``sigma`` of the symmetric tridiagonal ``(d, e)``.

    Counts negative pivots of the LDL^T factorization of ``T - sigma I``.
    """
    count = 0
    p = d[0] - sigma
    tiny = np.finfo(float).tiny ** 0.5 * max(1.0, abs(sigma))
    e2 = np.asarray(e) ** 2
    for i in range(len(d)):
        if i:
            p = (d[i] - sigma) - e2[i - 1] / p
        if p == 0.0:
            p = -tiny
        if p < 0.0:
            count += 1
    return count


def _fix_sign(phi):
    if abs(phi[0]) > TOL_SIGN * np.max(np.abs(phi)):
        return phi if phi[0] > 0 else -phi
    # fall back to the first interior extremum
    dphi = np.diff(phi)
    turns = np.nonzero(np.sign(dphi[1:]) != np.sign(dphi[:-1]))[0]
    i = turns[0] + 1 if turns.size else int(np.argmax(np.abs(phi)))
    return phi if phi[i] > 0 else -phi


def neumann_eigensystem(medium, mu_max, *, guard=RESOLUTION_GUARD):
    """All eigenpairs with ``mu_j <= mu_max``, ascending.

    ``mu_max`` must not exceed ``guard * n_cells`` (``RESOLUTION_EXCEEDED``).
    The eigenvalue count is checked against a Sturm count at ``mu_max^2``;
    disagreement raises ``SpectralError("NONCONVERGENCE")``.
    """
    grid = medium.grid
    if not mu_max > 0:
        raise ValidationError("BAD_PARAMETER", f"mu_max must be positive, got {mu_max}")
    if mu_max > guard * grid.n_cells:
        raise SpectralError(
            "RESOLUTION_EXCEEDED",
            f"mu_max = {mu_max} exceeds {guard} * n_cells = {guard * grid.n_cells}",
        )
    d, e, mass = pencil(medium)
    lam_max = float(mu_max) ** 2
    lam, vecs = eigh_tridiagonal(d, e, select="v", select_range=(-1.0, lam_max))
    count = sturm_count(d, e, lam_max)
    if count != lam.size:
        raise SpectralError(
            "NONCONVERGENCE",
            f"eigenpair {min(count, lam.size) + 1}: solver returned {lam.size} values, "
            f"Sturm count is {count}",
        )
    sqrt_mass = np.sqrt(mass)
    # residual scale: entries of K are O(1/h)
    k_scale = 2.0 / grid.spacing
    pairs = []
    for idx in range(lam.size):
        phi = vecs[:, idx] / sqrt_mass
        lam_i = float(lam[idx])
        if idx == 0 and abs(lam_i) < _ZERO_EIG * float(np.max(np.abs(d))):
            # constant vector spans the kernel of K exactly
            lam_i = 0.0
            phi = np.full(grid.n_nodes, 1.0 / np.sqrt(np.sum(mass)))
        phi = _fix_sign(phi)
        resid = (d - lam_i) * vecs[:, idx]
        resid[:-1] += e * vecs[1:, idx]
        resid[1:] += e * vecs[:-1, idx]
        pairs.append(
            EigenPair(
                j=idx + 1,
                mu=float(np.sqrt(max(lam_i, 0.0))),
                phi_values=phi,
                boundary_0=float(phi[0]),
                boundary_1=float(phi[-1]),
                residual=float(np.max(np.abs(resid))) / (k_scale / grid.spacing),
            )
        )
    mus = [p.mu for p in pairs]
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise SpectralError("NONCONVERGENCE", "eigenfrequencies are not strictly increasing")
    return EigenSystem(medium, tuple(pairs), float(mu_max), count)


def eigenvalue_bounds(medium, j, *, sharp=False):
    """Min-max bracket ``(pi (j-1) / max(1+q), pi (j-1) / min(1+q))`` for ``mu_j``.

    With ``sharp=True`` the square roots of ``max(1+q)``, ``min(1+q)`` are
    used, which is the bracket the Rayleigh quotient actually yields; the
    default form is weaker but valid whenever ``min(1+q) <= 1 <= max(1+q)``,
    which every compactly supported ``q`` satisfies.
    """
    if int(j) != j or j < 1:
        raise ValidationError("BAD_PARAMETER", f"j must be a positive integer, got {j}")
    n = medium.index
    hi, lo = float(np.max(n)), float(np.min(n))
    if sharp:
        hi, lo = np.sqrt(hi), np.sqrt(lo)
    return np.pi * (j - 1) / hi, np.pi * (j - 1) / lo


def trace_constant(medium):
    """``max(1, ||(1+q)^{-1/2}||_{L^2})`` by the trapezoidal rule."""
    return max(1.0, float(np.sqrt(medium.grid.integrate(1.0 / medium.index))))


def boundary_trace_bound(pair, medium, *, corrected=False):
    """Upper bound ``C (mu_j + 1)`` for ``|phi_j(0)| + |phi_j(1)|``.

    ``corrected=True`` uses ``C + 1``; the plain constant already fails for the
    constant mode of ``q = 0`` (bound 1 against the value 2).
    """
    c = trace_constant(medium)
    if corrected:
        c += 1.0
    return c * (pair.mu + 1.0)


def weighted_inner(medium, u, v):
    """Trapezoidal ``int (1 + q) u v``."""
    return medium.grid.integrate(medium.index * np.asarray(u) * np.asarray(v))


def derivative_norm(pair, grid):
    """Discrete ``||phi_j'||_{L^2}`` from forward differences."""
    d = np.diff(pair.phi_values) / grid.spacing
    return float(np.sqrt(grid.spacing * np.sum(d**2)))
