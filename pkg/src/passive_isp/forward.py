"""Outgoing Helmholtz solves, Green's functions and passive boundary data.

The discrete problem is the second-order central-difference scheme for
``phi'' + k^2 (1 + q) phi = f`` on the node grid, closed at both ends with
ghost points eliminated through the outgoing conditions
``phi'(0) + i k phi(0) = 0`` and ``phi'(1) - i k phi(1) = 0``.  The two
boundary rows are halved so the matrix is complex symmetric; this keeps
discrete reciprocity ``G(x, z) = G(z, x)`` exact.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SolverError, ValidationError
from .model import Grid, PassiveRecord, WaveField
from .tridiag import TOL_PIVOT, thomas_solve, tridiag_matvec

# |Im k| admitted by the solver unless the caller configures otherwise
MAX_IM_K = 4.0
_BATCH = 256


@dataclass(frozen=True)
class GreenColumn:
    """``G(., z, k)`` for a unit-mass hat source at the node ``z``."""

    grid: Grid
    k: complex
    z: float
    g_values: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True)
class NoiseSpec:
    """Additive measurement noise on ``Im phi(0, k)`` and ``Im phi(1, k)``.

    ``kind`` is ``"none"``, ``"additive_gaussian"`` (standard deviation
    ``level``) or ``"additive_uniform"`` (uniform on ``[-level, level]``).
    """

    kind: str = "none"
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "additive_gaussian", "additive_uniform"):
            raise ValidationError("BAD_NOISE", f"unknown noise kind {self.kind!r}")
        if not self.level >= 0:
            raise ValidationError("BAD_NOISE", f"noise level must be >= 0, got {self.level}")

    def draws(self, n):
        """Per-measurement perturbations, shape ``(n, 2)``.

        Row ``i`` comes from its own child stream of the seed, so values do not
        depend on how many other wavenumbers are evaluated or in what order.
        """
        out = np.zeros((n, 2))
        if self.kind == "none" or self.level == 0.0:
            return out
        children = np.random.SeedSequence(self.seed).spawn(n)
        for i, child in enumerate(children):
            rng = np.random.default_rng(child)
            if self.kind == "additive_gaussian":
                out[i] = self.level * rng.standard_normal(2)
            else:
                out[i] = self.level * rng.uniform(-1.0, 1.0, 2)
        return out


def _check_k(k, max_im_k):
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise SolverError("BAD_K", "wavenumber k = 0 is excluded", k=0.0)
    bad = np.abs(k.imag) > max_im_k
    if np.any(bad):
        kb = complex(k[bad].flat[0])
        raise SolverError("BAD_K", f"|Im k| exceeds the configured bound {max_im_k}", k=kb)
    return k


def helmholtz_bands(medium, k):
    """Bands of the symmetrized system (scaled by ``h``) for scalar or 1-d ``k``.

    Returns ``lower, diag, upper`` with ``diag`` of shape ``(n_nodes,)`` or
    ``(n_nodes, len(k))``.
    """
    grid = medium.grid
    h = grid.spacing
    k = np.asarray(k, dtype=complex)
    n_idx = medium.index.reshape((-1,) + (1,) * k.ndim)
    w = np.ones(grid.n_nodes)
    w[0] = w[-1] = 0.5
    w = w.reshape(n_idx.shape)
    diag = -2.0 * w + (h * k) ** 2 * w * n_idx
    diag = diag.astype(complex)
    diag[0] += 1j * h * k
    diag[-1] += 1j * h * k
    off = np.ones(grid.n_cells)
    return off, diag, off


def _rhs(grid, f_values):
    """Right-hand side matching :func:`helmholtz_bands` for nodal ``f``."""
    h = grid.spacing
    f = np.array(f_values, dtype=complex)
    w = np.ones(grid.n_nodes)
    w[0] = w[-1] = 0.5
    return (h * h) * w.reshape((-1,) + (1,) * (f.ndim - 1)) * f


def _fd_residual(grid, bands, phi, rhs):
    lower, diag, upper = bands
    r = tridiag_matvec(lower, diag, upper, phi) - rhs
    w = np.ones(grid.n_nodes)
    w[0] = w[-1] = 0.5
    r = r / (grid.spacing**2 * w.reshape((-1,) + (1,) * (r.ndim - 1)))
    return float(np.max(np.abs(r))) if r.size else 0.0


def _solve(medium, k, rhs, max_im_k, tol_pivot):
    k = _check_k(k, max_im_k)
    bands = helmholtz_bands(medium, k)
    try:
        phi = thomas_solve(*bands, rhs, tol_pivot=tol_pivot)
    except SolverError as err:
        raise SolverError(err.code, f"{err} at k = {complex(k.flat[0])}", k=complex(k.flat[0])) from None
    return phi, bands


def solve_helmholtz(medium, source, k, *, max_im_k=MAX_IM_K, tol_pivot=TOL_PIVOT):
    """Outgoing field generated by ``source`` in ``medium`` at wavenumber ``k``.

    Raises ``SolverError`` with code ``BAD_K`` for ``k = 0`` or ``|Im k|``
    beyond ``max_im_k``, and ``SINGULAR_SYSTEM`` when elimination meets a
    pivot below ``tol_pivot`` (near a resonance).
    """
    if source.grid != medium.grid:
        raise ValidationError("GRID_MISMATCH", "medium and source live on different grids")
    k = complex(k)
    rhs = _rhs(medium.grid, source.f_values)
    phi, bands = _solve(medium, k, rhs, max_im_k, tol_pivot)
    return WaveField(medium.grid, k, phi, _fd_residual(medium.grid, bands, phi, rhs))


def solve_many(medium, f_values, ks, *, max_im_k=MAX_IM_K, tol_pivot=TOL_PIVOT):
    """Fields for one source at many wavenumbers; returns shape ``(n_nodes, len(ks))``.

    A singular system is reported with the first offending ``k``.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    rhs = _rhs(medium.grid, f_values)[:, None]
    out = np.empty((medium.grid.n_nodes, ks.size), dtype=complex)
    for start in range(0, ks.size, _BATCH):
        chunk = ks[start:start + _BATCH]
        try:
            out[:, start:start + _BATCH], _ = _solve(medium, chunk, rhs, max_im_k, tol_pivot)
        except SolverError as err:
            if err.code != "SINGULAR_SYSTEM" or chunk.size == 1:
                raise
            for j, kj in enumerate(chunk):
                out[:, start + j] = _solve(medium, kj, rhs[:, 0], max_im_k, tol_pivot)[0]
    return out


def green_columns(medium, k, nodes, *, max_im_k=MAX_IM_K, tol_pivot=TOL_PIVOT):
    """``G(x_i, x_j, k)`` for every node ``i`` and each interior source node ``j``.

    Returns shape ``(n_nodes, len(nodes))``.
    """
    grid = medium.grid
    nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
    if np.any(nodes <= 0) or np.any(nodes >= grid.n_cells):
        raise ValidationError("BAD_Z", "Green's function sources must sit on interior nodes")
    f = np.zeros((grid.n_nodes, nodes.size))
    f[nodes, np.arange(nodes.size)] = 1.0 / grid.spacing
    phi, _ = _solve(medium, complex(k), _rhs(grid, f), max_im_k, tol_pivot)
    return phi


def green_function(medium, k, z, *, max_im_k=MAX_IM_K, tol_pivot=TOL_PIVOT):
    """Outgoing Green's function with a unit-mass hat source at the node nearest ``z``."""
    grid = medium.grid
    if not 0.0 < z < 1.0:
        raise ValidationError("BAD_Z", f"z must lie strictly inside (0, 1), got {z}")
    j = grid.nearest_node(z)
    if j <= 0 or j >= grid.n_cells:
        raise ValidationError("BAD_Z", f"z = {z} rounds onto a boundary node")
    f = np.zeros(grid.n_nodes)
    f[j] = 1.0 / grid.spacing
    rhs = _rhs(grid, f)
    g, bands = _solve(medium, complex(k), rhs, max_im_k, tol_pivot)
    return GreenColumn(grid, complex(k), j / grid.n_cells, g, _fd_residual(grid, bands, g, rhs))


def hk_sides(medium, k, x, y):
    """Both sides of the boundary identity for ``G`` at nodes nearest ``x``, ``y``.

    Returns ``(lhs, rhs)`` with
    ``lhs = k * sum_{z in {0, 1}} conj(G(x, z)) G(y, z)`` (positive counting
    measure on the two endpoints) and ``rhs = -Im G(x, y)``.  Endpoint values
    come from interior-source columns through reciprocity.
    """
    if not k > 0:
        raise SolverError("BAD_K", f"k must be positive, got {k}", k=k)
    grid = medium.grid
    ix, iy = grid.nearest_node(x), grid.nearest_node(y)
    cols = green_columns(medium, k, [ix, iy])
    gx, gy = cols[:, 0], cols[:, 1]
    lhs = k * (np.conj(gx[0]) * gy[0] + np.conj(gx[-1]) * gy[-1])
    return complex(lhs), float(-gy[ix].imag)


def hk_residual(medium, k, x, y):
    """``|k sum_z conj(G(x,z)) G(y,z) + Im G(x,y)|`` over ``z in {0, 1}``."""
    lhs, rhs = hk_sides(medium, k, x, y)
    return abs(lhs - rhs)


def imaging_functional(record):
    """Time-reversal functional at both endpoints, ``-Im phi(x, k) / k``."""
    if not record.k > 0:
        raise SolverError("BAD_K", f"k must be positive, got {record.k}", k=record.k)
    return -record.im_phi_0 / record.k, -record.im_phi_1 / record.k


def synthesize_passive(medium, source, ks, noise=None):
    """Passive records ``(k, Im phi(0, k), Im phi(1, k))`` in the order of ``ks``."""
    if source.grid != medium.grid:
        raise ValidationError("GRID_MISMATCH", "medium and source live on different grids")
    ks = np.asarray(ks, dtype=float).ravel()
    if np.any(ks <= 0):
        raise SolverError("BAD_K", "passive wavenumbers must be positive", k=float(ks[ks <= 0][0]))
    noise = noise or NoiseSpec()
    if ks.size == 0:
        return []
    phi = solve_many(medium, source.f_values, ks)
    data = np.stack([phi[0].imag, phi[-1].imag], axis=1) + noise.draws(ks.size)
    return [PassiveRecord(k, a, b) for k, (a, b) in zip(ks.tolist(), data.tolist())]
