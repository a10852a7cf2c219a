"""Grids, admissible media and sources, and the data records shared by all modules.

Everything lives on a uniform node grid ``x_i = i / n_cells`` of ``[0, 1]``.
Media are described by the perturbation ``q`` of the refractive index
``1 + q``; sources by their nodal values ``f``.
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError

MIN_CELLS = 16
# slack for float comparisons against user budgets
_REL_SLACK = 1e-12


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n_cells`` cells on ``[0, 1]``."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < MIN_CELLS:
            raise ValidationError(
                "BAD_GRID", f"n_cells must be an integer >= {MIN_CELLS}, got {self.n_cells}"
            )
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def spacing(self):
        return 1.0 / self.n_cells

    @property
    def n_nodes(self):
        return self.n_cells + 1

    @property
    def nodes(self):
        return np.arange(self.n_nodes) / self.n_cells

    def trapezoid_weights(self):
        """Quadrature weights ``h * (1/2, 1, ..., 1, 1/2)``."""
        w = np.full(self.n_nodes, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, values):
        """Trapezoidal integral of nodal ``values`` (last axis)."""
        return np.asarray(values) @ self.trapezoid_weights()

    def nearest_node(self, x):
        return int(round(float(x) * self.n_cells))

    @classmethod
    def for_samples(cls, samples):
        n = np.asarray(samples).shape[0] - 1
        if n < MIN_CELLS:
            raise ValidationError(
                "BAD_GRID", f"need at least {MIN_CELLS + 1} samples, got {n + 1}"
            )
        return cls(n)


@dataclass(frozen=True)
class Medium:
    """Refractive-index perturbation ``q`` sampled on the grid nodes.

    Build through :func:`validate_medium`, which enforces the admissibility
    checks; direct construction only freezes the sample array.
    """

    grid: Grid
    q_values: np.ndarray
    n0: float
    M: float
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q_values", _frozen(self.q_values))

    @property
    def index(self):
        """Nodal refractive index ``1 + q``."""
        return 1.0 + self.q_values

    def restrict(self, factor=2):
        """Nodal restriction onto a grid coarser by ``factor``."""
        return validate_medium(
            self.q_values[::factor], self.n0, self.M, self.m, check_support=False
        )


@dataclass(frozen=True)
class Source:
    """Source ``f`` sampled on the grid nodes, with its H^1 budget ``L``."""

    grid: Grid
    f_values: np.ndarray
    L: float

    def __post_init__(self):
        object.__setattr__(self, "f_values", _frozen(self.f_values))

    def scaled(self, factor):
        return Source(self.grid, factor * self.f_values, abs(factor) * self.L)


@dataclass(frozen=True)
class WaveField:
    """Complex field ``phi(., k)`` on the grid for one wavenumber ``k``."""

    grid: Grid
    k: complex
    phi_values: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi_values", _frozen(self.phi_values, complex))

    @property
    def boundary(self):
        return self.phi_values[0], self.phi_values[-1]


@dataclass(frozen=True)
class PassiveRecord:
    """The measurable triple ``(k, Im phi(0, k), Im phi(1, k))``."""

    k: float
    im_phi_0: float
    im_phi_1: float

    def __post_init__(self):
        vals = (self.k, self.im_phi_0, self.im_phi_1)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("BAD_RECORD", f"non-finite record {vals}")
        if self.k <= 0:
            raise ValidationError("BAD_K", f"record wavenumber must be positive, got {self.k}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "im_phi_0", float(self.im_phi_0))
        object.__setattr__(self, "im_phi_1", float(self.im_phi_1))


def records_to_array(records):
    """Stack records into an ``(n, 3)`` array of ``k, im_phi_0, im_phi_1``."""
    return np.array([[r.k, r.im_phi_0, r.im_phi_1] for r in records], dtype=float).reshape(-1, 3)


def array_to_records(arr):
    return [PassiveRecord(*row) for row in np.asarray(arr, dtype=float).reshape(-1, 3)]


# ---------------------------------------------------------------------------
# validation


def _support_tol(values):
    return 1e-12 * max(1.0, float(np.max(np.abs(values))))


def smoothness_surrogate(values, grid):
    """Discrete C^1 surrogate: ``max|v| + max|forward difference quotient|``."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v)) + np.max(np.abs(np.diff(v))) / grid.spacing)


def discrete_h1_norm(values, grid):
    """Trapezoidal L^2 norm of ``f`` combined with the L^2 norm of forward differences."""
    v = np.asarray(values, dtype=float)
    l2_sq = grid.integrate(v**2)
    d = np.diff(v) / grid.spacing
    return float(np.sqrt(l2_sq + grid.spacing * np.sum(d**2)))


def _as_samples(samples):
    arr = np.array(samples, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValidationError("BAD_SHAPE", f"samples must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("BAD_VALUE", "samples contain non-finite values")
    return arr


def validate_medium(q_samples, n0, M, m=1, *, check_support=True):
    """Check ``q`` against the admissible class and return a frozen :class:`Medium`.

    ``check_support=False`` skips the endpoint test; it exists for oracle runs
    with constant media such as ``q = 3`` and is never used by the pipelines.
    """
    q = _as_samples(q_samples)
    grid = Grid.for_samples(q)
    if not 0.0 < n0 < 1.0:
        raise ValidationError("BAD_PARAMETER", f"n0 must lie in (0, 1), got {n0}")
    if not M > 0:
        raise ValidationError("BAD_PARAMETER", f"M must be positive, got {M}")
    if int(m) != m or m < 1:
        raise ValidationError("BAD_PARAMETER", f"m must be an integer >= 1, got {m}")
    lowest = float(np.min(1.0 + q))
    if lowest < n0:
        raise ValidationError("REJECT_POSITIVITY", f"min(1+q) = {lowest:.6g} < n0 = {n0}")
    if check_support:
        tol = _support_tol(q)
        if abs(q[0]) > tol or abs(q[-1]) > tol:
            raise ValidationError(
                "REJECT_SUPPORT", f"q must vanish at both endpoints, got {q[0]:.3g}, {q[-1]:.3g}"
            )
    budget = smoothness_surrogate(q, grid)
    if budget > M * (1.0 + _REL_SLACK):
        raise ValidationError("REJECT_BUDGET", f"smoothness surrogate {budget:.6g} exceeds M = {M}")
    return Medium(grid, q, float(n0), float(M), int(m))


def validate_source(f_samples, L, *, check_support=True):
    """Check ``f`` against the admissible source class and return a :class:`Source`."""
    f = _as_samples(f_samples)
    grid = Grid.for_samples(f)
    if not L > 0:
        raise ValidationError("BAD_PARAMETER", f"L must be positive, got {L}")
    if check_support:
        tol = _support_tol(f)
        if abs(f[0]) > tol or abs(f[-1]) > tol:
            raise ValidationError(
                "REJECT_SUPPORT", f"f must vanish at both endpoints, got {f[0]:.3g}, {f[-1]:.3g}"
            )
    norm = discrete_h1_norm(f, grid)
    if norm > L * (1.0 + _REL_SLACK):
        raise ValidationError("REJECT_BUDGET", f"discrete H1 norm {norm:.6g} exceeds L = {L}")
    return Source(grid, f, float(L))


def zero_medium(n_cells, n0=0.5, M=1.0):
    return validate_medium(np.zeros(n_cells + 1), n0, M)


# ---------------------------------------------------------------------------
# built-in profiles


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(x, a, b, amp):
    """C-infinity bump supported on ``(a, b)`` with peak value ``amp``."""
    x = np.asarray(x, dtype=float)
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    t = (x - c) / r
    inside = np.abs(t) < 1
    out = np.zeros_like(x)
    out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def well(x, a, b, amp, width):
    """Smoothed plateau of height ``amp`` on ``[a, b]`` with ramps of ``width``."""
    x = np.asarray(x, dtype=float)
    return amp * _smooth_step((x - a + width) / width) * _smooth_step((b + width - x) / width)


_PROFILES = {
    "zero": (0, lambda x: np.zeros_like(x)),
    "bump": (3, bump),
    "cosine": (2, lambda x, m, amp: amp * np.cos(m * np.pi * x)),
    "sine": (2, lambda x, m, amp: amp * np.sin(m * np.pi * x)),
    "sinsq": (1, lambda x, amp: amp * np.sin(np.pi * x) ** 2),
    "well": (4, well),
    "constant": (1, lambda x, c: np.full_like(x, c)),
}

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$")


def builtin_profile(spec, n_cells):
    """Evaluate a named profile such as ``"bump(0.2,0.8,0.5)"`` on the grid nodes."""
    match = _SPEC_RE.match(spec)
    if not match or match.group(1) not in _PROFILES:
        raise ValidationError("BAD_PROFILE", f"unknown profile {spec!r}; known: {sorted(_PROFILES)}")
    name, arg_str = match.groups()
    args = [float(a) for a in arg_str.split(",")] if arg_str and arg_str.strip() else []
    n_args, func = _PROFILES[name]
    if len(args) != n_args:
        raise ValidationError("BAD_PROFILE", f"{name} takes {n_args} arguments, got {len(args)}")
    return func(Grid(n_cells).nodes, *args)


def read_profile(path, column):
    """Read the two-column ``# x <column>`` text format; returns nodal values."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].split() != ["#", "x", column]:
        raise ValidationError("BAD_FILE", f"{path}: expected header '# x {column}'")
    data = np.loadtxt(lines[1:], ndmin=2)
    if data.shape[1] != 2:
        raise ValidationError("BAD_FILE", f"{path}: expected two columns")
    grid = Grid.for_samples(data[:, 1])
    if not np.allclose(data[:, 0], grid.nodes, atol=1e-9):
        raise ValidationError("BAD_FILE", f"{path}: nodes are not the uniform grid i/{grid.n_cells}")
    return data[:, 1].copy()


def write_profile(path, values, column):
    values = np.asarray(values, dtype=float)
    grid = Grid.for_samples(values)
    rows = "\n".join(f"{x!r} {v!r}" for x, v in zip(grid.nodes.tolist(), values.tolist()))
    Path(path).write_text(f"# x {column}\n{rows}\n")


def load_profile(spec, n_cells, column):
    """Resolve ``spec`` as a built-in name or, failing that, a profile file."""
    if _SPEC_RE.match(spec) and _SPEC_RE.match(spec).group(1) in _PROFILES:
        return builtin_profile(spec, n_cells)
    if Path(spec).exists():
        return read_profile(spec, column)
    raise ValidationError("BAD_PROFILE", f"{spec!r} is neither a built-in profile nor a file")
