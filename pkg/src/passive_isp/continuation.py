"""Complex-frequency analysis: resonances, strip sampling of F, harmonic measure.

Resonances are the zeros of the characteristic function
``W(k) = u'(1) - i k u(1)``, where ``u`` solves the homogeneous equation
with the left-outgoing seed ``u(0) = 1``, ``u'(0) = -i k``.  They are
counted with the argument principle on rectangles and refined by a damped
Newton iteration; ``W'`` comes from the variational equation in ``k``.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .exceptions import ContinuationError, SolverError, ValidationError
from .forward import solve_many

TOL_CONTOUR = 1e-3
TOL_ZERO = 1e-8


# ---------------------------------------------------------------------------
# characteristic function


def _shoot_loop(n, n_mid, h, k):
    """RK4 over the cells for ``(u, u', du/dk, du'/dk)``; ``k`` is an array or a scalar."""
    u, du = 1.0 + 0.0 * k, -1j * k
    v, dv = 0.0 * k, -1j + 0.0 * k
    k2 = k * k
    h2, h6 = 0.5 * h, h / 6.0
    for i in range(len(n_mid)):
        a0, am, a1 = k2 * n[i], k2 * n_mid[i], k2 * n[i + 1]
        b0, bm, b1 = 2.0 * k * n[i], 2.0 * k * n_mid[i], 2.0 * k * n[i + 1]
        # stage 1
        ku1, kdu1, kv1, kdv1 = du, -a0 * u, dv, -b0 * u - a0 * v
        # stage 2
        uu, vv = u + h2 * ku1, v + h2 * kv1
        ku2, kdu2, kv2, kdv2 = du + h2 * kdu1, -am * uu, dv + h2 * kdv1, -bm * uu - am * vv
        # stage 3
        uu, vv = u + h2 * ku2, v + h2 * kv2
        ku3, kdu3, kv3, kdv3 = du + h2 * kdu2, -am * uu, dv + h2 * kdv2, -bm * uu - am * vv
        # stage 4
        uu, vv = u + h * ku3, v + h * kv3
        ku4, kdu4, kv4, kdv4 = du + h * kdu3, -a1 * uu, dv + h * kdv3, -b1 * uu - a1 * vv
        u = u + h6 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4)
        du = du + h6 * (kdu1 + 2.0 * kdu2 + 2.0 * kdu3 + kdu4)
        v = v + h6 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
        dv = dv + h6 * (kdv1 + 2.0 * kdv2 + 2.0 * kdv3 + kdv4)
    return u, du, v, dv


def shoot(medium, ks):
    """``(W, dW/dk)`` at each ``k`` by classical RK4 on the medium grid.

    ``dW/dk`` comes from integrating the ``k``-derivative of the equation
    alongside it.
    """
    ks = np.asarray(ks, dtype=complex)
    if np.any(ks == 0):
        raise SolverError("BAD_K", "the characteristic function is evaluated at k != 0", k=0.0)
    shape = ks.shape
    n = medium.index
    n_mid = 0.5 * (n[:-1] + n[1:])
    h = medium.grid.spacing
    if ks.size <= 4:
        # plain complex arithmetic beats numpy dispatch for a handful of points
        nl, nml = n.tolist(), n_mid.tolist()
        out = [_shoot_loop(nl, nml, h, complex(k)) for k in ks.ravel()]
        k = ks.ravel()
        u, du, v, dv = (np.array([o[i] for o in out], dtype=complex) for i in range(4))
    else:
        k = ks.ravel()
        u, du, v, dv = _shoot_loop(n, n_mid, h, k)
    w = du - 1j * k * u
    dw = dv - 1j * u - 1j * k * v
    return w.reshape(shape), dw.reshape(shape)


def characteristic_function(medium, k):
    """``W(k)``; scalar in, scalar out (arrays are evaluated elementwise)."""
    w, _ = shoot(medium, k)
    return complex(w) if np.ndim(w) == 0 else w


# ---------------------------------------------------------------------------
# argument principle


@dataclass(frozen=True)
class ResonanceScan:
    rect: tuple
    winding: int
    zeros: tuple
    strip_half_width_estimate: float

    def to_dict(self):
        return {
            "rect": list(self.rect),
            "winding": self.winding,
            "zeros": [[z.real, z.imag] for z in self.zeros],
            "h": self.strip_half_width_estimate,
        }


def _check_rect(rect):
    re_min, re_max, im_min, im_max = map(float, rect)
    if not (re_max > re_min and im_max > im_min):
        raise ValidationError("BAD_RECT", f"degenerate rectangle {rect}")
    if re_min <= 0 <= re_max and im_min <= 0 <= im_max:
        raise ValidationError("BAD_RECT", f"rectangle {rect} contains k = 0")
    return re_min, re_max, im_min, im_max


def _contour(rect, density):
    re_min, re_max, im_min, im_max = rect
    corners = [complex(re_min, im_min), complex(re_max, im_min),
               complex(re_max, im_max), complex(re_min, im_max)]
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        m = max(8, int(math.ceil(abs(b - a) * density)))
        pts.append(a + (b - a) * np.arange(m) / m)
    return np.concatenate(pts)


def _winding_stats(z, w, dw):
    ratio = dw / w
    dz = np.roll(z, -1) - z
    integral = np.sum(0.5 * (ratio + np.roll(ratio, -1)) * dz)
    phase_steps = np.angle(np.roll(w, -1) / w)
    return {
        "quad": (integral / (2j * np.pi)).real,
        "arg": float(np.sum(phase_steps) / (2 * np.pi)),
        "max_step": float(np.max(np.abs(phase_steps))),
        "closeness": float(np.min(np.abs(w)) / np.median(np.abs(w))),
        "nodes": int(z.size),
    }, phase_steps


def contour_winding(medium, rect, *, density=8.0, max_refine=12, tol_contour=TOL_CONTOUR,
                    max_phase_step=np.pi / 8):
    """Number of zeros of ``W`` inside ``rect = (re_min, re_max, im_min, im_max)``.

    Starting from ``density`` nodes per unit length, every panel whose phase
    increment of ``W`` exceeds ``max_phase_step`` is halved, so nodes gather
    where the contour passes near a zero.  The trapezoidal value of
    ``(1/2 pi i) ∮ W'/W dk`` must then round with residual at most 0.25 to the
    winding of the accumulated phase.
    """
    rect = _check_rect(rect)
    z = _contour(rect, density)
    w, dw = shoot(medium, z)
    for _ in range(max_refine + 1):
        res, steps = _winding_stats(z, w, dw)
        if res["closeness"] < tol_contour:
            raise ContinuationError("CONTOUR_TOO_CLOSE", f"|W| nearly vanishes on the contour of {rect}")
        bad = np.abs(steps) > max_phase_step
        n = int(round(res["arg"]))
        if not bad.any():
            if abs(res["quad"] - n) <= 0.25:
                return n
            bad[:] = True
        idx = np.nonzero(bad)[0]
        z_new = 0.5 * (z[idx] + np.roll(z, -1)[idx])
        w_new, dw_new = shoot(medium, z_new)
        z = np.insert(z, idx + 1, z_new)
        w = np.insert(w, idx + 1, w_new)
        dw = np.insert(dw, idx + 1, dw_new)
    raise ContinuationError("WINDING_AMBIGUOUS", f"no stable winding number on {rect} (last {res})")


def _winding_nudged(medium, rect, **kw):
    """:func:`contour_winding`, retrying on slightly enlarged rectangles."""
    re_min, re_max, im_min, im_max = rect
    for attempt in range(4):
        pad = 0.0 if attempt == 0 else 10.0 ** (attempt - 4) * max(re_max - re_min, im_max - im_min)
        r = (re_min - pad, re_max + pad, im_min - pad, im_max + pad)
        try:
            return contour_winding(medium, r, **kw), r
        except ContinuationError as err:
            if err.code != "CONTOUR_TOO_CLOSE" or attempt == 3:
                raise
    raise AssertionError("unreachable")


def _newton(medium, z0, rect, max_iter=60):
    z = complex(z0)
    w, dw = shoot(medium, z)
    for _ in range(max_iter):
        if abs(w) <= 1e-3 * TOL_ZERO:
            break
        step = w / dw
        lam = 1.0
        while lam > 1e-4:
            z_new = z - lam * step
            w_new, dw_new = shoot(medium, z_new)
            if abs(w_new) < abs(w):
                break
            lam *= 0.5
        else:
            break
        if abs(z_new - z) < 1e-15 * max(1.0, abs(z)):
            z, w, dw = z_new, w_new, dw_new
            break
        z, w, dw = z_new, w_new, dw_new
    re_min, re_max, im_min, im_max = rect
    inside = re_min <= z.real <= re_max and im_min <= z.imag <= im_max
    return z, complex(w), inside and abs(w) <= TOL_ZERO


def _quadrisect(rect, split=0.5):
    re_min, re_max, im_min, im_max = rect
    xm = re_min + split * (re_max - re_min)
    ym = im_min + split * (im_max - im_min)
    return [(re_min, xm, im_min, ym), (xm, re_max, im_min, ym),
            (re_min, xm, ym, im_max), (xm, re_max, ym, im_max)]


def _bisect(rect, split=0.5):
    """Halve ``rect`` across its longer side."""
    re_min, re_max, im_min, im_max = rect
    if re_max - re_min >= im_max - im_min:
        xm = re_min + split * (re_max - re_min)
        return [(re_min, xm, im_min, im_max), (xm, re_max, im_min, im_max)]
    ym = im_min + split * (im_max - im_min)
    return [(re_min, re_max, im_min, ym), (re_min, re_max, ym, im_max)]


def _locate(medium, rect, count, depth):
    if count == 0:
        return []
    re_min, re_max, im_min, im_max = rect
    if count == 1:
        z, _, ok = _newton(medium, complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max)), rect)
        if ok:
            return [z]
    if depth == 0:
        raise ContinuationError("NO_CONVERGENCE", f"could not isolate zeros in {rect}")
    for split in (0.5, 0.47, 0.53):
        try:
            subs = [(_winding_nudged(medium, r)[0], r) for r in _bisect(rect, split)]
        except ContinuationError:
            continue
        if sum(n for n, _ in subs) == count:
            break
    else:
        raise ContinuationError("NO_CONVERGENCE", f"bisection of {rect} lost zeros")
    zeros = []
    for n, r in subs:
        zeros.extend(_locate(medium, r, n, depth - 1))
    return zeros


def resonance_scan(medium, rect, *, locate=True, max_depth=24):
    """Count (and optionally refine) the zeros of ``W`` inside ``rect``."""
    winding, used = _winding_nudged(medium, _check_rect(rect))
    zeros = tuple(sorted(_locate(medium, used, winding, max_depth), key=lambda z: (-z.imag, z.real))) \
        if locate else ()
    if zeros:
        h_est = float(min(abs(z.imag) for z in zeros))
    else:
        h_est = float(max(abs(used[2]), abs(used[3])))
    return ResonanceScan(tuple(float(v) for v in used), int(winding), zeros, h_est)


def strip_margin(medium, re_range, im_depth_max, *, delta=1e-3, tol=1e-2):
    """Largest ``h <= im_depth_max`` whose strip ``[re_range] x [-h, h]`` has no resonance.

    The thin band ``|Im k| < delta`` around the real axis is excluded from the
    contours; bisection stops once the bracket is shorter than ``tol / 2``.
    """
    re_min, re_max = re_range

    def winding(sign, h):
        # a contour grazing a zero is moved by a small fraction of the bracket
        for shift in (0.0, 0.01, -0.01, 0.02):
            far, near = sign * h * (1.0 + shift), sign * delta
            try:
                return _winding_nudged(medium, (re_min, re_max, min(far, near), max(far, near)))[0]
            except ContinuationError as err:
                if err.code not in ("CONTOUR_TOO_CLOSE", "WINDING_AMBIGUOUS") or shift == 0.02:
                    raise
        raise AssertionError("unreachable")

    # zero-free at full depth stays zero-free for every smaller h
    upper_free = winding(1.0, im_depth_max) == 0

    def free(h):
        if winding(-1.0, h) != 0:
            return False
        return upper_free or winding(1.0, h) == 0

    if free(im_depth_max):
        return float(im_depth_max)
    lo, hi = delta, float(im_depth_max)
    if not free(2 * delta):
        return float(delta)
    lo = 2 * delta
    while hi - lo > 0.5 * tol:
        mid = 0.5 * (lo + hi)
        if free(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def n_h_for_margin(h):
    """Smallest ``n_h`` with ``pi / (2 n_h) <= h``."""
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"strip half-width must be positive, got {h}")
    return max(1, int(math.ceil(math.pi / (2.0 * h) - 1e-12)))


def strip_half_width(n_h, convention="section"):
    """``pi / (2 n_h)`` by default; ``convention="remark"`` gives ``2 pi / n_h``."""
    if convention == "section":
        return math.pi / (2.0 * n_h)
    if convention == "remark":
        return 2.0 * math.pi / n_h
    raise ValidationError("BAD_PARAMETER", f"unknown strip convention {convention!r}")


# ---------------------------------------------------------------------------
# F on the strip


@dataclass(frozen=True)
class StripSampling:
    k_grid: np.ndarray
    F_values: np.ndarray
    M_f_estimate: float

    def real_axis(self):
        """Real-axis samples ``(k, F)`` sorted by ``k``."""
        mask = self.k_grid.imag == 0
        ks = self.k_grid[mask].real
        order = np.argsort(ks)
        return ks[order], self.F_values[mask][order]

    def at(self, k):
        ks, fs = self.real_axis()
        i = np.nonzero(np.abs(ks - k) <= 1e-12 * max(1.0, abs(k)))[0]
        if i.size == 0:
            raise ContinuationError("RANGE", f"no real-axis strip sample at k = {k}")
        return fs[i[0]]


def strip_grid(k_max, h, *, n_re=200, n_im=9, k_min=None, extra=()):
    """Rectangular sample grid of ``(0, k_max] x [-h, h]`` including the real axis."""
    k_min = k_min if k_min is not None else k_max / n_re
    re = np.linspace(k_min, k_max, n_re)
    im = np.linspace(-h, h, 2 * (n_im // 2) + 1)
    grid = (re[None, :] + 1j * im[:, None]).ravel()
    return np.concatenate([grid, np.asarray(extra, dtype=complex)])


def sample_F_on_strip(medium, source, k_grid, *, max_im_k=None):
    """``F(z) = g_0(z) + i g_1(z)`` with ``g_x(z) = (phi(x, z) - phi(x, -z)) / (2i)``."""
    z = np.asarray(k_grid, dtype=complex).ravel()
    bound = max_im_k if max_im_k is not None else max(1.0, float(np.max(np.abs(z.imag))) * 1.01)
    try:
        plus = solve_many(medium, source.f_values, z, max_im_k=bound)
        minus = solve_many(medium, source.f_values, -z, max_im_k=bound)
    except SolverError as err:
        if err.code == "SINGULAR_SYSTEM":
            raise ContinuationError("STRIP_VIOLATION", f"singular solve inside the strip at k = {err.k}") from err
        raise
    g = (plus[[0, -1]] - minus[[0, -1]]) / 2j
    F = g[0] + 1j * g[1]
    m_plus = np.abs(plus[0]) + np.abs(plus[-1])
    m_minus = np.abs(minus[0]) + np.abs(minus[-1])
    m_f = float(max(np.max(m_plus), np.max(m_minus)))
    return StripSampling(z, F, m_f)


def cauchy_riemann_residual(func, z, step):
    """Relative ``|dF/dy - i dF/dx|`` by centered differences at the points ``z``."""
    z = np.asarray(z, dtype=complex)
    fx = (func(z + step) - func(z - step)) / (2 * step)
    fy = (func(z + 1j * step) - func(z - 1j * step)) / (2 * step)
    return np.abs(fy - 1j * fx) / np.maximum(np.abs(fx), 1e-300)


# ---------------------------------------------------------------------------
# harmonic measure


@dataclass(frozen=True)
class HarmonicMeasureField:
    x: np.ndarray
    y: np.ndarray
    w_values: np.ndarray
    K: float
    n_h: int
    h: float

    def on_axis(self, k):
        """``w_0(k, K)`` on the real axis by linear interpolation in ``x``."""
        mid = len(self.y) // 2
        return np.interp(k, self.x, self.w_values[mid])

    def metadata(self):
        return {"K": self.K, "n_h": self.n_h, "h": self.h, "X_max": float(self.x[-1]),
                "nx": len(self.x), "ny": len(self.y)}


def harmonic_measure(K, n_h, X_max, grid_res, *, convention="section"):
    """Five-point solve for the harmonic measure of the slit ``(0, K]`` in the half-strip.

    Domain ``[0, X_max] x [-h, h]`` with ``h`` from :func:`strip_half_width`;
    ``w = 1`` on slit nodes, ``w = 0`` on the three strip sides and on the
    truncation side ``x = X_max``.  ``grid_res`` is the number of cells
    between the slit and each horizontal side.
    """
    h = strip_half_width(n_h, convention)
    if not K > 0:
        raise ValidationError("BAD_PARAMETER", f"K must be positive, got {K}")
    if X_max < 3 * max(K, 1.0):
        raise ValidationError("BAD_PARAMETER", f"X_max = {X_max} below 3 max(K, 1)")
    if grid_res < 2:
        raise ValidationError("BAD_PARAMETER", f"grid_res must be >= 2, got {grid_res}")
    dy = h / grid_res
    # slit tip on a node
    dx = K / max(1, round(K / dy))
    nx = int(math.ceil(X_max / dx - 1e-9))
    x = np.arange(nx + 1) * dx
    y = -h + np.arange(2 * grid_res + 1) * dy
    ny = y.size
    w = np.zeros((ny, nx + 1))
    slit = (x > 0) & (x <= K * (1 + 1e-12))
    w[grid_res, slit] = 1.0

    # interior unknowns: 1..ny-2 by 1..nx-1, minus slit nodes
    mx, my = nx - 1, ny - 2
    lap_x = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(mx, mx)) / dx**2
    lap_y = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(my, my)) / dy**2
    lap = (sp.kron(sp.identity(my), lap_x) + sp.kron(lap_y, sp.identity(mx))).tocsr()
    fixed = np.zeros((my, mx), dtype=bool)
    fixed[grid_res - 1, slit[1:-1]] = True
    fixed = fixed.ravel()
    free = ~fixed
    rhs = -lap[free][:, fixed] @ np.ones(int(fixed.sum()))
    sol = spsolve(lap[free][:, free].tocsc(), rhs)
    interior = np.ones(my * mx)
    interior[free] = sol
    w[1:-1, 1:-1] = interior.reshape(my, mx)
    resid = lap[free][:, free] @ sol - rhs
    if not np.all(np.isfinite(sol)) or np.max(np.abs(resid)) > 1e-8 * max(1.0, np.max(np.abs(rhs))):
        raise ContinuationError("NO_CONVERGENCE", "harmonic-measure solve did not converge")
    w[grid_res, slit] = 1.0
    return HarmonicMeasureField(x, y, w, float(K), int(n_h), float(h))


def harmonic_measure_converged(K, n_h, ks, *, X_max=None, grid_res=8, tol=1e-3, max_doublings=6,
                               convention="section"):
    """Refine :func:`harmonic_measure` until ``w_0`` at ``ks`` is stable to ``tol``.

    The slit tip limits the five-point scheme to first order, so successive
    doublings are combined as ``2 w_{2n} - w_n`` and the loop stops once two
    consecutive extrapolated values differ by at most ``tol``.  Returns
    ``(field, values, history)`` with ``field`` the finest solve and
    ``history`` a list of ``(grid_res, raw, extrapolated)``.
    """
    X_max = X_max if X_max is not None else 3 * max(K, 1.0) + 10.0 * strip_half_width(n_h, convention)
    ks = np.asarray(ks, dtype=float)
    history = []
    raw_prev = ext_prev = None
    for _ in range(max_doublings + 1):
        field = harmonic_measure(K, n_h, X_max, grid_res, convention=convention)
        raw = field.on_axis(ks)
        ext = 2.0 * raw - raw_prev if raw_prev is not None else None
        history.append((grid_res, raw, ext))
        if ext is not None and ext_prev is not None and np.max(np.abs(ext - ext_prev)) <= tol:
            return field, ext, history
        raw_prev, ext_prev = raw, ext
        grid_res *= 2
    raise ContinuationError("NO_CONVERGENCE", f"w_0 not stable to {tol} after refinement: {history}")


def two_constants_check(strip, w_field, K, k, *, slack=0.01, w0=None):
    """``(lhs, rhs, holds)`` for ``|F(k)| <= (2 M_f)^{1-w_0} (sup_{(0,K)} |F|)^{w_0}``.

    ``w0`` overrides the value read from ``w_field`` (for instance an
    extrapolated one from :func:`harmonic_measure_converged`).
    """
    if not k > K:
        raise ContinuationError("RANGE", f"k = {k} must exceed K = {K}")
    if k > w_field.x[-1]:
        raise ContinuationError("RANGE", f"k = {k} outside the harmonic-measure domain")
    ks, fs = strip.real_axis()
    band = (ks > 0) & (ks <= K)
    if not np.any(band):
        raise ContinuationError("RANGE", f"no real-axis samples in (0, {K}]")
    lhs = float(abs(strip.at(k)))
    sup_band = float(np.max(np.abs(fs[band])))
    w0 = float(w_field.on_axis(k) if w0 is None else w0)
    big = 2.0 * strip.M_f_estimate
    if sup_band == 0.0:
        rhs = 0.0 if w0 > 0 else big
    else:
        rhs = big ** (1.0 - w0) * sup_band**w0
    return lhs, float(rhs), bool(lhs <= rhs * (1.0 + slack))
