"""Hardt-Simon foliation leaves of a Lawson cone in the (r, s) quarter plane.

A side "+" leaf is the graph s = f(r) leaving the s-axis at height s0 with
f'(0) = 0 and solving

    f'' / (1 + f'^2) + (i-1) f' / r - (j-1) / f = 0.

A side "-" leaf is the same problem with the factors swapped: r = g(s)
leaving the r-axis. The ODE is integrated for the deviation w = f - m r from
the cone. Writing the right side in w avoids the cancellation that
otherwise swamps the r^-2 tail.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .cone import ConeSpec, indicial_roots
from .errors import DomainError, LeafIntegrationError
from .fitting import AsymptoticFit, fit_powers

START_FRACTION = 1e-3
SAMPLE_SPACING = 0.02
DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-13


@dataclass(frozen=True)
class LeafCurve:
    """Sampled leaf. Arrays are indexed along the curve away from the axis.

    ``offset`` is s - m r computed without cancellation. For the degenerate
    cone line (lam == 0) it is identically zero.
    """

    cone: ConeSpec
    side: str
    lam: float
    r: np.ndarray
    s: np.ndarray
    offset: np.ndarray
    arclength: np.ndarray
    tangent: np.ndarray
    unit_normal: np.ndarray
    k1: np.ndarray
    k_top: np.ndarray
    k_bot: np.ndarray
    _dense: object = field(default=None, repr=False, compare=False)

    @property
    def samples(self):
        return np.column_stack([self.r, self.s])

    @property
    def is_cone_line(self):
        return self.lam == 0.0

    @property
    def A2(self):
        c = self.cone
        # the cone line is singular at the origin: inf - inf gives nan there
        with np.errstate(invalid="ignore"):
            return self.k1**2 + (c.i - 1) * self.k_top**2 + (c.j - 1) * self.k_bot**2

    @property
    def A3(self):
        c = self.cone
        # the cone line is singular at the origin: inf - inf gives nan there
        with np.errstate(invalid="ignore"):
            return self.k1**3 + (c.i - 1) * self.k_top**3 + (c.j - 1) * self.k_bot**3

    def mean_curvature(self):
        c = self.cone
        return self.k1 + (c.i - 1) * self.k_top + (c.j - 1) * self.k_bot

    def offset_at(self, r):
        """s - m r of the leaf as a function of r (cubic spline in r)."""
        r = np.asarray(r, dtype=float)
        if self.is_cone_line:
            return np.zeros_like(r)
        spline = self._offset_spline()
        lo, hi = self.r[0], self.r[-1]
        if np.any((r < lo - 1e-12) | (r > hi + 1e-12)):
            raise DomainError(f"r outside leaf range [{lo:.4g}, {hi:.4g}]")
        return spline(r)

    def height_at(self, r):
        return self.cone.slope * np.asarray(r, dtype=float) + self.offset_at(r)

    def _offset_spline(self):
        sp_ = self.__dict__.get("_spline_cache")
        if sp_ is None:
            # side '-' starts with a vertical tangent; drop the first few
            # samples where r(s) is flat so the spline in r is well posed
            r, off = self.r, self.offset
            keep = np.concatenate([[True], np.diff(r) > 1e-9])
            sp_ = CubicSpline(r[keep], off[keep])
            object.__setattr__(self, "_spline_cache", sp_)
        return sp_

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "s", "arclength", "k1", "k_top", "k_bot", "A2", "A3"])
            for row in zip(self.r, self.s, self.arclength, self.k1, self.k_top,
                           self.k_bot, self.A2, self.A3):
                writer.writerow([repr(float(x)) for x in row])


def _canonical(cone, side):
    """(p, q, M): dims of the axis factor and the other factor, graph slope."""
    if side == "+":
        return cone.i, cone.j, cone.slope
    if side == "-":
        return cone.j, cone.i, 1.0 / cone.slope
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def _rhs_factory(p, q, M):
    def rhs(x, y):
        w, wp, _ = y
        fp = M + wp
        num = M * w + M * x * wp + w * wp
        wpp = -(1.0 + fp * fp) * (p - 1) * num / (x * (M * x + w))
        return [wp, wpp, math.sqrt(1.0 + fp * fp)]

    return rhs


def solve_leaf(cone, side, start_height, r_max, rtol=DEFAULT_RTOL,
               atol=DEFAULT_ATOL, spacing=SAMPLE_SPACING):
    """Integrate a foliation leaf from the axis out to r = r_max."""
    cone.require_stable()
    if start_height <= 0:
        raise DomainError(f"start height must be positive, got {start_height}")
    if r_max <= 0:
        raise DomainError(f"r_max must be positive, got {r_max}")
    p, q, M = _canonical(cone, side)
    y0v = float(start_height)
    f2 = (q - 1) / (p * y0v)
    x0 = START_FRACTION * y0v
    # series start; the O(x^4) remainder is below the integrator tolerance
    w0 = y0v - M * x0 + 0.5 * f2 * x0**2
    wp0 = -M + f2 * x0
    rhs = _rhs_factory(p, q, M)

    def height(x, y):
        return M * x + y[0]

    height.terminal = True
    height.direction = -1

    # side '-' ends where r = g(s) reaches r_max; g(s) > M s so s < r_max / M
    x_end = r_max if side == "+" else r_max / M + 1.0
    sol = solve_ivp(rhs, (x0, x_end), [w0, wp0, x0], method="RK45", rtol=rtol,
                    atol=atol, dense_output=True, events=height)
    if sol.status == 1 and sol.t_events[0].size:
        xe = float(sol.t_events[0][0])
        raise LeafIntegrationError(f"leaf reaches the axis at x = {xe:.6g}")
    if sol.status != 0:
        raise LeafIntegrationError(f"leaf integration failed: {sol.message}")

    num = max(int(math.ceil((x_end - x0) / spacing)), 50)
    x = np.concatenate([[0.0], np.linspace(x0, x_end, num)])
    Y = sol.sol(x[1:])
    w = np.concatenate([[y0v], Y[0]])
    wp = np.concatenate([[-M], Y[1]])
    arc = np.concatenate([[0.0], Y[2]])
    y = M * x + w
    fp = M + wp
    g = np.sqrt(1.0 + fp * fp)
    num_ = M * w + M * x * wp + w * wp
    with np.errstate(divide="ignore", invalid="ignore"):
        wpp = -(1.0 + fp * fp) * (p - 1) * num_ / (x * (M * x + w))
        ratio = fp / x  # f'/x, -> f''(0) on the axis
    wpp[0] = f2
    ratio[0] = f2
    kappa = wpp / g**3
    k_axis_factor = ratio / g  # curvature from the factor whose axis we start on
    k_other = 1.0 / (y * g)

    if side == "+":
        r, s = x, y
        offset = w
        k1, k_top, k_bot = kappa, k_axis_factor, -k_other
        tangent = np.column_stack([1.0 / g, fp / g])
    else:
        r, s = y, x
        offset = -cone.slope * w
        k1, k_top, k_bot = -kappa, k_other, -k_axis_factor
        tangent = np.column_stack([fp / g, 1.0 / g])
        keep = r <= r_max
        # keep one sample past r_max so splines cover it
        last = min(int(np.argmax(~keep)) if not keep.all() else len(r) - 1, len(r) - 1)
        sl = slice(0, last + 1)
        r, s, offset, arc = r[sl], s[sl], offset[sl], arc[sl]
        k1, k_top, k_bot, tangent = k1[sl], k_top[sl], k_bot[sl], tangent[sl]
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    return LeafCurve(cone, side, float(start_height), r, s, offset, arc, tangent,
                     normal, k1, k_top, k_bot, _dense=sol)


def cone_line(cone, r_max, spacing=SAMPLE_SPACING):
    """The cone ray s = m r as a degenerate leaf (target for a = 0)."""
    m = cone.slope
    c = math.sqrt(1.0 + m * m)
    L = r_max * c
    l = np.linspace(0.0, L, max(int(math.ceil(L / spacing)), 50) + 1)
    r = l / c
    s = m * l / c
    tangent = np.tile([1.0 / c, m / c], (len(l), 1))
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    with np.errstate(divide="ignore"):
        k_top = m / l
        k_bot = -1.0 / (m * l)
    return LeafCurve(cone, "+", 0.0, r, s, np.zeros_like(l), l, tangent, normal,
                     np.zeros_like(l), k_top, k_bot)


def mean_curvature_residual(leaf, r_min=0.05, step=1e-3):
    """sup |sum k_i| with k1 from a spline derivative of the sampled slope.

    The dense solution is resampled on a uniform grid and only w and w' are
    used, so the check is independent of the ODE right side.
    """
    if leaf.is_cone_line:
        return 0.0
    p, q, M = _canonical(leaf.cone, leaf.side)
    x_hi = leaf.r[-1] if leaf.side == "+" else leaf.s[-1]
    x = np.arange(r_min, x_hi, step)
    w, wp, _ = leaf._dense.sol(x)
    fp = M + wp
    g = np.sqrt(1.0 + fp * fp)
    wpp = CubicSpline(x, wp).derivative()(x)
    H = wpp / g**3 + (p - 1) * fp / (x * g) - (q - 1) / ((M * x + w) * g)
    return float(np.max(np.abs(H[5:-5])))


# --------------------------------------------------------------------------
# asymptotics


def _fit_samples(leaf, window, num=400):
    lo, hi = window
    if lo < leaf.r[0] or hi > leaf.r[-1]:
        raise DomainError(f"fit window {window} outside leaf range")
    if hi / lo < 2:
        raise DomainError(f"fit window ratio must be >= 2, got {hi / lo:.3g}")
    r = np.geomspace(lo, hi, num)
    return r, leaf.offset_at(r)


def leaf_asymptotics(leaf, fit_window):
    """Fit s - m r on the window against r^a+ and r^(a+ - 1)."""
    ap, _ = indicial_roots(leaf.cone)
    r, off = _fit_samples(leaf, fit_window)
    return fit_powers(r, off, (ap, ap - 1.0), window=fit_window, weight_exponent=-ap)


def unit_leaf_coefficient(cone, side="+", window=(20.0, 60.0)):
    """Leading coefficient b_1 of s - m r for the leaf with start height 1."""
    leaf = solve_leaf(cone, side, 1.0, window[1] * 1.05)
    return leaf_asymptotics(leaf, window).leading


def lambda_for_coefficient(cone, a, side="+", window=(20.0, 60.0)):
    """Homothety scale whose leaf has leading coefficient a (a >= 0).

    Offsets scale as lam^(1 - a+) under homothety, so
    lam = (a / b_1)^(1 / (1 - a+)).
    """
    if a < 0:
        raise DomainError("coefficient must be non-negative; use the '-' side")
    if a == 0:
        return 0.0
    ap, _ = indicial_roots(cone)
    b1 = abs(unit_leaf_coefficient(cone, side, window))
    return (a / b1) ** (1.0 / (1.0 - ap))


def leaf_for_coefficient(cone, a, r_max, side="+"):
    """Target leaf Gamma_a: the cone line for a = 0, else the scaled leaf."""
    lam = lambda_for_coefficient(cone, a, side)
    if lam == 0.0:
        return cone_line(cone, r_max)
    return solve_leaf(cone, side, lam, r_max)


@dataclass(frozen=True)
class PairResult:
    first: int
    second: int
    status: str  # "disjoint", "coincident" or "intersecting"
    min_gap: float
    crossings: int


@dataclass(frozen=True)
class FoliationReport:
    pairs: list
    sides_separated: bool

    @property
    def foliated(self):
        return all(p.status != "intersecting" for p in self.pairs) and self.sides_separated


def foliation_check(leaves, num=2000, coincident_tol=1e-9):
    """Pairwise intersection test of leaves on their common r range."""
    cones = {(lf.cone.i, lf.cone.j) for lf in leaves}
    if len(cones) > 1:
        raise DomainError("all leaves must belong to the same cone")
    separated = True
    for lf in leaves:
        off = lf.offset[1:] if lf.side == "-" else lf.offset
        if lf.is_cone_line:
            continue
        if lf.side == "+" and not np.all(off > 0):
            separated = False
        if lf.side == "-" and not np.all(off < 0):
            separated = False
    pairs = []
    for a in range(len(leaves)):
        for b in range(a + 1, len(leaves)):
            la, lb = leaves[a], leaves[b]
            lo = max(la.r[0], lb.r[0])
            hi = min(la.r[-1], lb.r[-1])
            if hi <= lo:
                pairs.append(PairResult(a, b, "disjoint", float("inf"), 0))
                continue
            # stay clear of a vertical-tangent start on side '-'
            lo = lo + 1e-6 * (hi - lo)
            r = np.linspace(lo, hi, num)
            diff = la.offset_at(r) - lb.offset_at(r)
            scale = max(np.max(np.abs(la.offset_at(r))), 1e-300)
            gap = float(np.min(np.abs(diff)))
            if np.max(np.abs(diff)) <= coincident_tol * max(scale, 1.0):
                status, crossings = "coincident", 0
            else:
                sg = np.sign(diff)
                crossings = int(np.count_nonzero(sg[1:] * sg[:-1] < 0) + np.count_nonzero(sg == 0))
                status = "intersecting" if crossings else "disjoint"
            pairs.append(PairResult(a, b, status, gap, crossings))
    return FoliationReport(pairs, separated)


def curvature_decay_check(leaf, window=(20.0, 60.0), zero_tol=1e-14):
    """Log-log fit of |A_3| along the leaf over the window."""
    lo, hi = window
    mask = (leaf.r >= lo) & (leaf.r <= hi)
    if mask.sum() < 5:
        raise DomainError(f"window {window} has too few leaf samples")
    r = leaf.r[mask]
    a3 = leaf.A3[mask]
    if np.max(np.abs(a3)) < zero_tol:
        return AsymptoticFit((), (), 0.0, (lo, hi), 1.0, numerically_zero=True)
    slope, icpt = np.polyfit(np.log(r), np.log(np.abs(a3)), 1)
    pred = np.sign(np.median(a3)) * np.exp(icpt) * r**slope
    rms = float(np.sqrt(np.mean((a3 - pred) ** 2)))
    return AsymptoticFit(
        exponents=(float(slope),),
        coefficients=(float(np.sign(np.median(a3)) * np.exp(icpt)),),
        residual_rms=rms,
        window=(lo, hi),
        condition_number=1.0,
        loglog_slope=float(slope),
    )
