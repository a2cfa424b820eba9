"""Zero level set of a computed field and its asymptotic analysis.

The nodal line is traced with marching squares, written as a graph
s = F(r), and measured against a target leaf either as a Fermi height
h(l) (signed normal distance) or as the vertical difference F - f_a.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from skimage.measure import find_contours

from .cone import RadialFunction, indicial_roots
from .errors import FermiValidityError, FitError, NodalError
from .fitting import fit_powers

MAX_DROPPED = 0.2


@dataclass(frozen=True)
class NodalCurve:
    samples: np.ndarray  # (N, 2) points (r, s), ordered away from the axis region
    r_grid: np.ndarray
    F: np.ndarray
    monotone: bool  # r strictly increasing along the curve
    increasing: bool  # F strictly increasing on r_grid

    @property
    def r(self):
        return self.samples[:, 0]

    @property
    def s(self):
        return self.samples[:, 1]

    def graph(self, r):
        """F(r) by linear interpolation of the ordered samples."""
        if not self.monotone:
            raise NodalError("nodal set is not a graph over r")
        return np.interp(r, self.r, self.s, left=np.nan, right=np.nan)

    def to_csv(self, path, chart=None):
        if chart is not None:
            pr = chart.project(self.samples, check_ambiguity=False)
            l, t = pr.l, np.where(pr.valid, pr.t, np.nan)
        else:
            l = t = np.full(len(self.samples), np.nan)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "s", "l", "t"])
            for row in zip(self.r, self.s, l, t):
                writer.writerow([repr(float(x)) for x in row])


def _from_points(pts, spacing):
    # start at the end nearest the axes
    if min(pts[-1]) < min(pts[0]) or (
        min(pts[-1]) == min(pts[0]) and np.hypot(*pts[-1]) < np.hypot(*pts[0])
    ):
        pts = pts[::-1]
    keep = np.concatenate([[True], np.any(np.diff(pts, axis=0) != 0, axis=1)])
    pts = pts[keep]
    monotone = bool(np.all(np.diff(pts[:, 0]) > 0))
    if monotone:
        r_grid = np.arange(pts[0, 0], pts[-1, 0], spacing)
        F = np.interp(r_grid, pts[:, 0], pts[:, 1])
        increasing = bool(np.all(np.diff(F) > 0))
    else:
        r_grid = np.empty(0)
        F = np.empty(0)
        increasing = False
    return NodalCurve(pts, r_grid, F, monotone, increasing)


def nodal_from_samples(points, spacing=None):
    pts = np.asarray(points, dtype=float)
    if spacing is None:
        spacing = float(np.median(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    return _from_points(pts, spacing)


def extract_nodal(field, min_points=3):
    """Zero contour of ``field`` (marching squares on the non-exterior nodes)."""
    vals = field.values
    act = field.active
    v = np.where(act, vals, 0.0)
    if not (np.nanmax(v[act]) > 0 and np.nanmin(v[act]) < 0):
        raise NodalError("field has no sign change: empty nodal set")
    contours = [c for c in find_contours(v, 0.0, mask=act) if len(c) >= min_points]
    if not contours:
        raise NodalError("field has no sign change: empty nodal set")
    if len(contours) > 1:
        sizes = sorted((len(c) for c in contours), reverse=True)
        raise NodalError(f"nodal set has {len(contours)} components (sizes {sizes})")
    c = contours[0]
    pts = np.column_stack([field.r[0] + c[:, 0] * field.delta,
                           field.s[0] + c[:, 1] * field.delta])
    return _from_points(pts, field.delta)


def fermi_height(chart, nodal, num=None, return_dropped=False):
    """Signed normal distance h(l) of the nodal curve from the chart's leaf."""
    pr = chart.project(nodal.samples)
    n = len(nodal.samples)
    dropped = int(n - pr.valid.sum())
    if dropped > MAX_DROPPED * n:
        raise FermiValidityError(f"{dropped} of {n} nodal points lie outside the chart band")
    l, t = pr.l[pr.valid], pr.t[pr.valid]
    order = np.argsort(l)
    l, t = l[order], t[order]
    uniq = np.concatenate([[True], np.diff(l) > 1e-12])
    l, t = l[uniq], t[uniq]
    if len(l) < 4:
        raise FermiValidityError("too few nodal points inside the chart band")
    num = num or len(l)
    grid = np.linspace(l[0], l[-1], num)
    h = RadialFunction.from_values(grid, np.interp(grid, l, t))
    return (h, dropped) if return_dropped else h


def graph_difference(nodal, leaf, num=None):
    """F(r) - f_a(r) on the common r range, as a function of r."""
    lo = max(nodal.r_grid[0] if len(nodal.r_grid) else np.inf, leaf.r[0])
    hi = min(nodal.r_grid[-1] if len(nodal.r_grid) else -np.inf, leaf.r[-1])
    if not nodal.monotone or hi <= lo:
        raise NodalError("nodal set is not a graph over the leaf's r range")
    num = num or max(int((hi - lo) / 0.01), 10)
    r = np.linspace(max(lo, 1e-9), hi, num)
    diff = nodal.graph(r) - leaf.height_at(r)
    return RadialFunction.from_values(r, diff)


def fit_asymptotics(h, exponents, window, weight_exponent=None, cone=None):
    """Weighted power-law fit of h over ``window``.

    Weights default to l^(-alpha+) when a cone is given so the leading mode
    has comparable scale across the window.
    """
    lo, hi = map(float, window)
    if lo < h.grid[0] - 1e-12 or hi > h.grid[-1] + 1e-12:
        raise FitError(f"window {window} outside the data range "
                       f"[{h.grid[0]:.4g}, {h.grid[-1]:.4g}]")
    if hi / lo < 2:
        raise FitError(f"window ratio must be >= 2, got {hi / lo:.3g}")
    if weight_exponent is None and cone is not None:
        weight_exponent = -indicial_roots(cone)[0]
    return fit_powers(h.grid, h.values, exponents, window=window,
                      weight_exponent=weight_exponent)


def expansion_basis(cone):
    """{r^-1, r^a+} when A_3 does not vanish, otherwise the indicial pair."""
    ap, am = indicial_roots(cone)
    if cone.i == cone.j:
        return (ap, am)
    return (-1.0, ap)


def general_cone_expansion(cone, nodal, window):
    """Fit F(r) - m r against {r^-1, r^a+}; returns (c_ij, k) as coefficients."""
    ap, _ = indicial_roots(cone)
    if not nodal.monotone:
        raise NodalError("nodal set is not a graph over r")
    r = nodal.r_grid
    off = nodal.F - cone.slope * r
    h = RadialFunction.from_values(r, off) if len(r) > 3 else None
    if h is None:
        raise NodalError("nodal graph has too few samples")
    return fit_asymptotics(h, (-1.0, ap), window, weight_exponent=1.0)
