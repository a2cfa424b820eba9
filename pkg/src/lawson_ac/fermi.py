"""Fermi coordinates (l, t) about a leaf in the (r, s) quarter plane.

l is arclength along the leaf from its axis start and t is the signed
distance, positive on the side the unit normal points to (increasing s).
The chart is local. Each foot point carries a validity band in |t| from
the in-plane curvature of the leaf.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import maximum_filter1d
from scipy.spatial import cKDTree

from .errors import FermiValidityError

BAND_CAP = 10.0
BAND_FACTOR = 0.5
SAMPLE_STEP = 0.01
EPSILON_CUTOFF = 0.1
CLAMP = 1.0 - 1e-9


@dataclass(frozen=True)
class Projection:
    """Bulk closest-point result. ``valid`` marks points inside the band."""

    l: np.ndarray
    t: np.ndarray
    valid: np.ndarray
    ambiguous: np.ndarray


@dataclass(frozen=True)
class FermiChart:
    arclength: np.ndarray
    r: np.ndarray
    s: np.ndarray
    a2: np.ndarray
    band_samples: np.ndarray
    _rs: CubicSpline = field(repr=False, compare=False)
    _tree: cKDTree = field(repr=False, compare=False)
    _dense_l: np.ndarray = field(repr=False, compare=False)

    # ------------------------------------------------------------ builders

    @classmethod
    def from_samples(cls, arclength, r, s, k1, a2, step=SAMPLE_STEP):
        arclength = np.asarray(arclength, dtype=float)
        keep = np.concatenate([[True], np.diff(arclength) > 1e-12])
        arclength = arclength[keep]
        pts = np.column_stack([np.asarray(r, float)[keep], np.asarray(s, float)[keep]])
        rs = CubicSpline(arclength, pts)
        k1 = np.abs(np.asarray(k1, dtype=float)[keep])
        a2 = np.asarray(a2, dtype=float)[keep]

        band = _band_from_curvature(arclength, k1)

        dense_l = np.arange(arclength[0], arclength[-1], step)
        dense_l = np.append(dense_l, arclength[-1])
        tree = cKDTree(rs(dense_l))
        return cls(arclength, pts[:, 0], pts[:, 1], a2, band, rs, tree, dense_l)

    @classmethod
    def from_leaf(cls, leaf, step=SAMPLE_STEP):
        if leaf.is_cone_line:
            return cls.from_cone_line(leaf.cone, leaf.arclength[-1], step)
        return cls.from_samples(leaf.arclength, leaf.r, leaf.s, leaf.k1, leaf.A2, step)

    @classmethod
    def from_cone_line(cls, cone, length, step=SAMPLE_STEP):
        """Straight chart along the cone ray s = m r, with exact cone A_2."""
        c = np.hypot(1.0, cone.slope)
        l = np.linspace(0.0, float(length), max(int(np.ceil(length / 0.05)), 10) + 1)
        with np.errstate(divide="ignore"):
            a2 = (cone.n - 2) / l**2
        a2[0] = a2[1]  # the apex is never a foot point of interest
        return cls.from_samples(l, l / c, cone.slope * l / c, np.zeros_like(l), a2, step)

    @classmethod
    def straight(cls, direction, length, step=SAMPLE_STEP):
        """Chart along the ray t * direction from the origin (test geometry)."""
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
        l = np.linspace(0.0, float(length), max(int(np.ceil(length / 0.05)), 10) + 1)
        return cls.from_samples(l, l * u[0], l * u[1], np.zeros_like(l),
                                np.zeros_like(l), step)

    # ------------------------------------------------------------ geometry

    @property
    def length(self):
        return float(self.arclength[-1])

    def point(self, l):
        return self._rs(np.asarray(l, dtype=float))

    def tangent(self, l):
        d = self._rs(np.asarray(l, dtype=float), 1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def normal(self, l):
        tg = self.tangent(l)
        return np.stack([-tg[..., 1], tg[..., 0]], axis=-1)

    def band(self, l):
        return np.interp(l, self.arclength, self.band_samples)

    def A2(self, l):
        return np.interp(l, self.arclength, self.a2)

    def from_fermi(self, l, t):
        l = np.asarray(l, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any((l < self.arclength[0]) | (l > self.length)):
            raise FermiValidityError("arclength outside the chart")
        if np.any(np.abs(t) > self.band(l)):
            raise FermiValidityError("|t| exceeds the validity band")
        return self.point(l) + t[..., None] * self.normal(l)

    def project(self, points, check_ambiguity=True, newton_steps=30):
        """Closest-point projection of many points; never raises."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        _, idx = self._tree.query(P)
        l = self._dense_l[idx].copy()
        lmin, lmax = self.arclength[0], self.length
        for _ in range(newton_steps):
            g0 = self._rs(l)
            g1 = self._rs(l, 1)
            g2 = self._rs(l, 2)
            diff = g0 - P
            f = np.einsum("ij,ij->i", diff, g1)
            fp = np.einsum("ij,ij->i", g1, g1) + np.einsum("ij,ij->i", diff, g2)
            fp = np.where(fp > 1e-3, fp, 1.0)
            dl = f / fp
            l = np.clip(l - dl, lmin, lmax)
            if np.max(np.abs(dl)) < 1e-13:
                break
        foot = self._rs(l)
        tg = self._rs(l, 1)
        tg /= np.linalg.norm(tg, axis=1, keepdims=True)
        nu = np.column_stack([-tg[:, 1], tg[:, 0]])
        diff = P - foot
        t = np.einsum("ij,ij->i", diff, nu)
        tangential = np.abs(np.einsum("ij,ij->i", diff, tg))
        valid = (np.abs(t) <= self.band(l)) & (tangential <= 1e-8 * (1.0 + np.abs(t)))
        ambiguous = np.zeros(len(P), dtype=bool)
        if check_ambiguity and valid.any():
            ambiguous[valid] = self._ambiguous(P[valid], l[valid], np.abs(t[valid]))
            valid &= ~ambiguous
        return Projection(l, t, valid, ambiguous)

    def _ambiguous(self, P, l, dist, tol=1e-6):
        """True where a second, far-away foot point is within ``tol`` as close."""
        h = float(self._dense_l[1] - self._dense_l[0]) if len(self._dense_l) > 1 else 0.0
        slack = tol + h * h
        hits = self._tree.query_ball_point(P, dist + slack)
        out = np.zeros(len(P), dtype=bool)
        for k, near in enumerate(hits):
            if not near:
                continue
            gap = 2.0 * np.sqrt(4.0 * dist[k] * slack) + 2.0 * h
            out[k] = np.any(np.abs(self._dense_l[near] - l[k]) > gap)
        return out

    def to_fermi(self, points):
        """(l, t) for points inside the band; raises otherwise."""
        pr = self.project(points)
        if pr.ambiguous.any():
            raise FermiValidityError("ambiguous closest-point projection")
        if not pr.valid.all():
            raise FermiValidityError(
                f"{int((~pr.valid).sum())} point(s) outside the chart's validity band"
            )
        if np.ndim(points) == 1:
            return float(pr.l[0]), float(pr.t[0])
        return pr.l, pr.t

    def to_csv(self, path):
        nu = self.normal(self.arclength)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["l", "r", "s", "nu_r", "nu_s", "band"])
            for row in zip(self.arclength, self.r, self.s, nu[:, 0], nu[:, 1],
                           self.band_samples):
                writer.writerow([repr(float(x)) for x in row])


def _band_from_curvature(l, k1, candidates=64):
    """Largest b <= BAND_CAP with b * max|k1| over [l - b, l + b] <= BAND_FACTOR."""
    h = max(float(np.min(np.diff(l))), (l[-1] - l[0]) / 2e5)
    grid = np.arange(l[0], l[-1] + h, h)
    k = np.interp(grid, l, k1)
    band = np.zeros_like(grid)
    for b in np.geomspace(1e-3, BAND_CAP, candidates):
        size = 2 * int(np.ceil(b / h)) + 1
        kmax = maximum_filter1d(k, size, mode="nearest")
        band = np.where(b * kmax <= BAND_FACTOR, b, band)
    return np.interp(l, grid, band)


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 + x * (-15.0 + 6.0 * x))


def angular_cutoff(r, s, epsilon=EPSILON_CUTOFF):
    """rho = 1 on eps s < r < s / eps, ramping to 0 at the axes in the angle."""
    theta = np.arctan2(np.asarray(s, dtype=float), np.asarray(r, dtype=float))
    edge = np.arctan(epsilon)
    return smoothstep(theta / edge) * smoothstep((0.5 * np.pi - theta) / edge)


def trace_formula(t, l_radius, a2, rho, profiles, xi=None):
    """H(t - xi) + rho eta(t - xi) A_2, clamped into (-1, 1)."""
    shift = 0.0 if xi is None else xi(l_radius)
    tau = np.asarray(t, dtype=float) - shift
    val = profiles.H(tau) + rho * profiles.eta(tau) * a2
    return np.clip(val, -CLAMP, CLAMP)


def boundary_trace(chart, cone, profiles, xi, points, epsilon=EPSILON_CUTOFF):
    """Dirichlet data on L_d at ``points`` (an (N, 2) array along the segment).

    Points outside the chart band take the value of the nearest valid point,
    which continues the trace as a constant toward each axis.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    pr = chart.project(P)
    if not pr.valid.any():
        raise FermiValidityError("no point of L_d lies inside the chart band")
    foot = chart.point(pr.l)
    radius = np.hypot(foot[:, 0], foot[:, 1])
    rho = angular_cutoff(P[:, 0], P[:, 1], epsilon)
    val = trace_formula(pr.t, radius, chart.A2(pr.l), rho, profiles, xi)
    if not pr.valid.all():
        good = np.flatnonzero(pr.valid)
        _, nearest = cKDTree(P[good]).query(P[~pr.valid])
        val[~pr.valid] = val[good[nearest]]
    return val
