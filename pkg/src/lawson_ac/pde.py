"""Weighted Allen-Cahn energy on the truncated quadrant Omega_d and its minimization.

In the reduced coordinates (r, s) the energy is

    J(u) = sum over cells  w_c * [ 1/2 |grad u|^2 + W(u) ] * delta^2,
    w_c = r_c^(i-1) s_c^(j-1),   W(u) = (u^2 - 1)^2 / 4,

with w_c taken at the cell midpoint. The gradient term uses both edges in
each direction and the potential term is the mean of W over the four corners,
so J = sum_e kappa_e (u_a - u_b)^2 + sum_p M_p W(u_p). Neumann conditions on
the axes are natural. Dirichlet data sit on the first layer of nodes beyond
the line L_d.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, GeometryError, NonconvergenceError
from .fermi import CLAMP, EPSILON_CUTOFF, FermiChart, angular_cutoff, boundary_trace
from .fitting import _jsonable

log = logging.getLogger(__name__)

INTERIOR, NEUMANN, DIRICHLET, EXTERIOR = 0, 1, 2, 3
CLASS_NAMES = {INTERIOR: "interior", NEUMANN: "neumann_axis",
               DIRICHLET: "dirichlet_Ld", EXTERIOR: "exterior"}

MAX_RESOLUTION = 0.2
OVERSHOOT_TOL = 1e-6


# --------------------------------------------------------------------------
# domain


@dataclass(frozen=True)
class DomainSpec:
    cone: object
    leaf: object
    d: float
    resolution: float

    def __post_init__(self):
        if self.resolution <= 0 or self.resolution > MAX_RESOLUTION:
            raise DomainError(f"resolution must be in (0, {MAX_RESOLUTION}], got {self.resolution}")
        scale = max(1.0, float(self.leaf.lam))
        if self.d < 10.0 * scale:
            raise DomainError(f"d must be >= {10.0 * scale:.4g} for this leaf, got {self.d}")
        self.cone.require_stable()


@dataclass(frozen=True)
class LineLd:
    """L_d: the line through ``foot`` along ``normal``; exterior is the ``tangent`` side."""

    foot: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    r_intercept: float
    s_intercept: float

    def side(self, r, s):
        return (r - self.foot[0]) * self.tangent[0] + (s - self.foot[1]) * self.tangent[1]

    def project(self, points):
        P = np.atleast_2d(points)
        along = (P - self.foot) @ self.tangent
        return P - along[:, None] * self.tangent[None, :]


@dataclass
class Field2D:
    """Nodal field on an axis-aligned grid; exterior nodes hold NaN."""

    r: np.ndarray
    s: np.ndarray
    delta: float
    kind: np.ndarray
    values: np.ndarray
    weight_powers: tuple = (0, 0)
    line: LineLd | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.kind.shape

    @property
    def active(self):
        return self.kind != EXTERIOR

    @property
    def free(self):
        return (self.kind == INTERIOR) | (self.kind == NEUMANN)

    def coords(self):
        return np.meshgrid(self.r, self.s, indexing="ij")

    def count(self, cls):
        return int(np.count_nonzero(self.kind == cls))

    def copy(self, values=None):
        v = self.values.copy() if values is None else np.array(values, dtype=float)
        return Field2D(self.r, self.s, self.delta, self.kind, v, self.weight_powers,
                       self.line, dict(self.meta))

    def same_grid(self, other):
        return (self.shape == other.shape and self.delta == other.delta
                and np.array_equal(self.kind, other.kind)
                and np.allclose(self.r, other.r) and np.allclose(self.s, other.s))

    def to_csv(self, path):
        R, S = self.coords()
        m = self.active
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "s", "u"])
            for row in zip(R[m], S[m], self.values[m]):
                writer.writerow([repr(float(x)) for x in row])


def _line_for_leaf(chart, leaf, d):
    foot = np.array([d, float(leaf.height_at(d))])
    pr = chart.project(foot[None, :], check_ambiguity=False)
    l_d = float(pr.l[0])
    tg = chart.tangent(l_d)
    nu = chart.normal(l_d)
    if not (nu[0] < 0 < nu[1]) or tg[0] <= 0:
        raise GeometryError("L_d does not cross both axes inside the first quadrant")
    r_int = foot[0] - foot[1] * nu[0] / nu[1]
    s_int = foot[1] - foot[0] * nu[1] / nu[0]
    return LineLd(foot, tg, nu, float(r_int), float(s_int)), l_d


def _classify(R, S, inside, delta):
    kind = np.full(R.shape, EXTERIOR, dtype=np.int8)
    kind[inside] = INTERIOR
    kind[inside & ((R == 0.0) | (S == 0.0))] = NEUMANN
    # first layer beyond L_d: exterior nodes touching an inside node (8-neighbourhood)
    pad = np.pad(inside, 1, constant_values=False)
    touch = np.zeros_like(inside)
    nr, ns = inside.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                touch |= pad[1 + di:1 + di + nr, 1 + dj:1 + dj + ns]
    kind[~inside & touch] = DIRICHLET
    return kind


def build_domain(spec):
    """Classify the grid nodes of Omega_d. Values are left as NaN."""
    chart = FermiChart.from_leaf(spec.leaf)
    line, _ = _line_for_leaf(chart, spec.leaf, spec.d)
    delta = float(spec.resolution)
    nr = int(np.floor(line.r_intercept / delta)) + 2
    ns = int(np.floor(line.s_intercept / delta)) + 2
    r = np.arange(nr) * delta
    s = np.arange(ns) * delta
    R, S = np.meshgrid(r, s, indexing="ij")
    inside = line.side(R, S) <= 0.0
    kind = _classify(R, S, inside, delta)
    if not (kind[0, :] == NEUMANN).any() or not (kind[:, 0] == NEUMANN).any():
        raise GeometryError("domain does not touch both axes")
    values = np.full(R.shape, np.nan)
    cone = spec.cone
    meta = {"d": float(spec.d), "delta": delta, "i": cone.i, "j": cone.j,
            "lam": float(spec.leaf.lam), "side": spec.leaf.side}
    return Field2D(r, s, delta, kind, values, (cone.i - 1, cone.j - 1), line, meta)


def rectangle_field(r, s, dirichlet_mask, values, weight_powers=(0, 0)):
    """Field on a full rectangle; ``dirichlet_mask`` marks fixed nodes (tests)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    delta = float(r[1] - r[0])
    kind = np.where(dirichlet_mask, DIRICHLET, INTERIOR).astype(np.int8)
    R, S = np.meshgrid(r, s, indexing="ij")
    kind[(kind == INTERIOR) & ((R == 0.0) | (S == 0.0))] = NEUMANN
    return Field2D(r, s, delta, kind, np.array(values, dtype=float), weight_powers)


def assign_boundary_data(field, chart, cone, profiles, xi=None, epsilon=EPSILON_CUTOFF):
    """Dirichlet nodes get the trace at their projection onto L_d."""
    R, S = field.coords()
    dmask = field.kind == DIRICHLET
    P = np.column_stack([R[dmask], S[dmask]])
    on_line = field.line.project(P)
    out = field.copy()
    out.values[dmask] = boundary_trace(chart, cone, profiles, xi, on_line, epsilon)
    return out


def initial_guess(field, chart, profiles, xi=None, epsilon=EPSILON_CUTOFF):
    """Trace formula extended inward; plain H(t) where the chart is not valid."""
    R, S = field.coords()
    fmask = field.free
    P = np.column_stack([R[fmask], S[fmask]])
    pr = chart.project(P, check_ambiguity=False)
    foot = chart.point(pr.l)
    radius = np.hypot(foot[:, 0], foot[:, 1])
    tau = pr.t - (0.0 if xi is None else xi(radius))
    rho = np.where(pr.valid, angular_cutoff(P[:, 0], P[:, 1], epsilon), 0.0)
    val = profiles.H(tau) + rho * profiles.eta(tau) * chart.A2(pr.l)
    out = field.copy()
    out.values[fmask] = np.clip(val, -CLAMP, CLAMP)
    return out


# --------------------------------------------------------------------------
# discretization


def potential(u):
    return 0.25 * (u * u - 1.0) ** 2


def _weight(field, cone):
    if cone is None:
        pi, pj = field.weight_powers
    else:
        pi, pj = cone.i - 1, cone.j - 1
    rc = field.r[:-1] + 0.5 * field.delta
    sc = field.s[:-1] + 0.5 * field.delta
    return np.outer(np.power(rc, pi), np.power(sc, pj))


@dataclass
class _Discretization:
    index: np.ndarray  # grid -> active number, -1 for exterior
    kappa_h: np.ndarray
    kappa_v: np.ndarray
    mass: np.ndarray  # per active node
    K: sp.csr_matrix  # stiffness on active nodes (energy = 1/2 u K u)
    free: np.ndarray  # active numbers of free nodes
    fixed: np.ndarray


def discretize(field, cone=None):
    act = field.active
    cell_ok = act[:-1, :-1] & act[1:, :-1] & act[:-1, 1:] & act[1:, 1:]
    wc = np.where(cell_ok, _weight(field, cone), 0.0)
    nr, ns = field.shape
    padded = np.pad(wc, 1)
    # node (a, b) touches cells (a-1..a, b-1..b) -> padded[a..a+1, b..b+1]
    mass_grid = 0.25 * field.delta**2 * (padded[:-1, :-1] + padded[1:, :-1]
                                         + padded[:-1, 1:] + padded[1:, 1:])
    # horizontal edge (a,b)-(a+1,b): cells (a, b-1) and (a, b)
    kh = 0.25 * (padded[1:-1, :-1] + padded[1:-1, 1:])
    # vertical edge (a,b)-(a,b+1): cells (a-1, b) and (a, b)
    kv = 0.25 * (padded[:-1, 1:-1] + padded[1:, 1:-1])

    index = np.full((nr, ns), -1, dtype=np.int64)
    n_act = int(act.sum())
    index[act] = np.arange(n_act)
    rows, cols, vals = [], [], []
    for kap, a, b in ((kh, index[:-1, :], index[1:, :]), (kv, index[:, :-1], index[:, 1:])):
        m = (kap > 0) & (a >= 0) & (b >= 0)
        rows.append(a[m])
        cols.append(b[m])
        vals.append(2.0 * kap[m])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    off = sp.coo_matrix((-vals, (rows, cols)), shape=(n_act, n_act))
    off = (off + off.T).tocsr()
    K = (off - sp.diags(np.asarray(off.sum(axis=1)).ravel())).tocsr()
    kind = field.kind[act]
    free = np.flatnonzero((kind == INTERIOR) | (kind == NEUMANN))
    fixed = np.flatnonzero(kind == DIRICHLET)
    mass = mass_grid[act]
    if np.any(mass[free] <= 0):
        raise GeometryError("free node with no active cell")
    return _Discretization(index, kh, kv, mass, K, free, fixed)


def assemble_energy(field, cone=None, disc=None):
    """Weighted discrete energy (sphere-area constants dropped)."""
    if disc is None:
        disc = discretize(field, cone)
    u = field.values[field.active]
    if np.any(~np.isfinite(u)):
        raise DomainError("field values must be set on every non-exterior node")
    # edge differences, so constants carry exactly zero gradient energy
    g = np.where(field.active, field.values, 0.0)
    grad = (np.sum(disc.kappa_h * (g[1:, :] - g[:-1, :]) ** 2)
            + np.sum(disc.kappa_v * (g[:, 1:] - g[:, :-1]) ** 2))
    return float(grad + disc.mass @ potential(u))


def residual(field, cone=None, disc=None):
    """Delta_w u + u - u^3 on free nodes (continuum scale), as a grid with NaN elsewhere."""
    if disc is None:
        disc = discretize(field, cone)
    u = field.values[field.active]
    g = disc.K @ u + disc.mass * (u**3 - u)
    out = np.full(field.shape, np.nan)
    vals = np.full(u.shape, np.nan)
    vals[disc.free] = -g[disc.free] / disc.mass[disc.free]
    out[field.active] = vals
    return out


# --------------------------------------------------------------------------
# minimization


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 200
    stabilization: float = 2.0
    tau0: float = 1.0
    tau_max: float = 1e6
    newton_switch: float = 0.05
    min_tau: float = 1e-8


@dataclass
class SolveReport:
    energy_history: list
    final_residual: float
    iterations: int
    wall_time: float
    converged: bool
    newton_steps: int = 0
    flow_steps: int = 0
    clipped: int = 0
    max_overshoot: float = 0.0

    def to_dict(self, include_time=False):
        d = asdict(self)
        if not include_time:
            d.pop("wall_time")
        return _jsonable(d)

    def to_json(self, path, config_echo=None):
        d = self.to_dict()
        if config_echo is not None:
            d["config"] = _jsonable(config_echo)
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2, sort_keys=True)
            fh.write("\n")


class _Problem:
    """Energy restricted to free nodes, scaled by M^(1/2) for the linear algebra."""

    def __init__(self, disc, u_active):
        self.disc = disc
        self.u = u_active.copy()
        self.F = disc.free
        self.m = disc.mass[self.F]
        self.sq = np.sqrt(self.m)
        self.Kff = disc.K[self.F][:, self.F].tocsc()
        K = disc.K.tocoo()
        self.Kcoo = K

    def grad(self, uf):
        u = self.u.copy()
        u[self.F] = uf
        return (self.disc.K @ u)[self.F] + self.m * (uf**3 - uf)

    def energy_change(self, uf, du):
        """E(uf + du) - E(uf) from local differences, plus a roundoff bound."""
        u = self.u.copy()
        u[self.F] = uf
        step = np.zeros_like(u)
        step[self.F] = du
        K = self.Kcoo
        keep = K.row < K.col
        a, b, kij = K.row[keep], K.col[keep], -0.5 * K.data[keep]
        du_e = u[a] - u[b]
        dd_e = step[a] - step[b]
        grad_terms = kij * (2.0 * du_e * dd_e + dd_e * dd_e)
        v = uf + du
        pot_terms = 0.25 * self.m * du * (v + uf) * (v * v + uf * uf - 2.0)
        change = grad_terms.sum() + pot_terms.sum()
        noise = 64 * np.finfo(float).eps * (np.abs(grad_terms).sum() + np.abs(pot_terms).sum())
        return float(change), float(noise)


def minimize(field, cone=None, config=None):
    """Minimize the energy over the free nodes, Dirichlet values held fixed.

    Stage one is a stabilized semi-implicit gradient flow in the mass metric,

        (M/tau + K + S M) u_new = (M/tau + S M) u - M W'(u),

    with the step accepted only if the energy does not increase. Stage two
    is Newton on the Hessian K + M diag(3u^2 - 1), damped by backtracking on
    the energy. Energy changes smaller than floating-point resolution are
    recorded as zero.
    """
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    disc = discretize(field, cone)
    u_act = field.values[field.active].astype(float)
    if np.any(~np.isfinite(u_act)):
        raise DomainError("initial field must be set on every non-exterior node")
    prob = _Problem(disc, u_act)
    uf = prob.u[prob.F].copy()
    m, sq = prob.m, prob.sq
    S = cfg.stabilization
    n = len(uf)
    E = assemble_energy(field, disc=disc)
    history = [E]

    def res_norm(g):
        return float(np.max(np.abs(g / m))) if n else 0.0

    g = prob.grad(uf)
    rn = res_norm(g)
    tau = cfg.tau0
    flow_steps = newton_steps = it = 0
    Dinv = sp.diags(1.0 / sq)
    Khat = (Dinv @ prob.Kff @ Dinv).tocsc()
    eye = sp.identity(n, format="csc")
    lu_cache = {}

    def flow_solver(tau):
        key = float(tau)
        if key not in lu_cache:
            lu_cache.clear()
            lu_cache[key] = spla.splu((Khat + (1.0 / tau + S) * eye).tocsc())
        return lu_cache[key]

    while rn > cfg.tol and it < cfg.max_iter:
        it += 1
        accepted = False
        if rn < cfg.newton_switch and n:
            H = (Khat + sp.diags(3.0 * uf**2 - 1.0)).tocsc()
            du, slope = None, 1.0
            try:
                dhat = spla.splu(H).solve(-g / sq)
                du = dhat / sq
                slope = float(g @ du)
            except RuntimeError:  # singular Hessian: fall back to the flow
                pass
            if du is not None and np.all(np.isfinite(du)) and slope < 0:
                step = 1.0
                for _ in range(30):
                    dE, noise = prob.energy_change(uf, step * du)
                    if dE <= noise:
                        uf = uf + step * du
                        E += min(dE, 0.0) if abs(dE) > noise else 0.0
                        accepted = True
                        newton_steps += 1
                        break
                    step *= 0.5
        if not accepted:
            while tau >= cfg.min_tau:
                rhs = -g / sq  # gradient step direction in scaled form
                lu = flow_solver(tau)
                dhat = lu.solve(rhs)
                du = dhat / sq
                dE, noise = prob.energy_change(uf, du)
                if dE <= noise:
                    uf = uf + du
                    E += dE if abs(dE) > noise else 0.0
                    accepted = True
                    flow_steps += 1
                    tau = min(tau * 2.0, cfg.tau_max)
                    break
                tau *= 0.25
            if not accepted:
                break
        history.append(E)
        g = prob.grad(uf)
        rn = res_norm(g)

    overshoot = float(max(np.max(np.abs(uf)) - 1.0, 0.0)) if n else 0.0
    clipped = int(np.count_nonzero(np.abs(uf) > 1.0 + OVERSHOOT_TOL))
    if clipped:
        log.warning("clipping %d values with |u| > 1 + %g", clipped, OVERSHOOT_TOL)
        uf = np.clip(uf, -1.0, 1.0)

    out = field.copy()
    vals = out.values[out.active]
    vals[prob.F] = uf
    out.values[out.active] = vals
    report = SolveReport(
        energy_history=[float(e) for e in history],
        final_residual=rn,
        iterations=it,
        wall_time=time.perf_counter() - t0,
        converged=rn <= cfg.tol,
        newton_steps=newton_steps,
        flow_steps=flow_steps,
        clipped=clipped,
        max_overshoot=overshoot,
    )
    if not report.converged:
        raise NonconvergenceError(
            f"minimizer stopped at residual {rn:.3e} after {it} iterations",
            report=report, residual=rn,
        )
    return report, out


# --------------------------------------------------------------------------
# set-up helper


def prepare_field(cone, leaf, d, delta, profiles, xi=None, epsilon=EPSILON_CUTOFF):
    """Domain, Dirichlet trace and initial guess for the target ``leaf``."""
    spec = DomainSpec(cone, leaf, float(d), float(delta))
    chart = FermiChart.from_leaf(leaf)
    field = build_domain(spec)
    field = assign_boundary_data(field, chart, cone, profiles, xi, epsilon)
    field = initial_guess(field, chart, profiles, xi, epsilon)
    return field, chart


# --------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ComparisonReport:
    j_min: float
    j_max: float
    j_u1: float
    j_u2: float

    @property
    def defect(self):
        return (self.j_min + self.j_max) - (self.j_u1 + self.j_u2)

    @property
    def relative_defect(self):
        scale = max(abs(self.j_u1) + abs(self.j_u2), np.finfo(float).tiny)
        return abs(self.defect) / scale

    def holds(self, rtol=1e-10):
        return self.relative_defect <= rtol


def comparison_check(u1, u2, cone=None):
    """J(min) + J(max) against J(u1) + J(u2) for two admissible fields.

    The potential part matches node by node. The edge part matches on every
    edge where u1 - u2 keeps one sign; elsewhere the discrete sum can only
    drop, so the defect is never positive.
    """
    if not u1.same_grid(u2):
        raise DomainError("comparison needs fields on the same grid")
    dm = u1.kind == DIRICHLET
    if not np.array_equal(u1.values[dm], u2.values[dm]):
        raise DomainError("comparison needs identical Dirichlet data")
    disc = discretize(u1, cone)
    lo = u1.copy(np.fmin(u1.values, u2.values))
    hi = u1.copy(np.fmax(u1.values, u2.values))
    return ComparisonReport(
        assemble_energy(lo, disc=disc), assemble_energy(hi, disc=disc),
        assemble_energy(u1, disc=disc), assemble_energy(u2, disc=disc),
    )


@dataclass(frozen=True)
class BarrierReport:
    lambda_star: float
    lower_violation: float  # max(B^- - u, 0) over the checked nodes
    upper_violation: float  # max(u - B^+, 0)
    checked: int
    epsilon: float

    @property
    def violation(self):
        return max(self.lower_violation, self.upper_violation)

    def passed(self, tol=1e-2):
        return self.violation < tol

    def to_dict(self):
        d = asdict(self)
        d["violation"] = self.violation
        return _jsonable(d)


def _saturated_profile(chart, points, profiles):
    """H of the signed distance to the chart's leaf.

    The closest-point distance is used beyond the smoothness band too, since
    it stays well defined there; only points without a perpendicular foot
    fall back to the sign of t.
    """
    pr = chart.project(points, check_ambiguity=False)
    foot = chart.point(pr.l)
    tg = chart.tangent(pr.l)
    tangential = np.abs(np.einsum("ij,ij->i", points - foot, tg))
    has_foot = tangential <= 1e-8 * (1.0 + np.abs(pr.t))
    return np.where(has_foot, profiles.H(pr.t), np.sign(pr.t))


def barrier_check(u, cone, lambda_star, profiles, epsilon=EPSILON_CUTOFF, points=None):
    """Compare ``u`` with H of the signed distance to the leaves of scale lambda_star.

    The field increases toward +s, so the leaf on the + side carries the lower
    barrier and the leaf on the - side the upper one. Nodes in the axis sectors
    (angle within atan(epsilon) of an axis) are not checked.
    """
    from .leaf import solve_leaf  # local import keeps module start-up light

    R, S = u.coords()
    mask = u.free.copy()
    theta = np.arctan2(S, R)
    edge = np.arctan(epsilon)
    mask &= (theta > edge) & (theta < 0.5 * np.pi - edge)
    if points is not None:
        mask &= points
    P = np.column_stack([R[mask], S[mask]])
    vals = u.values[mask]
    r_max = float(max(R[mask].max(), S[mask].max() / cone.slope)) + 5.0
    plus = FermiChart.from_leaf(solve_leaf(cone, "+", lambda_star, r_max))
    minus = FermiChart.from_leaf(solve_leaf(cone, "-", lambda_star, r_max))
    lower = _saturated_profile(plus, P, profiles)
    upper = _saturated_profile(minus, P, profiles)
    lv = float(np.max(np.maximum(lower - vals, 0.0), initial=0.0))
    uv = float(np.max(np.maximum(vals - upper, 0.0), initial=0.0))
    return BarrierReport(float(lambda_star), lv, uv, int(mask.sum()), float(epsilon))


def perturbation_check(u, cone=None, count=20, amplitude=0.1, radius=None, seed=0):
    """Energy change of ``count`` random bump perturbations of a minimizer.

    Returns the list of (change, roundoff bound) pairs; a minimizer must not
    show a change below minus the bound.
    """
    rng = np.random.default_rng(seed)
    disc = discretize(u, cone)
    prob = _Problem(disc, u.values[u.active])
    uf = prob.u[prob.F]
    R, S = u.coords()
    act = u.active
    rf = R[act][disc.free]
    sf = S[act][disc.free]
    radius = radius or 10.0 * u.delta
    out = []
    for _ in range(count):
        k = rng.integers(len(uf))
        dist2 = ((rf - rf[k]) ** 2 + (sf - sf[k]) ** 2) / radius**2
        bump = np.where(dist2 < 1.0, (1.0 - dist2) ** 2, 0.0)
        sign = rng.choice((-1.0, 1.0))
        out.append(prob.energy_change(uf, sign * amplitude * bump))
    return out


@dataclass
class ContinuationReport:
    d_list: list
    sup_differences: list
    failures: dict
    reports: dict

    @property
    def decreasing(self):
        diffs = self.sup_differences
        return bool(len(diffs) >= 1 and all(b < a for a, b in zip(diffs, diffs[1:])))

    def to_dict(self):
        return _jsonable({
            "d_list": self.d_list,
            "sup_differences": self.sup_differences,
            "decreasing": self.decreasing,
            "failures": self.failures,
            "reports": {str(k): v.to_dict() for k, v in self.reports.items()},
        })


def restrict(field, region):
    """Values of ``field`` on the free nodes of the smaller field ``region``."""
    nr, ns = region.shape
    if not (field.shape[0] >= nr and field.shape[1] >= ns
            and np.isclose(field.delta, region.delta)):
        raise DomainError("restriction needs a larger field on the same lattice")
    return field.values[:nr, :ns][region.free]


def continuation_sequence(cone, leaf, d_list, delta, profiles, config=None, xi=None,
                          epsilon=EPSILON_CUTOFF):
    """Solve on each Omega_d and compare consecutive solutions on Omega_{d_min}."""
    d_list = [float(d) for d in d_list]
    if any(b <= a for a, b in zip(d_list, d_list[1:])):
        raise DomainError("d_list must be strictly increasing")
    fields, reports, failures = {}, {}, {}
    for d in d_list:
        try:
            field, _ = prepare_field(cone, leaf, d, delta, profiles, xi, epsilon)
            rep, sol = minimize(field, cone, config)
        except (NonconvergenceError, GeometryError) as exc:
            failures[d] = str(exc)
            continue
        fields[d] = sol
        reports[d] = rep
    diffs = []
    if fields and d_list[0] in fields:
        base = fields[d_list[0]]
        for a, b in zip(d_list, d_list[1:]):
            if a in fields and b in fields:
                diffs.append(float(np.max(np.abs(restrict(fields[a], base)
                                                  - restrict(fields[b], base)))))
    return fields, ContinuationReport(d_list, diffs, failures, reports)
