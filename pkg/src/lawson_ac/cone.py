"""Lawson cones C_{i,j}, their curvature data and the radial Jacobi operator.

In the reduced quarter plane (r, s) = (|x|, |y|), x in R^i, y in R^j, the
cone is the ray s = m r with m = sqrt((j-1)/(i-1)). The unit normal points
toward increasing s. With that orientation the principal curvatures at
distance l from the origin are 0 (once), m/l (i-1 times) and -1/(m l)
(j-1 times).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, InvalidConeError, NonconvergenceError

MINIMIZING = "minimizing"
ONE_SIDED = "one_sided_minimizer"
UNSTABLE = "unstable"

BVP_RESIDUAL_TOL = 1e-7


@dataclass(frozen=True)
class ConeSpec:
    i: int
    j: int
    n: int
    slope: float
    alpha_plus: float | None
    alpha_minus: float | None
    minimizing_class: str
    swapped: bool = False

    @property
    def m(self):
        return self.slope

    @property
    def is_simons(self):
        return self.i == self.j == 4

    def weight(self, r, s):
        """Volume density r^(i-1) s^(j-1) of the O(i) x O(j) reduction."""
        return np.power(r, self.i - 1) * np.power(s, self.j - 1)

    def require_stable(self):
        if self.minimizing_class == UNSTABLE:
            raise InvalidConeError(
                f"C_({self.i},{self.j}) is unstable (n={self.n} <= 7); "
                "no foliation or barriers exist"
            )


def indicial_polynomial(n, alpha):
    """alpha (alpha-1) + (n-2) alpha + (n-2): J(l^alpha) = poly * l^(alpha-2)."""
    return alpha * (alpha - 1.0) + (n - 2) * alpha + (n - 2)


def _roots(n):
    disc = (n - 3) ** 2 - 4 * (n - 2)
    if disc < 0:
        return None, None
    sq = math.sqrt(disc)
    return (-(n - 3) + sq) / 2.0, (-(n - 3) - sq) / 2.0


def _classify(i, j):
    n = i + j
    if n <= 7:
        return UNSTABLE
    if (i, j) == (2, 6):
        return ONE_SIDED
    return MINIMIZING


def make_cone(i, j):
    """Build C_{i,j}, canonicalized so that i <= j."""
    if int(i) != i or int(j) != j:
        raise InvalidConeError(f"dimensions must be integers, got ({i}, {j})")
    i, j = int(i), int(j)
    if i < 2 or j < 2:
        raise InvalidConeError(f"i >= 2 and j >= 2 required, got ({i}, {j})")
    swapped = i > j
    if swapped:
        i, j = j, i
    n = i + j
    ap, am = _roots(n)
    return ConeSpec(
        i=i,
        j=j,
        n=n,
        slope=math.sqrt((j - 1) / (i - 1)),
        alpha_plus=ap,
        alpha_minus=am,
        minimizing_class=_classify(i, j),
        swapped=swapped,
    )


def indicial_roots(cone):
    if cone.n <= 7 or cone.alpha_plus is None:
        raise InvalidConeError(f"n={cone.n}: indicial roots are complex")
    return cone.alpha_plus, cone.alpha_minus


def _check_positive(l):
    arr = np.asarray(l, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("distance from the origin must be positive")
    return arr


def principal_curvatures(cone, l):
    """[(value, multiplicity), ...]; values are arrays when l is an array."""
    l = _check_positive(l)
    m = cone.slope
    return [(0.0 * l, 1), (m / l, cone.i - 1), (-1.0 / (m * l), cone.j - 1)]


def curvature_power_sum(cone, p, l):
    """A_p = sum_k k^p over all n-1 principal curvatures."""
    if p < 2:
        raise DomainError(f"power must be >= 2, got {p}")
    l = _check_positive(l)
    m = cone.slope
    return (cone.i - 1) * (m / l) ** p + (cone.j - 1) * (-1.0 / (m * l)) ** p


def curvature_power_coefficient(cone, p):
    """Constant c with A_p = c * l^(-p)."""
    return float(curvature_power_sum(cone, p, 1.0))


# --------------------------------------------------------------------------
# radial functions


def _d1(x, y):
    return np.gradient(y, x, edge_order=2)


def _d2(x, y):
    """Three-point second derivative on a (smoothly) non-uniform grid."""
    hm = np.diff(x)[:-1]
    hp = np.diff(x)[1:]
    out = np.empty_like(y)
    out[1:-1] = 2.0 * (
        (y[2:] - y[1:-1]) / hp - (y[1:-1] - y[:-2]) / hm
    ) / (hp + hm)
    out[0] = 2 * out[1] - out[2]
    out[-1] = 2 * out[-2] - out[-3]
    return out


@dataclass(frozen=True)
class RadialFunction:
    """Samples of h(l) with first and second derivatives.

    ``terms`` optionally records an exact representation as a finite sum
    of (coefficient, exponent) powers; solve_jacobi_bvp uses it to remove
    the particular solution analytically.
    """

    grid: np.ndarray
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    terms: tuple = field(default=())

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("radial grid must be strictly increasing")

    @classmethod
    def from_values(cls, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(grid, values, _d1(grid, values), _d2(grid, values))

    @classmethod
    def power_sum(cls, grid, terms):
        grid = np.asarray(grid, dtype=float)
        terms = tuple((float(c), float(p)) for c, p in terms)
        v = np.zeros_like(grid)
        d1 = np.zeros_like(grid)
        d2 = np.zeros_like(grid)
        for c, p in terms:
            v += c * grid**p
            d1 += c * p * grid ** (p - 1)
            d2 += c * p * (p - 1) * grid ** (p - 2)
        return cls(grid, v, d1, d2, terms)

    def __call__(self, l):
        return np.interp(l, self.grid, self.values)

    def __add__(self, other):
        if not np.array_equal(self.grid, other.grid):
            raise DomainError("cannot add radial functions on different grids")
        terms = self.terms + other.terms if (self.terms and other.terms) else ()
        return RadialFunction(
            self.grid,
            self.values + other.values,
            self.d1 + other.d1,
            self.d2 + other.d2,
            terms,
        )

    def scaled(self, factor):
        return RadialFunction(
            self.grid,
            factor * self.values,
            factor * self.d1,
            factor * self.d2,
            tuple((factor * c, p) for c, p in self.terms),
        )


def geometric_grid(l0, L, num=2001):
    return np.geomspace(l0, L, num)


def jacobi_radial(cone, h):
    """J(h) = h'' + (n-2)/l h' + (n-2)/l^2 h, evaluated pointwise."""
    l = h.grid
    if l[0] <= 0:
        raise DomainError("Jacobi operator is singular at l = 0")
    k = cone.n - 2
    vals = h.d2 + k / l * h.d1 + k / l**2 * h.values
    return RadialFunction.from_values(l, vals)


def particular_power_solution(cone, terms, grid):
    """Exact solution of J(h) = sum c l^p, one power (or power*log) per term."""
    n = cone.n
    v = np.zeros_like(grid)
    for c, p in terms:
        alpha = p + 2.0
        q = indicial_polynomial(n, alpha)
        if abs(q) > 1e-12:
            v += c / q * grid**alpha
        else:
            # resonance: J(l^a log l) = q'(a) l^(a-2) when q(a) = 0
            dq = 2.0 * alpha + n - 3
            v += c / dq * grid**alpha * np.log(grid)
    return v


def _jacobi_matrix(cone, l):
    """Banded matrix of J on interior nodes (rows 1..N-2) of a nonuniform grid."""
    k = cone.n - 2
    hm = l[1:-1] - l[:-2]
    hp = l[2:] - l[1:-1]
    li = l[1:-1]
    den = hm * hp * (hm + hp)
    lower = (2.0 * hp - k / li * hp**2) / den
    upper = (2.0 * hm + k / li * hm**2) / den
    diag = (-2.0 * (hp + hm) + k / li * (hp**2 - hm**2)) / den + k / li**2
    return lower, diag, upper


def solve_jacobi_bvp(cone, rhs, inner_value, domain=None):
    """Solve J(h) = rhs on [l0, L] with h(l0) = inner_value.

    Outer condition: h(L) equals the particular power solution when ``rhs``
    carries exact power terms, otherwise 0. The particular solution is
    subtracted analytically and only the remainder is discretized.
    """
    if domain is not None:
        l0, L = map(float, domain)
        if l0 <= 0:
            raise DomainError(f"inner radius must be positive, got {l0}")
        if not (np.isclose(rhs.grid[0], l0) and np.isclose(rhs.grid[-1], L)):
            grid = geometric_grid(l0, L, len(rhs.grid))
            if rhs.terms:
                rhs = RadialFunction.power_sum(grid, rhs.terms)
            else:
                rhs = RadialFunction.from_values(grid, rhs(grid))
    l = rhs.grid
    if l[0] <= 0:
        raise DomainError(f"inner radius must be positive, got {l[0]}")
    if l[-1] / l[0] < 10:
        raise DomainError(f"need L/l0 >= 10, got {l[-1] / l[0]:.3g}")

    if rhs.terms:
        hp_vals = particular_power_solution(cone, rhs.terms, l)
        remainder_rhs = np.zeros_like(l)
    else:
        hp_vals = np.zeros_like(l)
        remainder_rhs = rhs.values.copy()

    g0 = inner_value - hp_vals[0]
    gL = 0.0
    lower, diag, upper = _jacobi_matrix(cone, l)
    b = remainder_rhs[1:-1].copy()
    b[0] -= lower[0] * g0
    b[-1] -= upper[-1] * gL
    N = len(diag)
    ab = np.zeros((3, N))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        g_int = solve_banded((1, 1), ab, b)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonconvergenceError(f"Jacobi BVP solve failed: {exc}") from exc
    g = np.concatenate([[g0], g_int, [gL]])

    applied = lower * g[:-2] + diag * g[1:-1] + upper * g[2:]
    scale = np.abs(lower * g[:-2]) + np.abs(diag * g[1:-1]) + np.abs(upper * g[2:])
    scale = np.maximum(scale + np.abs(remainder_rhs[1:-1]), 1e-300)
    residual = float(np.max(np.abs(applied - remainder_rhs[1:-1]) / scale))
    if not np.isfinite(residual) or residual > BVP_RESIDUAL_TOL:
        raise NonconvergenceError(
            f"Jacobi BVP residual {residual:.3e} above tolerance", residual=residual
        )
    return RadialFunction.from_values(l, hp_vals + g)


def xi_shift(cone, c_star, l0=1.0, L=1e4, num=4001):
    """Leading nodal displacement xi(l) solving J(xi) = -c_star A_3.

    Sign: with the normal toward increasing s, projecting the Allen-Cahn
    error onto H' gives J(h) + c_star A_3 = 0. For the Simons cone A_3 = 0
    and xi vanishes.
    """
    a3 = curvature_power_coefficient(cone, 3)
    grid = geometric_grid(l0, L, num)
    rhs = RadialFunction.power_sum(grid, [(-c_star * a3, -3.0)])
    inner = float(particular_power_solution(cone, rhs.terms, grid[:1])[0])
    return solve_jacobi_bvp(cone, rhs, inner)


def write_cone_table(cones, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "n", "slope", "alpha_plus", "alpha_minus", "class"])
        for c in cones:
            writer.writerow([
                c.i, c.j, c.n, repr(c.slope),
                "" if c.alpha_plus is None else repr(c.alpha_plus),
                "" if c.alpha_minus is None else repr(c.alpha_minus),
                c.minimizing_class,
            ])
