"""One-dimensional heteroclinic profile and its linearized correctors.

H(t) = tanh(t / sqrt(2)) is the 1D transition layer of -u'' = u - u^3.
The correctors solve

    -eta''  + (3 H^2 - 1) eta  = -t H'                (odd)
    -eta2'' + (3 H^2 - 1) eta2 = t^2 H' - c_star H'   (even)

with zero Dirichlet data at +-T and the side condition  int eta H' dt = 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, NonconvergenceError

SQRT2 = np.sqrt(2.0)
SIGMA0_EXACT = 2.0 * SQRT2 / 3.0

RESIDUAL_TOL = 1e-7
ORTHOGONALITY_TOL = 1e-8


def heteroclinic(t, deriv=0):
    """H(t) = tanh(t/sqrt 2) or one of its first two derivatives."""
    h = np.tanh(np.asarray(t, dtype=float) / SQRT2)
    if deriv == 0:
        return h
    if deriv == 1:
        return (1.0 - h * h) / SQRT2
    if deriv == 2:
        return h**3 - h
    raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")


def symmetric_grid(half_width, step):
    """Uniform grid on [-T, T] that is bitwise symmetric about 0.

    The step is shrunk slightly if needed so that T is a whole number of steps.
    """
    n_half = int(np.ceil(half_width / step - 1e-9))
    h = half_width / n_half
    pos = np.arange(1, n_half + 1) * h
    return np.concatenate([-pos[::-1], [0.0], pos])


@dataclass(frozen=True)
class Profile1D:
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    kind: str
    residual: float = 0.0
    orthogonality: float = 0.0

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def half_width(self):
        return float(self.grid[-1])

    def __call__(self, t):
        """Linear interpolation; correctors are taken as 0 outside the grid."""
        t = np.asarray(t, dtype=float)
        if self.kind == "H":
            return heteroclinic(t)
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def parity_defect(self):
        """max |v(t) -+ v(-t)| for the parity the kind should have."""
        v = self.values
        if self.kind == "eta2":
            return float(np.max(np.abs(v - v[::-1])))
        return float(np.max(np.abs(v + v[::-1])))

    def tail_decay_rate(self):
        """Slope of log|value| against |t| over T/2 < |t| < T - 1.

        The outer unit is left out because the Dirichlet condition at +-T
        pins the profile to zero there.
        """
        T = self.half_width
        t = self.grid
        mask = (np.abs(t) > T / 2) & (np.abs(t) < T - 1.0) & (self.values != 0)
        slope, _ = np.polyfit(np.abs(t[mask]), np.log(np.abs(self.values[mask])), 1)
        return float(slope)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value", "derivative"])
            for row in zip(self.grid, self.values, self.derivative):
                writer.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True)
class Moments:
    sigma0: float
    c_star: float


def heteroclinic_profile(half_width=12.0, step=0.01):
    t = symmetric_grid(half_width, step)
    return Profile1D(t, heteroclinic(t), heteroclinic(t, 1), "H")


def moments(step=0.005, half_width=12.0):
    """sigma0 = int H'^2 and c_star = int t^2 H'^2 / sigma0 by trapezoid rule.

    H' decays like exp(-sqrt 2 |t|), so the trapezoid rule converges
    spectrally and the truncation at +-T costs O(exp(-2 sqrt2 T)).
    """
    if half_width < 10:
        raise DomainError(f"half_width must be >= 10, got {half_width}")
    t = symmetric_grid(half_width, step)
    hp2 = heteroclinic(t, 1) ** 2
    sigma0 = trapezoid(hp2, t)
    c_star = trapezoid(t * t * hp2, t) / sigma0
    return Moments(float(sigma0), float(c_star))


def _operator(t):
    """Tridiagonal -d^2/dt^2 + (3H^2 - 1) on interior nodes, Dirichlet ends."""
    dt = t[1] - t[0]
    h = heteroclinic(t[1:-1])
    diag = 2.0 / dt**2 + 3.0 * h * h - 1.0
    off = np.full(len(diag) - 1, -1.0 / dt**2)
    return diag, off


def solve_corrector(kind, half_width=12.0, step=0.01):
    """Solve for eta or eta2 on [-T, T] with a bordered finite-difference system.

    The continuous operator has H' in its kernel. The discrete operator
    has a near-kernel vector v (eigenvalue O(step^2)), so the solve is
    done with the constraint sum(value * H' * dt) = 0 appended as an extra
    row and column. For eta2, the constant multiplying H' on the right side
    is taken so that the right side is exactly orthogonal to v. This makes
    the discrete problem consistent. That constant differs from c_star by
    O(step^2).
    """
    if kind not in ("eta", "eta2"):
        raise ValueError(f"kind must be 'eta' or 'eta2', got {kind!r}")
    if half_width < 10:
        raise DomainError(f"half_width must be >= 10, got {half_width}")
    if step > 0.05:
        raise DomainError(f"step must be <= 0.05, got {step}")

    t = symmetric_grid(half_width, step)
    dt = t[1] - t[0]
    ti = t[1:-1]
    hp = heteroclinic(ti, 1)
    diag, off = _operator(t)
    L = sp.diags([off, diag, off], [-1, 0, 1], format="csc")

    if kind == "eta":
        rhs = -ti * hp
    else:
        _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
        v = vec[:, 0]
        c_discrete = (v @ (ti * ti * hp)) / (v @ hp)
        rhs = ti * ti * hp - c_discrete * hp

    w = hp * dt
    bordered = sp.bmat([[L, w[:, None]], [w[None, :], None]], format="csc")
    try:
        sol = spla.spsolve(bordered, np.append(rhs, 0.0))
    except RuntimeError as exc:  # singular factorization
        raise NonconvergenceError(f"corrector {kind}: linear solve failed ({exc})") from exc
    if not np.all(np.isfinite(sol)):
        raise NonconvergenceError(f"corrector {kind}: singular discretization")

    interior = sol[:-1]
    # the grid is mirror-exact and both problems preserve parity
    parity = -1.0 if kind == "eta" else 1.0
    interior = 0.5 * (interior + parity * interior[::-1])
    residual = float(np.max(np.abs(L @ interior - rhs)))
    values = np.concatenate([[0.0], interior, [0.0]])
    orth = float(trapezoid(values * heteroclinic(t, 1), t))
    if residual >= RESIDUAL_TOL or abs(orth) >= ORTHOGONALITY_TOL:
        raise NonconvergenceError(
            f"corrector {kind}: residual {residual:.3e}, orthogonality {orth:.3e}",
            residual=residual,
        )
    deriv = np.gradient(values, dt, edge_order=2)
    return Profile1D(t, values, deriv, kind, residual=residual, orthogonality=orth)


def discrete_residual(profile):
    """Sup of the centered-difference residual of the profile's ODE on interior nodes.

    For eta2 the H' coefficient is the one removing the discrete near-kernel
    component (see solve_corrector), recomputed here.
    """
    t = profile.grid
    diag, off = _operator(t)
    L = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
    ti = t[1:-1]
    hp = heteroclinic(ti, 1)
    if profile.kind == "eta":
        rhs = -ti * hp
    elif profile.kind == "eta2":
        _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
        v = vec[:, 0]
        rhs = ti * ti * hp - (v @ (ti * ti * hp)) / (v @ hp) * hp
    else:
        raise ValueError("residual is defined for correctors only")
    return float(np.max(np.abs(L @ profile.values[1:-1] - rhs)))


@dataclass(frozen=True)
class ProfileSet:
    """The three sampled profiles plus moments, as consumed downstream."""

    H: Profile1D
    eta: Profile1D
    eta2: Profile1D
    moments: Moments


def build_profiles(half_width=12.0, step=0.01):
    return ProfileSet(
        H=heteroclinic_profile(half_width, step),
        eta=solve_corrector("eta", half_width, step),
        eta2=solve_corrector("eta2", half_width, step),
        moments=moments(min(step, 0.005), half_width),
    )
