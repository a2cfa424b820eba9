"""Least-squares fits of decaying power laws."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FitError

MAX_CONDITION = 1e8
DRIFT_LIMIT = 0.25


@dataclass(frozen=True)
class AsymptoticFit:
    exponents: tuple
    coefficients: tuple
    residual_rms: float
    window: tuple
    condition_number: float
    drift: float = float("nan")
    loglog_slope: float = float("nan")
    numerically_zero: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def leading(self):
        return self.coefficients[0]

    @property
    def stable(self):
        return bool(np.isfinite(self.drift) and self.drift < DRIFT_LIMIT)

    def to_dict(self):
        d = asdict(self)
        d["exponents"] = [float(e) for e in self.exponents]
        d["coefficients"] = [float(c) for c in self.coefficients]
        d["window"] = [float(w) for w in self.window]
        d["stable"] = self.stable
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _solve(x, y, exponents, weight_exponent):
    A = x[:, None] ** np.asarray(exponents, dtype=float)[None, :]
    w = x**weight_exponent if weight_exponent is not None else np.ones_like(x)
    Aw = A * w[:, None]
    scale = np.linalg.norm(Aw, axis=0)
    if np.any(scale == 0):
        raise FitError("degenerate fit design (zero column)")
    An = Aw / scale
    cond = float(np.linalg.cond(An))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise FitError(
            f"fit design condition number {cond:.3g} exceeds {MAX_CONDITION:g}; "
            "widen the fit window"
        )
    cn, *_ = np.linalg.lstsq(An, y * w, rcond=None)
    coef = cn / scale
    return coef, A, cond


def fit_powers(x, y, exponents, window=None, weight_exponent=None, drift=True):
    """Fit y ~ sum_k c_k x^(p_k) on ``window`` (default: whole range).

    Rows are weighted by x^weight_exponent. The drift is the relative change of
    the leading coefficient between the lower and upper geometric halves
    of the window.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(x.min()), float(x.max()))
    lo, hi = map(float, window)
    if lo <= 0 or hi <= lo:
        raise FitError(f"invalid fit window {window}")
    mask = (x >= lo) & (x <= hi) & np.isfinite(y)
    if mask.sum() < 2 * len(exponents) + 2:
        raise FitError(f"too few samples ({mask.sum()}) in window {window}")
    xs, ys = x[mask], y[mask]
    coef, A, cond = _solve(xs, ys, exponents, weight_exponent)
    resid = ys - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))

    dr = float("nan")
    if drift:
        mid = np.sqrt(lo * hi)
        halves = []
        for a, b in ((lo, mid), (mid, hi)):
            mk = (xs >= a) & (xs <= b)
            if mk.sum() < 2 * len(exponents) + 2:
                break
            try:
                c, _, _ = _solve(xs[mk], ys[mk], exponents, weight_exponent)
            except FitError:
                break
            halves.append(c[0])
        if len(halves) == 2:
            denom = max(abs(halves[0]), abs(halves[1]), 1e-300)
            dr = abs(halves[0] - halves[1]) / denom

    ny = ys != 0
    slope = float("nan")
    if ny.sum() >= 2 and (np.all(ys[ny] > 0) or np.all(ys[ny] < 0)):
        slope = float(np.polyfit(np.log(xs[ny]), np.log(np.abs(ys[ny])), 1)[0])

    return AsymptoticFit(
        exponents=tuple(float(p) for p in exponents),
        coefficients=tuple(float(c) for c in coef),
        residual_rms=rms,
        window=(lo, hi),
        condition_number=cond,
        drift=dr,
        loglog_slope=slope,
    )
