import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lawson_ac.cone import make_cone
from lawson_ac.errors import FermiValidityError
from lawson_ac.fermi import (
    BAND_CAP,
    FermiChart,
    angular_cutoff,
    boundary_trace,
    smoothstep,
    trace_formula,
)
from lawson_ac.leaf import solve_leaf
from lawson_ac.profile1d import build_profiles

SIMONS = make_cone(4, 4)


@pytest.fixture(scope="module")
def profiles():
    return build_profiles()


@pytest.fixture(scope="module")
def diagonal():
    return FermiChart.straight((1.0, 1.0), 20.0)


@pytest.fixture(scope="module")
def chart():
    return FermiChart.from_leaf(solve_leaf(SIMONS, "+", 1.0, 30.0))


def test_straight_chart_examples(diagonal):
    P = diagonal.from_fermi(2 * math.sqrt(2), math.sqrt(2))
    assert np.allclose(P, [1.0, 3.0], atol=1e-12)
    l, t = diagonal.to_fermi(np.array([1.0, 3.0]))
    assert l == pytest.approx(2 * math.sqrt(2), abs=1e-10)
    assert t == pytest.approx(math.sqrt(2), abs=1e-10)
    assert np.allclose(diagonal.from_fermi(5.0, 0.0), diagonal.point(5.0))


def test_normal_is_unit_and_points_to_increasing_s(chart):
    l = np.linspace(0, chart.length, 500)
    nu = chart.normal(l)
    assert np.max(np.abs(np.linalg.norm(nu, axis=1) - 1)) < 1e-12
    assert np.all(nu[:, 1] > 0)


def test_leaf_samples_have_zero_distance(chart):
    pts = np.column_stack([chart.r, chart.s])[10:-10:37]
    pr = chart.project(pts)
    assert np.max(np.abs(pr.t)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 35.0), st.floats(-0.9, 0.9))
def test_round_trip(l0, frac):
    chart = _chart_cache()
    t0 = frac * chart.band(l0)
    P = chart.from_fermi(l0, t0)
    l, t = chart.to_fermi(P)
    assert l == pytest.approx(l0, abs=1e-8)
    assert t == pytest.approx(t0, abs=1e-8)
    assert np.allclose(chart.from_fermi(l, t), P, atol=1e-8)


_CACHE = {}


def _chart_cache():
    if "c" not in _CACHE:
        _CACHE["c"] = FermiChart.from_leaf(solve_leaf(SIMONS, "+", 1.0, 30.0))
    return _CACHE["c"]


def test_half_unit_offset(chart):
    l0 = 12.0
    P = chart.point(l0) + 0.5 * chart.normal(l0)
    l, t = chart.to_fermi(P)
    assert l == pytest.approx(l0, abs=1e-8) and t == pytest.approx(0.5, abs=1e-8)


def test_orientation(chart):
    l0 = 8.0
    for eps in (1e-3, 0.1):
        _, tp = chart.to_fermi(chart.point(l0) + eps * chart.normal(l0))
        _, tm = chart.to_fermi(chart.point(l0) - eps * chart.normal(l0))
        assert tp > 0 > tm


def test_signed_distance_matches_brute_force(chart):
    rng = np.random.default_rng(3)
    l0 = rng.uniform(2, 35, 50)
    t0 = rng.uniform(-1, 1, 50) * chart.band(l0)
    P = chart.from_fermi(l0, t0)
    pr = chart.project(P)
    dense = chart.point(np.linspace(0, chart.length, 400001))
    brute = np.array([np.min(np.hypot(*(dense - p).T)) for p in P])
    assert np.max(np.abs(np.abs(pr.t) - brute)) < 1e-6


def test_band_is_capped_and_positive(chart):
    assert np.all(chart.band_samples > 0)
    assert np.all(chart.band_samples <= BAND_CAP)


def test_outside_band_raises(chart):
    l0 = 1.0
    with pytest.raises(FermiValidityError):
        chart.from_fermi(l0, 2 * chart.band(l0) + 1)
    with pytest.raises(FermiValidityError):
        chart.from_fermi(-1.0, 0.0)
    far = chart.point(1.0) + (chart.band(1.0) + 1) * chart.normal(1.0)
    with pytest.raises(FermiValidityError):
        chart.to_fermi(far)


def test_ambiguous_projection_is_rejected():
    # a circle: its center is equidistant from every foot point
    th = np.linspace(0, np.pi, 2001)
    R = 5.0
    ch = FermiChart.from_samples(R * th, R * np.cos(th), R * np.sin(th),
                                 np.full_like(th, 1 / R), np.zeros_like(th))
    pr = ch.project(np.array([[0.0, 0.0]]))
    assert not pr.valid[0]


def test_smoothstep_and_cutoff():
    assert smoothstep(0.0) == 0.0 and smoothstep(1.0) == 1.0
    assert smoothstep(0.5) == pytest.approx(0.5)
    assert angular_cutoff(1.0, 1.0) == 1.0
    assert angular_cutoff(1.0, 0.0) == 0.0
    assert angular_cutoff(0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert angular_cutoff(1.0, 0.2) == 1.0


def test_trace_examples(profiles, chart):
    a2 = 0.3
    assert trace_formula(0.0, 10.0, a2, 1.0, profiles) == 0.0
    sat = trace_formula(8.0, 10.0, a2, 1.0, profiles)
    assert sat == pytest.approx(np.tanh(8 / np.sqrt(2)) + profiles.eta(8.0) * a2, abs=1e-15)
    # 1 - tanh(8 / sqrt 2) = 2.45e-5 and eta(8) A_2 adds 6.6e-6 at l = 20
    assert 0 < 1.0 - trace_formula(8.0, 20.0, 6 / 400, 1.0, profiles) < 3.2e-5
    t = np.linspace(-6, 6, 121)
    odd = trace_formula(t, 10.0, a2, 1.0, profiles) + trace_formula(-t, 10.0, a2, 1.0, profiles)
    assert np.max(np.abs(odd)) < 1e-12
    v = trace_formula(100.0, 1.0, 50.0, 1.0, profiles)
    assert abs(v) < 1


def test_trace_with_shift(profiles):
    class Shift:
        def __call__(self, l):
            return 0.25
    assert trace_formula(0.25, 10.0, 0.1, 1.0, profiles, Shift()) == pytest.approx(0.0, abs=1e-15)


def test_boundary_trace_constant_continuation(profiles, chart):
    l0 = 20.0
    foot = chart.point(l0)
    nu = chart.normal(l0)
    t = np.linspace(-15, 15, 301)
    pts = foot + t[:, None] * nu
    pts = pts[(pts[:, 0] >= 0) & (pts[:, 1] >= 0)]
    vals = boundary_trace(chart, SIMONS, profiles, None, pts)
    assert np.all(np.abs(vals) < 1)
    assert np.all(np.diff(vals) >= -1e-12)
