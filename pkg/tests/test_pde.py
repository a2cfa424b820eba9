import json

import numpy as np
import pytest

from lawson_ac.cone import make_cone
from lawson_ac.errors import DomainError, InvalidConeError, NonconvergenceError
from lawson_ac.leaf import cone_line, leaf_for_coefficient
from lawson_ac.pde import (
    DIRICHLET,
    EXTERIOR,
    INTERIOR,
    NEUMANN,
    DomainSpec,
    SolverConfig,
    assemble_energy,
    barrier_check,
    build_domain,
    comparison_check,
    continuation_sequence,
    minimize,
    perturbation_check,
    prepare_field,
    rectangle_field,
    residual,
)
from lawson_ac.profile1d import SIGMA0_EXACT, build_profiles, heteroclinic

SIMONS = make_cone(4, 4)


@pytest.fixture(scope="module")
def profiles():
    return build_profiles()


@pytest.fixture(scope="module")
def target():
    return leaf_for_coefficient(SIMONS, 1.0, 31.0)


@pytest.fixture(scope="module")
def prepared(target, profiles):
    return prepare_field(SIMONS, target, 20.0, 0.1, profiles)


@pytest.fixture(scope="module")
def solved(prepared):
    field, _ = prepared
    return minimize(field, SIMONS)


def test_line_for_cone_target():
    spec = DomainSpec(SIMONS, cone_line(SIMONS, 30.0), 20.0, 0.1)
    f = build_domain(spec)
    line = f.line
    assert np.allclose(line.foot, [20.0, 20.0])
    assert line.r_intercept == pytest.approx(40.0, abs=1e-9)
    assert line.s_intercept == pytest.approx(40.0, abs=1e-9)
    R, S = f.coords()
    inside = (f.kind == INTERIOR) | (f.kind == NEUMANN)
    assert np.all(R[inside] + S[inside] <= 40.0 + 1e-9)


def test_interior_nodes_have_active_neighbours(target):
    f = build_domain(DomainSpec(SIMONS, target, 20.0, 0.1))
    k = np.pad(f.kind, 1, constant_values=EXTERIOR)
    ii, jj = np.nonzero(f.kind == INTERIOR)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        assert np.all(k[ii + 1 + di, jj + 1 + dj] != EXTERIOR)
    assert np.all(f.kind[0, :][f.kind[0, :] != EXTERIOR] != INTERIOR)
    assert f.count(DIRICHLET) > 0


def test_node_count_scales_with_area(target):
    a = build_domain(DomainSpec(SIMONS, target, 20.0, 0.2)).count(INTERIOR)
    b = build_domain(DomainSpec(SIMONS, target, 20.0, 0.1)).count(INTERIOR)
    assert b / a == pytest.approx(4.0, rel=0.05)


def test_domain_preconditions(target):
    with pytest.raises(DomainError):
        DomainSpec(SIMONS, target, 20.0, 0.3)
    with pytest.raises(DomainError):
        DomainSpec(SIMONS, target, 5.0, 0.1)
    with pytest.raises(InvalidConeError):
        DomainSpec(make_cone(3, 4), target, 20.0, 0.1)


def test_energy_examples(target):
    f = build_domain(DomainSpec(SIMONS, target, 12.0, 0.2))
    act = f.active
    one = f.copy(np.where(act, 1.0, np.nan))
    assert assemble_energy(one, SIMONS) == 0.0
    zero = f.copy(np.where(act, 0.0, np.nan))
    R, S = f.coords()
    d = f.delta
    cell = act[:-1, :-1] & act[1:, :-1] & act[:-1, 1:] & act[1:, 1:]
    rc, sc = R[:-1, :-1] + d / 2, S[:-1, :-1] + d / 2
    vol = np.sum(np.where(cell, rc**3 * sc**3, 0.0)) * d * d
    assert assemble_energy(zero, SIMONS) == pytest.approx(0.25 * vol, rel=1e-12)


def test_energy_requires_values(target):
    f = build_domain(DomainSpec(SIMONS, target, 12.0, 0.2))
    with pytest.raises(DomainError):
        assemble_energy(f, SIMONS)


def test_constant_data_gives_constant_solution(target):
    f = build_domain(DomainSpec(SIMONS, target, 12.0, 0.2))
    v = np.where(f.active, 0.5, np.nan)
    v[f.kind == DIRICHLET] = 1.0
    rep, u = minimize(f.copy(v), SIMONS, SolverConfig(tol=1e-11))
    assert rep.converged
    assert np.nanmax(np.abs(u.values - 1.0)) < 1e-8
    assert assemble_energy(u, SIMONS) < 1e-10
    assert all(b <= a for a, b in zip(rep.energy_history, rep.energy_history[1:]))


def _slab(half=10.0, delta=0.1):
    x = np.arange(-round(half / delta), round(half / delta) + 1) * delta
    y = np.arange(0, 21) * delta
    X, _ = np.meshgrid(x, y, indexing="ij")
    dm = np.abs(X) >= half - 1e-9
    return X, rectangle_field(x, y, dm, np.where(dm, heteroclinic(X), np.tanh(X)))


def test_slab_reproduces_profile():
    X, f = _slab()
    rep, u = minimize(f)
    assert rep.converged
    err = np.max(np.abs(u.values - heteroclinic(X))[np.abs(X) < 5])
    assert err < 0.01
    # energy per unit cross-section
    assert assemble_energy(u) / 2.0 == pytest.approx(SIGMA0_EXACT, rel=0.01)


def test_minimize_reports(solved):
    rep, u = solved
    assert rep.converged and rep.final_residual < 1e-6
    assert all(b <= a for a, b in zip(rep.energy_history, rep.energy_history[1:]))
    assert np.nanmax(np.abs(u.values)) <= 1.0
    assert rep.max_overshoot <= 1e-6
    assert np.nanmax(np.abs(residual(u, SIMONS))) < 1e-6


def test_minimize_nonconvergence(prepared):
    field, _ = prepared
    with pytest.raises(NonconvergenceError) as info:
        minimize(field, SIMONS, SolverConfig(tol=1e-14, max_iter=2))
    assert info.value.report is not None


def test_solve_report_json(tmp_path, solved):
    rep, _ = solved
    path = tmp_path / "r.json"
    rep.to_json(path, {"d": 20.0})
    data = json.loads(path.read_text())
    assert "wall_time" not in data
    for key in ("energy_history", "final_residual", "iterations", "config"):
        assert key in data


def test_comparison_trivial_cases(prepared):
    field, _ = prepared
    rep = comparison_check(field, field, SIMONS)
    assert rep.j_min + rep.j_max == 2 * rep.j_u1
    act = field.active
    dm = field.kind == DIRICHLET
    zero = np.where(act, 0.0, np.nan)
    one = np.where(act, 1.0, np.nan)
    zero[dm] = one[dm] = field.values[dm]
    rep = comparison_check(field.copy(zero), field.copy(one), SIMONS)
    assert rep.holds(1e-12)


def test_comparison_rejects_mismatch(prepared, target):
    field, _ = prepared
    other = build_domain(DomainSpec(SIMONS, target, 12.0, 0.2))
    with pytest.raises(DomainError):
        comparison_check(field, other, SIMONS)


def test_comparison_defect_is_never_positive(prepared):
    field, _ = prepared
    rng = np.random.default_rng(1)
    v = field.values.copy()
    fr = field.free
    v[fr] = np.clip(v[fr] + rng.normal(0, 0.3, fr.sum()), -1, 1)
    rep = comparison_check(field, field.copy(v), SIMONS)
    assert rep.defect <= 1e-9 * abs(rep.j_u1)


def test_barrier_examples(prepared, profiles):
    field, _ = prepared
    assert barrier_check(field, SIMONS, 4.0, profiles).violation < 1e-3
    one = field.copy(np.where(field.active, 1.0, np.nan))
    assert barrier_check(one, SIMONS, 4.0, profiles).upper_violation > 0


def test_perturbations_do_not_lower_energy(solved):
    _, u = solved
    changes = perturbation_check(u, SIMONS, seed=7)
    assert len(changes) == 20
    assert all(c >= -n for c, n in changes)


def test_continuation_single_member(target, profiles):
    fields, rep = continuation_sequence(SIMONS, target, [12.0], 0.2, profiles)
    assert rep.sup_differences == [] and not rep.decreasing
    assert list(fields) == [12.0]


def test_continuation_rejects_unsorted(target, profiles):
    with pytest.raises(DomainError):
        continuation_sequence(SIMONS, target, [20.0, 15.0], 0.2, profiles)


def test_field_csv(tmp_path, solved):
    _, u = solved
    path = tmp_path / "u.csv"
    u.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (int(u.active.sum()), 3)
    assert np.array_equal(np.sort(data[:, 2]), np.sort(u.values[u.active]))


@pytest.mark.slow
def test_resolution_error_below_domain_error_off_axis(profiles):
    # the degenerate weight makes the axis rows O(delta); compare for r, s >= 1
    leaf = leaf_for_coefficient(SIMONS, 1.0, 45.0)
    fields, rep = continuation_sequence(SIMONS, leaf, [15.0, 20.0], 0.1, profiles)
    base = fields[15.0]
    f, _ = prepare_field(SIMONS, leaf, 15.0, 0.05, profiles)
    _, fine = minimize(f, SIMONS)
    fv = fine.values[::2, ::2]
    kf = fine.kind[::2, ::2]
    nr = min(fv.shape[0], base.shape[0])
    ns = min(fv.shape[1], base.shape[1])
    R, S = base.coords()
    m = (base.free[:nr, :ns] & ((kf[:nr, :ns] == INTERIOR) | (kf[:nr, :ns] == NEUMANN))
         & (R[:nr, :ns] >= 1.0) & (S[:nr, :ns] >= 1.0))
    change = np.max(np.abs(fv[:nr, :ns][m] - base.values[:nr, :ns][m]))
    assert change < rep.sup_differences[0]
