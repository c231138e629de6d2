import math

import numpy as np
import pytest

from diracspec import (
    CanonicalPotential,
    Grid,
    ShapeError,
    SingularityError,
    SurgeryPlan,
    SurgeryStep,
    WindowContext,
    add_eigenvalue,
    compose_surgery,
    scale_norming,
    window_eigenfunction,
    window_spectrum,
)
from diracspec.errors import DomainError
from diracspec.surgery import (
    add_eigenvalue_detail,
    compose_surgery_detail,
    remove_eigenvalue_detail,
    scale_norming_detail,
    truncate,
    window_solution,
)


@pytest.fixture(scope="module")
def confining():
    return CanonicalPotential.linear(1.0, 12.0)


@pytest.fixture(scope="module")
def ctx12():
    return WindowContext(12.0)


@pytest.fixture(scope="module")
def ground(confining, ctx12):
    t = window_spectrum(confining, 0.0, ctx12, -1.5, 2.0)
    lam = t[0].lam
    return t, lam, window_eigenfunction(confining, 0.0, lam, ctx12)


def test_window_solution_free():
    ctx = WindowContext(10.0)
    h = window_solution(CanonicalPotential.zero(10.0), 0.0, 1.0, 1.0, ctx)
    x = ctx.grid.nodes
    assert np.max(np.abs(h.y1 - np.sin(x))) < 1e-12
    assert np.max(np.abs(h.norm_accum - x)) < 1e-11
    h2 = window_solution(CanonicalPotential.zero(10.0), 0.0, 1.0, 2.0, ctx)
    assert np.allclose(h2.norm_accum, 4 * h.norm_accum, rtol=1e-14)
    h0 = window_solution(CanonicalPotential.zero(10.0), math.pi / 2, 0.0, 1.0, ctx)
    assert np.allclose(h0.y1, 1.0) and np.allclose(h0.norm_accum, x, atol=1e-11)
    with pytest.raises(DomainError):
        window_solution(CanonicalPotential.zero(10.0), 0.0, 1.0, 0.0, ctx)


def test_add_closed_form():
    ctx = WindowContext(40.0)
    s = add_eigenvalue_detail(CanonicalPotential.zero(40.0), 0.0, 1.0, 1.0, ctx)
    x = ctx.grid.nodes
    p, q = s.potential.on_grid(ctx.grid)
    assert np.max(np.abs(p + np.sin(2 * x) / (1 + x))) <= 1e-9
    assert np.max(np.abs(q - np.cos(2 * x) / (1 + x))) <= 1e-9
    assert s.w.norm_sq == pytest.approx(1 - 1 / 41, abs=1e-6)
    assert s.residual() <= 1e-6


def test_add_small_c_is_small_perturbation():
    ctx = WindowContext(5.0)
    pot = CanonicalPotential.zero(5.0)
    d = [np.max(np.abs(add_eigenvalue(pot, 0.0, 1.0, c, ctx).on_grid(ctx.grid)[1])) for c in (1e-2, 1e-3)]
    assert d[0] / d[1] == pytest.approx(100, rel=1e-3)


def test_add_creates_level(confining, ctx12, ground):
    before, _, _ = ground
    out = add_eigenvalue(confining, 0.0, 0.7, 1.0, ctx12)
    after = window_spectrum(out, 0.0, ctx12, -1.5, 2.0)
    lams = after.eigenvalues()
    assert np.min(np.abs(lams - 0.7)) < 1e-8
    for lam in before.eigenvalues():
        assert np.min(np.abs(lams - lam)) < 1e-8
    new = after.nearest(0.7)
    assert new.a == pytest.approx(1.0, abs=1e-6)  # c = 1


def test_scale_norming(confining, ctx12, ground):
    before, lam, h = ground
    s = scale_norming_detail(confining, 0.0, lam, 0.5, h, ctx12)
    after = window_spectrum(s.potential, 0.0, ctx12, -1.5, 2.0)
    for n in before.indices:
        assert abs(after[n].lam - before[n].lam) <= 1e-4
    assert after[0].a / before[0].a == pytest.approx(math.exp(0.5), abs=1e-3)
    assert after[1].a / before[1].a == pytest.approx(1.0, abs=1e-6)
    assert s.residual() <= 1e-6
    a, b = s.norm_identity()
    assert a == pytest.approx(b, abs=1e-6)


def test_scale_zero_t_identity(confining, ctx12, ground):
    _, lam, h = ground
    out = scale_norming(confining, 0.0, lam, 0.0, h, ctx12)
    assert np.array_equal(np.array(out.on_grid(ctx12.grid)), np.array(confining.on_grid(ctx12.grid)))


def test_scale_theta_matches_deformation_theta(confining, ctx12, ground):
    _, lam, h = ground
    s = scale_norming_detail(confining, 0.0, lam, 0.5, h, ctx12)
    assert np.array_equal(s.theta.values, 1 + math.expm1(-0.5) * h.norm_accum)


def test_remove_fully_normalized_is_singular(confining, ctx12, ground):
    _, lam, h = ground
    with pytest.raises(SingularityError) as info:
        remove_eigenvalue_detail(confining, 0.0, lam, h, ctx12)
    assert 0 < info.value.x <= 12.0 and info.value.value < ctx12.theta_floor


def test_remove_on_partial_mass(confining, ctx12, ground):
    _, lam, h = ground
    i = int(np.searchsorted(h.norm_accum, 0.9))
    sub = ctx12.sub_window(float(ctx12.grid.nodes[i]))
    hs = truncate(h, sub.grid)
    s = remove_eigenvalue_detail(confining, 0.0, lam, hs, sub)
    assert s.theta.values[-1] == pytest.approx(1 - hs.norm_sq, abs=1e-15)
    assert s.theta.values[-1] == pytest.approx(0.1, abs=2e-3)
    assert s.residual(sub.theta_floor) <= 1e-6
    a, b = s.norm_identity()
    assert a == pytest.approx(b, rel=1e-8)


def test_add_remove_round_trip(confining, ctx12):
    mu = 0.7
    added = add_eigenvalue_detail(confining, 0.0, mu, 1.0, ctx12)
    w = added.w  # the new level's eigenfunction, unit norm on the half-line
    i = int(np.searchsorted(w.norm_accum, 0.999))
    sub = ctx12.sub_window(float(ctx12.grid.nodes[i]))
    back = remove_eigenvalue_detail(added.potential, 0.0, mu, truncate(w, sub.grid), sub)
    assert back.residual(sub.theta_floor) <= 1e-6
    orig = window_spectrum(confining, 0.0, sub, -1.5, 2.0).eigenvalues()
    redo = window_spectrum(back.potential, 0.0, sub, -1.5, 2.0).eigenvalues()
    assert orig.shape == redo.shape
    assert np.max(np.abs(orig - redo)) <= 2e-3


def test_plans(confining, ctx12):
    single = compose_surgery(confining, 0.0, SurgeryPlan([SurgeryStep("add", 0.7)], 12.0), ctx12)[0]
    direct = add_eigenvalue(confining, 0.0, 0.7, 1.0, ctx12)
    assert np.array_equal(np.array(single.on_grid(ctx12.grid)), np.array(direct.on_grid(ctx12.grid)))
    final, inter = compose_surgery(confining, 0.0, SurgeryPlan([], 12.0), ctx12)
    assert final is confining and inter == []


def test_plan_add_then_scale(confining, ctx12):
    plan = SurgeryPlan([SurgeryStep("add", 0.7, c=1.0), SurgeryStep("scale", 0.7, t=1.0)], 12.0)
    chain = compose_surgery_detail(confining, 0.0, plan, ctx12)
    t1 = window_spectrum(chain.intermediates[0], 0.0, ctx12, 0.5, 0.9)
    t2 = window_spectrum(chain.final, 0.0, ctx12, 0.5, 0.9)
    a1, a2 = t1.nearest(0.7), t2.nearest(0.7)
    assert abs(a1.lam - 0.7) <= 2e-2 and abs(a2.lam - 0.7) <= 2e-2
    assert a2.a / a1.a == pytest.approx(math.e, rel=1e-2)


def test_plan_failure_names_step(confining, ctx12):
    plan = SurgeryPlan([SurgeryStep("add", 0.7), SurgeryStep("remove", 0.7)], 12.0)
    with pytest.raises(SingularityError) as info:
        compose_surgery_detail(confining, 0.0, plan, ctx12)
    assert info.value.step == 2 and "step 2" in str(info.value)


def test_grid_mismatch(confining, ctx12, ground):
    _, lam, h = ground
    with pytest.raises(ShapeError):
        remove_eigenvalue_detail(confining, 0.0, lam, h, WindowContext(12.0, grid=Grid(12.0, 1001)))
