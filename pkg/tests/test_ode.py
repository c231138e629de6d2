import math

import numpy as np
import pytest

from diracspec import CanonicalPotential, Grid, IntegrationOverflow, characteristic, integrate_left, integrate_right
from diracspec.ode import bracket, endpoint_values


def test_free_left_solution(zero, grid):
    s = integrate_left(zero, 0.0, 1.0, grid)
    x = grid.nodes
    assert np.max(np.abs(s.y1 - np.sin(x))) < 1e-12
    assert np.max(np.abs(s.y2 + np.cos(x))) < 1e-12
    assert s.y1[-1] == pytest.approx(0, abs=1e-12) and s.y2[-1] == pytest.approx(1, abs=1e-12)
    assert s.norm_sq == pytest.approx(math.pi, abs=1e-12)


def test_constant_solutions(grid):
    s = integrate_left(CanonicalPotential.zero(), math.pi / 2, 0.0, grid)
    assert np.allclose(s.y1, 1.0, atol=1e-14) and np.allclose(s.y2, 0.0, atol=1e-14)
    s = integrate_left(CanonicalPotential.constant(0.5), 0.0, -0.5, grid)
    assert np.allclose(s.y1, 0.0, atol=1e-14) and np.allclose(s.y2, -1.0, atol=1e-14)


def test_free_right_solution(zero, grid):
    s = integrate_right(zero, 0.0, 1.0, grid)
    x = grid.nodes
    assert np.max(np.abs(s.y1 - np.sin(x - math.pi))) < 1e-12
    assert np.max(np.abs(s.y2 + np.cos(x - math.pi))) < 1e-12
    assert s.norm_accum[0] == 0.0
    assert s.norm_sq == pytest.approx(math.pi, abs=1e-12)
    s = integrate_right(zero, math.pi / 2, 0.0, grid)
    assert np.allclose(s.y1, 1.0) and np.allclose(s.y2, 0.0, atol=1e-14)


@pytest.mark.parametrize("lam", [-2.3, 0.4, 5.1])
def test_bracket_constant(bump, grid, lam):
    w = bracket(integrate_left(bump, 0.3, lam, grid), integrate_right(bump, -0.2, lam, grid))
    assert np.ptp(w) < 1e-9


def test_characteristic_free(zero, grid):
    assert characteristic(zero, 0, 0, 0.5, grid) == pytest.approx(1.0, abs=1e-12)
    assert abs(characteristic(zero, 0, 0, 3.0, grid)) < 1e-10
    assert abs(characteristic(zero, math.pi / 4, math.pi / 4, 0.0, grid)) < 1e-12
    lams = np.linspace(-3, 3, 13)
    chi = characteristic(zero, 0.2, -0.1, lams, grid)
    assert np.allclose(chi, np.sin(lams * math.pi + 0.2 + 0.1), atol=1e-11)


def test_endpoint_batch_matches_trajectory(bump, grid):
    y1, y2 = endpoint_values(bump, 0.1, [0.7, 1.9], grid)
    s = integrate_left(bump, 0.1, 1.9, grid)
    assert y1[1] == s.y1[-1] and y2[1] == s.y2[-1]


def test_fourth_order(bump):
    ref = integrate_left(bump, 0.2, 3.1, Grid(math.pi, 16001))
    errs = []
    for n in (101, 201, 401):
        s = integrate_left(bump, 0.2, 3.1, Grid(math.pi, n))
        errs.append(math.hypot(s.y1[-1] - ref.y1[-1], s.y2[-1] - ref.y2[-1]))
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8
    # the norm accumulator is fourth order too
    aerr = [abs(integrate_left(bump, 0.2, 3.1, Grid(math.pi, n)).norm_sq - ref.norm_sq) for n in (101, 201)]
    assert aerr[0] / aerr[1] >= 8


def test_overflow_reports_position():
    pot = CanonicalPotential.constant(400.0, 0.0, 12.0)
    with pytest.raises(IntegrationOverflow) as info:
        integrate_left(pot, 0.3, 0.0, Grid(12.0, 2001))
    assert 0 < info.value.x <= 12.0
