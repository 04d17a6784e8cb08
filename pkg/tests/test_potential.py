"""Potential reconstruction: closed forms, admissibility, strong-form residual."""

import dataclasses

import numpy as np
import pytest

from kplap import (CaseKind, build_potential, el_residual, flux_annulus,
                   flux_disjoint_sink, flux_disjoint_source, grid_table,
                   make_uniform_case, solve_constant_annulus)
from kplap.errors import UsageError
from kplap.potential import SideTag, admissibility_report

from conftest import ball_potential_closed_form, ball_slope_closed_form


def source_potential(case, p, grid_size=1024):
    return build_potential(flux_disjoint_source(case), p, grid_size=grid_size)


# ---------------------------------------------------------------------------
# ball sides against the closed form
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("p", [3.0, 4.0, 8.0])
def test_ball_potential_matches_closed_form(disjoint_case, p):
    # the slope r^(1/(p-1)) has unbounded curvature at the origin; graded
    # panels hold the cumulative error near 1e-9 at this resolution
    pot = source_potential(disjoint_case, p)
    want = ball_potential_closed_form(pot.grid, p)
    assert np.max(np.abs(pot.values - want)) < 1e-8
    assert np.max(np.abs(pot.derivative - ball_slope_closed_form(pot.grid, p))) < 1e-13


def test_ball_potential_center_value(disjoint_case):
    pot = source_potential(disjoint_case, 4.0)
    assert abs(pot.value_at(0.0) - 0.4064) < 1e-4
    assert abs(pot.value_at(0.0) - ball_potential_closed_form(0.0, 4.0)) < 2e-9
    assert abs(pot.values[-1]) <= 1e-10  # pinned at the rim


def test_sink_potential_is_mirror(disjoint_case):
    up = source_potential(disjoint_case, 4.0)
    down = build_potential(flux_disjoint_sink(disjoint_case), 4.0, grid_size=1024)
    assert np.max(np.abs(down.values + up.values)) < 1e-12
    assert np.all(down.values <= 1e-12)
    assert down.side_tag is SideTag.SINK_BALL


def test_sign_structure(disjoint_case):
    pot = source_potential(disjoint_case, 4.0)
    assert np.all(pot.values >= -1e-12)
    assert np.all(pot.derivative <= 1e-12)


@pytest.mark.parametrize("p,sup", [(4.0, 0.5419), (256.0, 0.99282)])
def test_sup_gradient_worked_values(disjoint_case, p, sup):
    pot = source_potential(disjoint_case, p)
    assert abs(pot.sup_gradient - sup) < 5e-5
    got, ok = admissibility_report(pot)
    assert ok and abs(got - pot.sup_gradient) < 1e-15


def test_sup_gradient_increases_with_p(disjoint_case):
    sups = [source_potential(disjoint_case, p, grid_size=512).sup_gradient
            for p in (3.0, 4.0, 8.0, 16.0, 64.0)]
    assert np.all(np.diff(sups) > 0.0)
    assert sups[-1] < 1.0 + 1e-9


def test_center_value_increases_with_p_below_radius(disjoint_case):
    centers = [source_potential(disjoint_case, p, grid_size=512).value_at(0.0)
               for p in (3.0, 4.0, 8.0, 16.0, 64.0)]
    assert np.all(np.diff(centers) > 0.0)
    assert centers[-1] <= 1.0  # transport distance caps the height


def test_derivative_integrates_back_to_values(disjoint_case):
    # trapezoid of the stored derivative reproduces value differences at
    # O(h^2) away from the origin (where the slope's curvature blows up)
    errs = []
    for gs in (512, 1024):
        pot = source_potential(disjoint_case, 4.0, grid_size=gs)
        keep = pot.grid >= 0.25
        r, u, du = pot.grid[keep], pot.values[keep], pot.derivative[keep]
        h = np.diff(r)
        trap = np.concatenate([[0.0], np.cumsum(0.5 * h * (du[1:] + du[:-1]))])
        errs.append(np.max(np.abs((trap - trap[-1]) - (u - u[-1]))))
    assert errs[0] < 1e-6
    assert 3.2 < errs[0] / errs[1] < 4.8  # second order


# ---------------------------------------------------------------------------
# annulus sides
# ---------------------------------------------------------------------------


def test_annulus_boundary_zeros(annulus_outer_case):
    c4 = solve_constant_annulus(annulus_outer_case, 4.0, tol=1e-13)
    fl = flux_annulus(annulus_outer_case, 4.0, constant=c4)
    pot = build_potential(fl, 4.0, grid_size=4096)
    assert abs(pot.values[0]) <= 1e-10          # anchored edge, exact
    # far edge carries the root-solve residual plus the small difference
    # between the solver's quadrature grid and the build grid
    assert abs(pot.values[-1]) <= 5.0 * 1e-13 + 1e-12
    coarse = build_potential(fl, 4.0, grid_size=1024)
    assert abs(coarse.values[-1]) <= 5.0 * 1e-13 + 5e-9


def test_annulus_potential_shape(annulus_outer_case):
    fl = flux_annulus(annulus_outer_case, 4.0)
    pot = build_potential(fl, 4.0, grid_size=1024)
    assert pot.side_tag is SideTag.ANNULUS
    assert np.all(pot.values >= -1e-12)     # source side sits above zero
    peak = pot.grid[np.argmax(pot.values)]
    assert abs(peak - fl.zero_crossing) < 2.0 / 1024
    assert pot.zero_crossings == (fl.zero_crossing,)


def test_annulus_inner_potential_is_nonpositive(annulus_inner_case):
    fl = flux_annulus(annulus_inner_case, 4.0)
    pot = build_potential(fl, 4.0, grid_size=512)
    # nonpositive up to the far-edge quadrature drift it ends on
    assert np.all(pot.values <= max(pot.values[-1], 0.0) + 1e-12)
    assert abs(pot.values[-1]) <= 1e-8
    assert abs(pot.values[0]) <= 1e-10
    assert pot.values.min() < -0.1  # genuinely descends in between


# ---------------------------------------------------------------------------
# strong-form residual
# ---------------------------------------------------------------------------


def test_el_residual_small_on_fine_grid(disjoint_case):
    pot = source_potential(disjoint_case, 4.0, grid_size=4096)
    rep = el_residual(pot, disjoint_case, 4.0)
    assert rep.max_residual <= 1e-6
    assert 0.0 in rep.excluded_radii


def test_el_residual_detects_wrong_potential(disjoint_case):
    # zero out the potential: the density term alone must remain
    pot = source_potential(disjoint_case, 4.0, grid_size=1024)
    broken = dataclasses.replace(
        pot,
        values=np.zeros_like(pot.values),
        derivative=np.zeros_like(pot.derivative),
    )
    rep = el_residual(broken, disjoint_case, 4.0)
    assert rep.max_residual > 0.01


def test_el_residual_refines_at_second_order():
    # n = 3 keeps the composite flux genuinely cubic so the order shows
    case = make_uniform_case(CaseKind.DISJOINT_BALLS, n=3, r1=1.0, r2=1.0)
    res = []
    for gs in (512, 1024):
        pot = build_potential(flux_disjoint_source(case), 4.0, grid_size=gs)
        res.append(el_residual(pot, case, 4.0).max_residual)
    assert 3.0 <= res[0] / res[1] <= 5.0


def test_el_residual_annulus(annulus_outer_case):
    # for the uniform n = 2 annulus the composite flux is an exact quadratic
    # in r, so the central stencil differentiates it to rounding level
    fl = flux_annulus(annulus_outer_case, 4.0)
    pot = build_potential(fl, 4.0, grid_size=2048)
    rep = el_residual(pot, annulus_outer_case, 4.0)
    assert rep.max_residual <= 1e-10
    (excluded,) = rep.excluded_radii
    assert abs(excluded - fl.zero_crossing) <= 2.0 / 2048


def test_el_residual_validation(disjoint_case):
    pot = source_potential(disjoint_case, 4.0, grid_size=128)
    with pytest.raises(UsageError):
        el_residual(pot, disjoint_case, 4.0)  # too coarse for the stencil
    fine = source_potential(disjoint_case, 4.0, grid_size=512)
    with pytest.raises(UsageError):
        el_residual(fine, disjoint_case, 8.0)  # exponent mismatch


# ---------------------------------------------------------------------------
# construction guards and serialization
# ---------------------------------------------------------------------------


def test_build_potential_validation(disjoint_case, annulus_outer_case):
    fl = flux_disjoint_source(disjoint_case)
    with pytest.raises(UsageError):
        build_potential(fl, 4.0, grid_size=63)
    with pytest.raises(UsageError):
        build_potential(fl, 4.0, grid_size=101)  # odd panel count
    solved = flux_annulus(annulus_outer_case, 4.0)
    with pytest.raises(UsageError):
        build_potential(solved, 8.0, grid_size=256)


def test_potential_arrays_are_frozen(disjoint_case):
    pot = source_potential(disjoint_case, 4.0, grid_size=256)
    with pytest.raises(ValueError):
        pot.values[0] = 1.0


def test_grid_table_columns(disjoint_case):
    pot = source_potential(disjoint_case, 4.0, grid_size=256)
    table = grid_table(pot)
    assert table.shape == (pot.grid.size, 5)
    r, u, du, lam, theta = table.T
    assert np.array_equal(r, pot.grid)
    assert np.array_equal(u, pot.values)
    # lambda = |du|^(p-2), theta_r = lambda * du, cross-checked pointwise
    assert np.max(np.abs(lam - np.abs(du) ** 2.0)) < 1e-15
    assert np.max(np.abs(theta - lam * du)) < 1e-15
    # theta column reproduces the flux it was reconstructed from
    direct = flux_disjoint_source(disjoint_case).theta_radial(pot.grid)
    assert np.max(np.abs(theta - direct)) < 1e-12
