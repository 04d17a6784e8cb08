"""Independent discrete route: assembly, solvers, and agreement checks."""

import dataclasses

import numpy as np
import pytest

from kplap import (Side, case_fluxes, discretize, dual_energy, flux_annulus,
                   gradient_check, minimize_energy, primal_energy,
                   critical_pair, solve_side)
from kplap.errors import UsageError

from conftest import ball_potential_closed_form


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def test_objective_of_zero_is_zero(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 64)
    assert prob.objective(np.zeros(prob.grid.size)) == 0.0


def test_cell_weights_sum_to_measure(disjoint_case):
    # exact radial measures: cells and dual cells both fill the ball
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 128)
    assert abs(np.sum(prob.cell_weights) - np.pi) < 1e-14
    assert abs(np.sum(prob.node_weights) - np.pi) < 1e-14
    # unit discrete mass against the stored load
    assert abs(np.sum(prob.node_weights * prob.load) - 1.0) < 1e-8


def test_pinned_sets(disjoint_case, annulus_outer_case):
    assert discretize(disjoint_case, Side.SOURCE, 4.0, 64).pinned == (64,)
    assert discretize(annulus_outer_case, Side.SOURCE, 4.0, 64).pinned == (0, 64)


def test_discretize_validation(disjoint_case):
    with pytest.raises(UsageError):
        discretize(disjoint_case, Side.SOURCE, 4.0, 4)
    with pytest.raises(UsageError):
        discretize(disjoint_case, Side.SOURCE, 2.0, 64)


def test_gradient_matches_finite_differences(disjoint_case):
    assert gradient_check(discretize(disjoint_case, Side.SOURCE, 4.0, 256)) <= 1e-5
    # p = 3 has a less smooth flux, checked with a coarser step
    assert gradient_check(discretize(disjoint_case, Side.SOURCE, 3.0, 256),
                          eps=1e-5) <= 1e-4


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


def test_zero_load_minimizer_is_zero(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 256)
    dead = dataclasses.replace(prob, load=np.zeros_like(prob.load))
    res = minimize_energy(dead)
    assert res.converged
    assert np.max(np.abs(res.values)) == 0.0


def test_minimizer_tracks_closed_form(disjoint_case):
    res = solve_side(disjoint_case, Side.SOURCE, 4.0, 512)
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 512)
    assert res.converged and res.grad_inf <= 1e-10
    sup = np.max(np.abs(res.values - ball_potential_closed_form(prob.grid, 4.0)))
    assert sup <= 5e-5
    assert res.values[prob.pinned[0]] == 0.0


def test_minimum_beats_sampled_analytic_candidate(disjoint_case):
    # the sampled closed form is one admissible piecewise-linear candidate;
    # the discrete minimizer may only improve on it
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 512)
    res = minimize_energy(prob)
    assert res.objective <= prob.objective(
        np.asarray(ball_potential_closed_form(prob.grid, 4.0))) + 1e-14


def test_sampled_objective_matches_quadrature_route(disjoint_case):
    # discrete energy of the exact samples vs the integral it discretizes
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 2048)
    pairs = critical_pair(disjoint_case, 4.0, grid_size=2048)
    analytic = primal_energy([pairs[0][1]], disjoint_case, 4.0)
    sampled = prob.objective(np.asarray(ball_potential_closed_form(prob.grid, 4.0)))
    assert abs(sampled - analytic) <= 1e-5


def test_discrete_total_echoes_dual_energy(disjoint_case):
    total = sum(solve_side(disjoint_case, side, 4.0, 2048).objective
                for side in disjoint_case.sides())
    idual = dual_energy(case_fluxes(disjoint_case, 4.0), 4.0, disjoint_case,
                        grid_size=2048)
    assert abs(total - idual) <= 1e-3


def test_annulus_minimizer(annulus_outer_case):
    res = solve_side(annulus_outer_case, Side.SOURCE, 4.0, 512)
    prob = discretize(annulus_outer_case, Side.SOURCE, 4.0, 512)
    assert res.converged
    assert res.values[0] == 0.0 and res.values[-1] == 0.0
    # discrete slope changes sign within one cell of the flux zero
    slopes = np.diff(res.values)
    flips = np.nonzero(slopes[:-1] * slopes[1:] < 0.0)[0]
    assert flips.size == 1
    i = int(flips[0])
    crossing = flux_annulus(annulus_outer_case, 4.0).zero_crossing
    assert prob.grid[i] <= crossing <= prob.grid[i + 2]


def test_result_flags_are_consistent(disjoint_case):
    res = solve_side(disjoint_case, Side.SOURCE, 4.0, 128, gtol=1e-10)
    assert res.converged == (res.grad_inf <= 1e-10)
    assert res.seconds >= 0.0 and res.method == "newton"


# ---------------------------------------------------------------------------
# alternative drivers
# ---------------------------------------------------------------------------


def test_lbfgs_agrees_at_its_own_tolerance(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 256)
    newton = minimize_energy(prob)
    lb = minimize_energy(prob, method="lbfgs", gtol=1e-6)
    assert lb.converged
    assert np.max(np.abs(lb.values - newton.values)) <= 1e-4


def test_lbfgs_stalls_below_the_rounding_floor(disjoint_case):
    # objective-difference methods cannot certify gradients near 1e-10;
    # the result must say so rather than claim convergence
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 256)
    res = minimize_energy(prob, method="lbfgs", gtol=1e-10)
    assert not res.converged
    assert res.grad_inf > 1e-10


def test_gradient_descent_agrees_on_a_coarse_grid(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 64)
    newton = minimize_energy(prob)
    gd = minimize_energy(prob, method="gd", gtol=1e-5)
    assert gd.converged
    assert np.max(np.abs(gd.values - newton.values)) <= 1e-3


def test_warm_start_reuses_a_solution(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 256)
    cold = minimize_energy(prob)
    warm = minimize_energy(prob, initial=cold.values)
    assert warm.converged
    assert np.max(np.abs(warm.values - cold.values)) <= 1e-10


def test_unknown_method_rejected(disjoint_case):
    prob = discretize(disjoint_case, Side.SOURCE, 4.0, 64)
    with pytest.raises(UsageError):
        minimize_energy(prob, method="cg")
