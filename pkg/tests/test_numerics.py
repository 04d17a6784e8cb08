"""Quadrature and root-finding kernels."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kplap import BracketSpec, QuadratureSpec, Scheme, find_root_monotone
from kplap.errors import BracketError, ConvergenceError, DomainError, NumericError, UsageError
from kplap.numerics import (cumulative_panel_simpson, graded_nodes, integrate,
                            integrate_samples, refine_panels)

from conftest import UNIT_NODES


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------


def test_simpson_exact_on_cubic():
    # Simpson integrates cubics exactly up to rounding
    val = integrate(lambda x: x ** 3 - 2 * x + 1, 0.0, 2.0,
                    QuadratureSpec(nodes=17))
    assert abs(val - (4.0 - 4.0 + 2.0)) < 1e-13


def test_simpson_fourth_order_on_smooth():
    exact = 1.0 - np.cos(1.0)
    coarse = abs(integrate(np.sin, 0.0, 1.0, QuadratureSpec(nodes=17)) - exact)
    fine = abs(integrate(np.sin, 0.0, 1.0, QuadratureSpec(nodes=33)) - exact)
    assert coarse / fine > 12.0  # ~16 for a 4th-order rule


def test_gauss_matches_simpson():
    spec_s = QuadratureSpec(nodes=UNIT_NODES)
    spec_g = QuadratureSpec(nodes=UNIT_NODES, scheme=Scheme.GAUSS_LEGENDRE_COMPOSITE)
    f = lambda x: np.exp(-x) * np.sin(3 * x)
    a, b = 0.3, 2.1
    # Simpson truncation dominates the difference at this resolution
    assert abs(integrate(f, a, b, spec_s) - integrate(f, a, b, spec_g)) < 1e-9


@given(split=st.floats(0.1, 0.9))
@settings(max_examples=50, deadline=None)
def test_integrate_additivity(split):
    # [a, m] + [m, b] equals [a, b] to 1e-10 relative
    f = lambda x: 1.0 / (1.0 + x ** 2)
    spec = QuadratureSpec(nodes=UNIT_NODES)
    whole = integrate(f, 0.0, 1.0, spec)
    parts = integrate(f, 0.0, split, spec) + integrate(f, split, 1.0, spec)
    assert abs(whole - parts) <= 1e-10 * max(1.0, abs(whole))


def test_integrate_empty_interval():
    assert integrate(np.sin, 1.0, 1.0) == 0.0


def test_integrate_rejects_reversed_interval():
    with pytest.raises(DomainError):
        integrate(np.sin, 1.0, 0.0)


def test_integrate_rejects_nonfinite_endpoint():
    with pytest.raises(DomainError):
        integrate(np.sin, 0.0, np.inf)


def test_integrate_flags_nonfinite_integrand():
    with np.errstate(divide="ignore"), pytest.raises(NumericError):
        integrate(lambda x: 1.0 / (x - 0.5), 0.0, 1.0, QuadratureSpec(nodes=17))


def test_spec_rejects_even_simpson_nodes():
    with pytest.raises(UsageError):
        QuadratureSpec(nodes=256)


def test_spec_rejects_tiny_node_count():
    with pytest.raises(UsageError):
        QuadratureSpec(nodes=8)


# ---------------------------------------------------------------------------
# sampled rules
# ---------------------------------------------------------------------------


def test_integrate_samples_matches_callable_rule():
    x = np.linspace(0.0, 1.0, UNIT_NODES)
    direct = integrate(np.exp, 0.0, 1.0, QuadratureSpec(nodes=UNIT_NODES))
    sampled = integrate_samples(np.exp(x), x)
    assert abs(direct - sampled) < 1e-14


def test_integrate_samples_even_count_falls_back():
    x = np.linspace(0.0, 1.0, 100)
    val = integrate_samples(np.exp(x), x)
    # trapezoid accuracy, not Simpson
    assert abs(val - (np.e - 1.0)) < 1e-4
    assert abs(val - (np.e - 1.0)) > 1e-8


def test_integrate_samples_validates_shape():
    with pytest.raises(UsageError):
        integrate_samples(np.ones(4), np.ones((2, 2)))


def test_cumulative_panel_simpson_matches_antiderivative():
    nodes = np.linspace(0.2, 1.7, 161)
    cum = cumulative_panel_simpson(np.exp, nodes)
    assert cum[0] == 0.0
    assert np.max(np.abs(cum - (np.exp(nodes) - np.exp(nodes[0])))) < 1e-10


def test_cumulative_panel_simpson_rejects_unsorted_nodes():
    with pytest.raises(UsageError):
        cumulative_panel_simpson(np.exp, np.array([0.0, 0.5, 0.5, 1.0]))


# ---------------------------------------------------------------------------
# graded refinement
# ---------------------------------------------------------------------------


def test_graded_nodes_accumulate_toward_point():
    pts = graded_nodes(0.5, 0.0, 1.0)
    assert np.all(np.diff(pts) > 0)
    assert pts[0] > 0.0 and pts[-1] < 1.0
    gaps = np.abs(pts - 0.5)
    # offsets shrink geometrically on each side of the point
    assert gaps.min() < 1e-10


def test_graded_nodes_rejects_outside_point():
    with pytest.raises(UsageError):
        graded_nodes(2.0, 0.0, 1.0)


def test_refine_panels_keeps_base_and_inserts_point():
    base = np.linspace(0.0, 1.0, 11)
    refined = refine_panels(base, [0.37])
    assert np.all(np.isin(base, refined))
    assert 0.37 in refined
    assert np.all(np.diff(refined) > 0)


def test_refine_panels_without_points_is_identity():
    base = np.linspace(0.0, 2.0, 9)
    assert np.array_equal(refine_panels(base, []), base)


# ---------------------------------------------------------------------------
# monotone root solve
# ---------------------------------------------------------------------------


def test_root_simple_cubic():
    root = find_root_monotone(lambda x: x ** 3 - 0.2, BracketSpec(0.0, 1.0))
    assert abs(root - 0.2 ** (1.0 / 3.0)) < 1e-10


def test_root_residual_within_tol_and_inside_bracket():
    spec = BracketSpec(0.0, 4.0, tol=1e-11)
    fn = lambda x: np.expm1(x) - 5.0
    root = find_root_monotone(fn, spec)
    assert spec.lo <= root <= spec.hi
    assert abs(fn(root)) <= spec.tol
    assert abs(root - np.log(6.0)) < 1e-9


def test_root_exact_endpoint_hits():
    assert find_root_monotone(lambda x: x, BracketSpec(0.0, 1.0)) == 0.0
    assert find_root_monotone(lambda x: x - 1.0, BracketSpec(0.0, 1.0)) == 1.0


def test_root_rejects_unbracketed_sign():
    with pytest.raises(BracketError):
        find_root_monotone(lambda x: x + 2.0, BracketSpec(0.0, 1.0))


def test_root_flags_nonfinite_values():
    with pytest.raises(NumericError):
        find_root_monotone(lambda x: np.nan, BracketSpec(0.0, 1.0))


def test_root_budget_exhaustion():
    # curved enough that the secant cannot finish within 4 iterations
    with pytest.raises(ConvergenceError):
        find_root_monotone(lambda x: x ** 3 - 0.3,
                           BracketSpec(0.0, 1.0, tol=1e-15, max_iter=4))


def test_bracket_spec_validation():
    with pytest.raises(UsageError):
        BracketSpec(1.0, 0.0)
    with pytest.raises(UsageError):
        BracketSpec(0.0, 1.0, tol=-1.0)


@given(target=st.floats(0.05, 0.95), scale=st.floats(0.5, 4.0))
@settings(max_examples=200, deadline=None)
def test_root_property_monotone_family(target, scale):
    fn = lambda x: scale * (x ** 3 + x) - scale * (target ** 3 + target)
    root = find_root_monotone(fn, BracketSpec(0.0, 1.0, tol=1e-13))
    assert abs(root - target) < 1e-9
