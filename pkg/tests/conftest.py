"""Shared fixtures: the three uniform reference cases and a cheap quadrature.

Closed forms used throughout the suite (n = 2, unit ball, uniform unit
mass, so f = 1/pi):

    theta_r(r)  = -r / (2 pi)                       (source side)
    u_p'(r)     = -(r / (2 pi))**(1/(p-1))
    u_p(r)      = (p-1)/p * (1/(2 pi))**(1/(p-1)) * (1 - r**(p/(p-1)))

The sink side is the mirror image (u -> -u).
"""

import numpy as np
import pytest

from kplap import CaseKind, QuadratureSpec, make_uniform_case

# small node budget keeps unit tests fast; production runs use 4097
UNIT_NODES = 257


@pytest.fixture(scope="session")
def disjoint_case():
    return make_uniform_case(CaseKind.DISJOINT_BALLS, n=2, r1=1.0, r2=1.0)


@pytest.fixture(scope="session")
def annulus_outer_case():
    return make_uniform_case(CaseKind.ANNULUS_OUTER_SOURCE, n=2, r1=2.0, r2=1.0)


@pytest.fixture(scope="session")
def annulus_inner_case():
    return make_uniform_case(CaseKind.ANNULUS_INNER_SOURCE, n=2, r1=1.0, r2=2.0)


@pytest.fixture(scope="session")
def unit_quad():
    return QuadratureSpec(nodes=UNIT_NODES)


def ball_potential_closed_form(r, p):
    """u_p on the unit source ball of the uniform disjoint fixture."""
    r = np.asarray(r, dtype=float)
    q = p / (p - 1.0)
    return (p - 1.0) / p * (1.0 / (2.0 * np.pi)) ** (1.0 / (p - 1.0)) * (1.0 - r ** q)


def ball_slope_closed_form(r, p):
    """u_p' on the unit source ball (negative: the potential descends)."""
    r = np.asarray(r, dtype=float)
    return -((r / (2.0 * np.pi)) ** (1.0 / (p - 1.0)))


def kantorovich_closed_form(p):
    """K[u_p] for the uniform disjoint fixture with R1 = R2 = 1."""
    q = p / (p - 1.0)
    return (4.0 * (p - 1.0) / p * (1.0 / (2.0 * np.pi)) ** (1.0 / (p - 1.0))
            * q / (2.0 * (q + 2.0)))
