"""Reconstruction of the radial potential from a flux field.

The potential is the antiderivative of the simplified slope
sign(theta_r) |theta_r|^(1/(p-1)), anchored at the radius where the
admissible class pins it to zero: the outer boundary for a ball side,
the edge shared with the inner ball for an annulus.  The far annulus
edge then lands on zero automatically because the flux constant was
solved for exactly that.

Grids are uniform with ``grid_size`` panels.  On ball sides the first
node sits at the origin, where the raw profile P = mf / r^n is 0/0 but
the slope has continuous limit zero; the cumulative rule never touches
the profile there and grades its panels into the origin, the same way it
grades into a flux zero crossing inside an annulus.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AdmissibilityWarning, UsageError
from .flux_field import FluxField
from .numerics import cumulative_panel_simpson, refine_panels
from .radial_model import CaseKind, ProblemCase, RadialDensity, Side

#: Slack granted on the unit gradient bound before a result is flagged.
GRADIENT_SLACK = 1e-9


class SideTag(Enum):
    SOURCE_BALL = "source_ball"
    SINK_BALL = "sink_ball"
    ANNULUS = "annulus"


def _tag_for(flux: FluxField) -> SideTag:
    if flux.kind is CaseKind.DISJOINT_BALLS:
        return SideTag.SOURCE_BALL if flux.side is Side.SOURCE else SideTag.SINK_BALL
    return SideTag.ANNULUS


@dataclass(frozen=True)
class RadialPotential:
    """Sampled potential on one working interval; immutable result record."""

    p: float
    side_tag: SideTag
    interval: tuple[float, float]
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    sup_gradient: float
    admissible: bool
    zero_crossings: tuple[float, ...] = ()

    def value_at(self, r: float) -> float:
        """Linear interpolation of the sampled values."""
        return float(np.interp(r, self.grid, self.values))


def build_potential(flux: FluxField, p: float, grid_size: int = 4096) -> RadialPotential:
    """Integrate the reconstructed slope of ``flux`` on a uniform grid.

    ``grid_size`` counts panels and must be even (so that downstream
    Simpson sums over the stored samples keep their order) and at least
    64.  The cumulative rule runs on the grid refined with graded panels
    around the slope kinks; stored values are read off at the grid nodes.
    """
    if grid_size < 64 or grid_size % 2 != 0:
        raise UsageError(f"grid_size must be even and >= 64, got {grid_size}")
    if flux.p is not None and abs(p - flux.p) > 1e-12:
        raise UsageError(f"flux was solved at p={flux.p}, cannot build at p={p}")
    a, b = flux.interval
    grid = np.linspace(a, b, grid_size + 1)
    singular = flux.singular_radii()
    refined = refine_panels(grid, list(singular))
    cum = cumulative_panel_simpson(lambda r: flux.potential_slope(r, p), refined)
    anchor_val = float(np.interp(flux.anchor, refined, cum))
    values = np.interp(grid, refined, cum) - anchor_val
    derivative = np.asarray(flux.potential_slope(grid, p), dtype=float)
    sup_grad = float(np.max(np.abs(flux.potential_slope(refined, p))))
    admissible = sup_grad <= 1.0 + GRADIENT_SLACK
    if not admissible:
        warnings.warn(
            f"reconstructed gradient reaches {sup_grad}, beyond the unit bound",
            AdmissibilityWarning, stacklevel=2)
    values.setflags(write=False)
    derivative.setflags(write=False)
    grid.setflags(write=False)
    return RadialPotential(
        p=float(p), side_tag=_tag_for(flux), interval=(a, b),
        grid=grid, values=values, derivative=derivative,
        sup_gradient=sup_grad, admissible=admissible,
        zero_crossings=tuple(x for x in singular if x > a),
    )


def admissibility_report(pot: RadialPotential) -> tuple[float, bool]:
    """(sup |du|, sup <= 1 + slack) for a built potential."""
    sup = float(np.max(np.abs(pot.derivative)))
    sup = max(sup, pot.sup_gradient)
    return sup, sup <= 1.0 + GRADIENT_SLACK


def signed_density(case: ProblemCase, tag: SideTag) -> tuple[RadialDensity, float]:
    """Density and its sign in f = f_plus - f_minus for a side tag."""
    if tag is SideTag.SOURCE_BALL:
        return case.f_plus, 1.0
    if tag is SideTag.SINK_BALL:
        return case.f_minus, -1.0
    side = case.sides()[0]
    return case.density(side), case.density_sign(side)


@dataclass(frozen=True)
class ELResidualReport:
    """Interior strong-form residual of the reconstructed potential."""

    max_residual: float
    grid: np.ndarray
    residuals: np.ndarray          # nan at excluded or boundary nodes
    excluded_radii: tuple[float, ...]


def el_residual(pot: RadialPotential, case: ProblemCase, p: float) -> ELResidualReport:
    """Central-difference residual of (r^(n-1) |u'|^(p-2) u')' + f r^(n-1).

    Second-order stencil on the stored grid.  Nodes within three cells of
    a flux zero crossing or of the origin are excluded from the max: the
    composite flux r^(n-1) theta_r is only C^1 there and the stencil's
    order claim does not apply.
    """
    if pot.grid.size < 256:
        raise UsageError(f"residual stencil needs >= 256 nodes, got {pot.grid.size}")
    if abs(p - pot.p) > 1e-12:
        raise UsageError(f"potential was built at p={pot.p}, asked at p={p}")
    dens, sign = signed_density(case, pot.side_tag)
    r = pot.grid
    du = pot.derivative
    theta = np.abs(du) ** (p - 2.0) * du
    g = r ** (case.n - 1) * theta
    resid = np.full(r.size, np.nan)
    resid[1:-1] = (g[2:] - g[:-2]) / (r[2:] - r[:-2]) \
        + sign * dens.evaluate(r[1:-1]) * r[1:-1] ** (case.n - 1)

    excluded: list[float] = []
    mask = np.zeros(r.size, dtype=bool)
    flips = np.nonzero(du[:-1] * du[1:] < 0.0)[0]
    centers = [r[i] for i in flips]
    if pot.interval[0] == 0.0:
        centers.append(0.0)
    for c in centers:
        i = int(np.argmin(np.abs(r - c)))
        mask[max(0, i - 3):i + 4] = True
        excluded.append(float(c))
    resid_masked = np.where(mask, np.nan, resid)
    interior = resid_masked[1:-1]
    kept = interior[np.isfinite(interior)]
    if kept.size == 0:
        raise UsageError("every interior node was excluded; grid too coarse")
    return ELResidualReport(
        max_residual=float(np.max(np.abs(kept))),
        grid=r, residuals=resid_masked, excluded_radii=tuple(excluded),
    )


def grid_table(pot: RadialPotential) -> np.ndarray:
    """Columns (r, u, du, lambda, theta_r) for serialization.

    lambda = |du|^(p-2) and theta_r = lambda * du, consistent with the
    dual algebra at the critical pair.
    """
    if not np.isfinite(pot.p):
        raise UsageError("grid table needs a finite exponent")
    du = pot.derivative
    lam = np.abs(du) ** (pot.p - 2.0)
    theta = lam * du
    return np.column_stack([pot.grid, pot.values, du, lam, theta])
