"""Radially symmetric two-ball transfer geometries and their densities.

A problem instance moves unit mass from a source region onto a sink
region, both balls centered so that every field in the pipeline depends
on the radius alone.  Three arrangements are supported:

* two disjoint balls of radii R1 (source) and R2 (sink);
* concentric balls with the source occupying the outer annulus
  (R1 > R2, transfer happens on [R2, R1]);
* concentric balls with the sink occupying the outer annulus
  (R2 > R1, transfer happens on [R1, R2]).

For the concentric arrangements the potential is forced to vanish on the
closed inner ball, so only the annulus carries any computation; the
density living inside the hole never enters and the annulus-side density
is required to integrate to one on the annulus itself.

Masses are radial integrals weighted by the surface measure of the unit
sphere: mass = omega_n * integral f(r) r^(n-1) dr, with
omega_n = 2 pi^(n/2) / Gamma(n/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import BalanceError, GeometryError, NumericError, UsageError

#: Absolute tolerance used when deciding whether a case is normalized.
BALANCE_TOL = 1e-10


def surface_constant(n: int) -> float:
    """Surface area of the unit (n-1)-sphere, 2 pi^(n/2) / Gamma(n/2)."""
    if int(n) != n or n < 1:
        raise GeometryError(f"dimension must be an integer >= 1, got {n!r}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


class CaseKind(Enum):
    DISJOINT_BALLS = "disjoint"
    ANNULUS_OUTER_SOURCE = "annulus_outer"
    ANNULUS_INNER_SOURCE = "annulus_inner"


class Side(Enum):
    """Which half of the transfer a field belongs to."""

    SOURCE = "source"
    SINK = "sink"


class DensityForm(Enum):
    UNIFORM = "uniform"
    POWER_LAW = "power"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class RadialDensity:
    """Nonnegative density f(r) declared on a radial support interval.

    Three forms are available.  ``uniform`` is a constant; ``power_law``
    is coefficient * r**exponent; ``tabulated`` interpolates samples
    linearly.  Cumulative moment integrals (the quantities every flux
    computation actually needs) are evaluated in closed form for the
    first two and exactly for the linear interpolant of the third, so no
    quadrature error enters the mass bookkeeping.
    """

    form: DensityForm
    support: tuple[float, float]
    coefficient: float = 0.0
    exponent: float = 0.0
    grid: tuple[float, ...] | None = None
    samples: tuple[float, ...] | None = None

    def __post_init__(self):
        a, b = self.support
        if not (np.isfinite(a) and np.isfinite(b)) or a < 0 or b <= a:
            raise GeometryError(f"invalid density support [{a}, {b}]")
        if self.form in (DensityForm.UNIFORM, DensityForm.POWER_LAW):
            if not np.isfinite(self.coefficient) or self.coefficient < 0:
                raise UsageError(f"density coefficient must be >= 0, got {self.coefficient}")
            if self.form is DensityForm.POWER_LAW and self.exponent < 0 and a == 0:
                raise GeometryError("power-law density with negative exponent needs support away from 0")
        else:
            if self.grid is None or self.samples is None or len(self.grid) != len(self.samples):
                raise UsageError("tabulated density needs matching grid and samples")
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.samples, dtype=float)
            if g.size < 2 or np.any(np.diff(g) <= 0):
                raise UsageError("tabulated grid must be strictly increasing, size >= 2")
            if not np.isfinite(v).all() or np.any(v < 0):
                raise UsageError("tabulated samples must be finite and >= 0")
            if abs(g[0] - a) > 1e-12 * max(1.0, b) or abs(g[-1] - b) > 1e-12 * max(1.0, b):
                raise UsageError("tabulated grid must span the declared support")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def uniform(value: float, support: tuple[float, float]) -> "RadialDensity":
        return RadialDensity(DensityForm.UNIFORM, support, coefficient=value)

    @staticmethod
    def power_law(coefficient: float, exponent: float,
                  support: tuple[float, float]) -> "RadialDensity":
        return RadialDensity(DensityForm.POWER_LAW, support,
                             coefficient=coefficient, exponent=exponent)

    @staticmethod
    def tabulated(grid, samples) -> "RadialDensity":
        grid = tuple(float(g) for g in grid)
        samples = tuple(float(s) for s in samples)
        return RadialDensity(DensityForm.TABULATED, (grid[0], grid[-1]),
                             grid=grid, samples=samples)

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _tab(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.grid, dtype=float),
                np.asarray(self.samples, dtype=float))

    def evaluate(self, r) -> np.ndarray:
        """Density value at radius r (vectorized); zero outside the support."""
        r = np.asarray(r, dtype=float)
        a, b = self.support
        inside = (r >= a) & (r <= b)
        if self.form is DensityForm.UNIFORM:
            out = np.where(inside, self.coefficient, 0.0)
        elif self.form is DensityForm.POWER_LAW:
            rr = np.where(inside, r, 1.0)  # keep 0**negative out of the power
            out = np.where(inside, self.coefficient * rr ** self.exponent, 0.0)
        else:
            g, v = self._tab
            out = np.where(inside, np.interp(r, g, v), 0.0)
        return out if out.shape else float(out)

    def cumulative_moment(self, r, n: int) -> np.ndarray:
        """Exact integral of f(rho) rho^(n-1) from the support start up to r.

        Clipped to the support, so values saturate at the total moment for
        r beyond it and vanish for r below it.
        """
        if n < 1:
            raise GeometryError(f"moment dimension must be >= 1, got {n}")
        r = np.asarray(r, dtype=float)
        a, b = self.support
        rc = np.clip(r, a, b)
        if self.form is DensityForm.UNIFORM:
            out = self.coefficient * (rc ** n - a ** n) / n
        elif self.form is DensityForm.POWER_LAW:
            k = self.exponent + n
            if abs(k) < 1e-14:
                if a == 0:
                    raise GeometryError("moment of power-law density diverges at 0")
                out = self.coefficient * np.log(rc / a)
            else:
                out = self.coefficient * (rc ** k - a ** k) / k
        else:
            g, v = self._tab
            # piecewise-linear f integrates exactly against rho^(n-1):
            # on [g_i, g_i+1] with f = alpha + beta rho the primitive is
            # alpha rho^n / n + beta rho^(n+1) / (n+1).  Each power
            # difference x1^k - x0^k is factored through (x1 - x0) so a
            # partial cell with nearby endpoints is resolved at the
            # increment's precision, not the primitive's.
            beta = np.diff(v) / np.diff(g)
            alpha = v[:-1] - beta * g[:-1]

            def piece(x0, x1, i):
                pn = sum(x1 ** k * x0 ** (n - 1 - k) for k in range(n)) / n
                pn1 = sum(x1 ** k * x0 ** (n - k) for k in range(n + 1)) / (n + 1)
                return (x1 - x0) * (alpha[i] * pn + beta[i] * pn1)

            cells = np.arange(g.size - 1)
            cum = np.concatenate([[0.0], np.cumsum(piece(g[:-1], g[1:], cells))])
            idx = np.clip(np.searchsorted(g, rc, side="right") - 1, 0, g.size - 2)
            out = cum[idx] + piece(g[idx], rc, idx)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"cumulative moment not finite on [{a}, {b}]")
        return out if out.shape else float(out)

    def total_moment(self, n: int) -> float:
        return float(self.cumulative_moment(self.support[1], n))


@dataclass(frozen=True)
class ProblemCase:
    """One transfer instance: geometry kind, dimension, radii, densities.

    Immutable after construction; validation happens here so that the
    downstream modules can assume a coherent case.
    """

    kind: CaseKind
    n: int
    r1: float
    r2: float
    f_plus: RadialDensity
    f_minus: RadialDensity

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GeometryError(f"dimension must be an integer >= 2, got {self.n!r}")
        if not (np.isfinite(self.r1) and np.isfinite(self.r2)) or self.r1 <= 0 or self.r2 <= 0:
            raise GeometryError(f"radii must be positive, got R1={self.r1}, R2={self.r2}")
        if self.kind is CaseKind.ANNULUS_OUTER_SOURCE and not self.r1 > self.r2:
            raise GeometryError("outer-source annulus needs R1 > R2")
        if self.kind is CaseKind.ANNULUS_INNER_SOURCE and not self.r2 > self.r1:
            raise GeometryError("inner-source annulus needs R2 > R1")
        expected = {
            Side.SOURCE: self._expected_support(Side.SOURCE),
            Side.SINK: self._expected_support(Side.SINK),
        }
        for side, want in expected.items():
            got = self.density(side).support
            if abs(got[0] - want[0]) > 1e-12 or abs(got[1] - want[1]) > 1e-12:
                raise GeometryError(
                    f"{side.value} density support {got} does not match the "
                    f"working interval {want} of a {self.kind.value} case"
                )
        # spot-check values on a fixed probe grid: finite and nonnegative
        for side in (Side.SOURCE, Side.SINK):
            a, b = self.density(side).support
            probe = np.linspace(a, b, 1024)
            vals = self.density(side).evaluate(probe)
            if not np.all(np.isfinite(vals)) or np.any(vals < 0):
                raise UsageError(f"{side.value} density must be finite and >= 0")

    def _expected_support(self, side: Side) -> tuple[float, float]:
        if self.kind is CaseKind.ANNULUS_OUTER_SOURCE:
            return (self.r2, self.r1) if side is Side.SOURCE else (0.0, self.r2)
        if self.kind is CaseKind.ANNULUS_INNER_SOURCE:
            return (0.0, self.r1) if side is Side.SOURCE else (self.r1, self.r2)
        return (0.0, self.r1) if side is Side.SOURCE else (0.0, self.r2)

    # -- navigation helpers used by every downstream module ------------------

    def sides(self) -> tuple[Side, ...]:
        """Sides that carry computation (the annulus cases have one)."""
        if self.kind is CaseKind.ANNULUS_OUTER_SOURCE:
            return (Side.SOURCE,)
        if self.kind is CaseKind.ANNULUS_INNER_SOURCE:
            return (Side.SINK,)
        return (Side.SOURCE, Side.SINK)

    def density(self, side: Side) -> RadialDensity:
        return self.f_plus if side is Side.SOURCE else self.f_minus

    def density_sign(self, side: Side) -> float:
        """Sign with which the side's density enters f = f_plus - f_minus."""
        return 1.0 if side is Side.SOURCE else -1.0

    def interval(self, side: Side) -> tuple[float, float]:
        """Working radial interval of the side's potential and flux."""
        if side not in self.sides():
            raise UsageError(f"{side.value} side carries no computation for {self.kind.value}")
        return self._expected_support(side)

    def anchor(self, side: Side) -> float:
        """Radius where the side's potential is pinned to zero by construction.

        Disjoint balls pin at the outer boundary; annuli pin at the edge
        shared with the inner ball (the potential also vanishes at the far
        edge, but that zero is enforced through the flux constant).
        """
        a, b = self.interval(side)
        if self.kind is CaseKind.DISJOINT_BALLS:
            return b
        return a

    @property
    def is_annulus(self) -> bool:
        return self.kind is not CaseKind.DISJOINT_BALLS


@dataclass(frozen=True)
class BalanceReport:
    """Masses of both densities over their working supports."""

    mass_plus: float
    mass_minus: float
    normalized: bool


def check_balance(case: ProblemCase, tol: float = BALANCE_TOL) -> BalanceReport:
    """Integrate both densities over their declared supports and compare to 1."""
    omega = surface_constant(case.n)
    mp = omega * case.f_plus.total_moment(case.n)
    mm = omega * case.f_minus.total_moment(case.n)
    if not (np.isfinite(mp) and np.isfinite(mm)):
        raise NumericError(
            f"mass integral failed on supports {case.f_plus.support}, {case.f_minus.support}"
        )
    ok = abs(mp - 1.0) <= tol and abs(mm - 1.0) <= tol
    return BalanceReport(mass_plus=mp, mass_minus=mm, normalized=ok)


def make_uniform_case(kind: CaseKind, n: int, r1: float, r2: float) -> ProblemCase:
    """Unit-mass constant densities for the requested geometry.

    The constant is n / (omega_n * (b^n - a^n)) on each working support
    [a, b], which makes both masses exactly one.
    """
    omega = surface_constant(n)

    def const(a: float, b: float) -> float:
        return n / (omega * (b ** n - a ** n))

    if kind is CaseKind.DISJOINT_BALLS:
        fp = RadialDensity.uniform(const(0.0, r1), (0.0, r1))
        fm = RadialDensity.uniform(const(0.0, r2), (0.0, r2))
    elif kind is CaseKind.ANNULUS_OUTER_SOURCE:
        if not r1 > r2:
            raise GeometryError("outer-source annulus needs R1 > R2")
        fp = RadialDensity.uniform(const(r2, r1), (r2, r1))
        fm = RadialDensity.uniform(const(0.0, r2), (0.0, r2))
    elif kind is CaseKind.ANNULUS_INNER_SOURCE:
        if not r2 > r1:
            raise GeometryError("inner-source annulus needs R2 > R1")
        fp = RadialDensity.uniform(const(0.0, r1), (0.0, r1))
        fm = RadialDensity.uniform(const(r1, r2), (r1, r2))
    else:  # pragma: no cover - enum is closed
        raise UsageError(f"unknown case kind {kind!r}")
    return ProblemCase(kind=kind, n=n, r1=r1, r2=r2, f_plus=fp, f_minus=fm)
