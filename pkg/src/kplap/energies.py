"""Energy functionals and duality diagnostics for reconstructed potentials.

Three values are chained together for a critical pair (u, zeta):

* the primal energy  I_p  = int (|u'|^p / p - u f) dmu,
* the total complementary energy  Xi = int (u'^2 zeta - psi*(zeta) - u f) dmu,
* the pure dual energy I_d = -int (theta^2 / (4 zeta) + psi*(zeta)) dmu,

all against the radial measure dmu = omega_n r^(n-1) dr, with f entering
positively on source intervals and negatively on sink intervals.  At the
critical pair generated by one flux field the three numbers coincide up
to quadrature; the relative gap between I_p and I_d is the headline
verification scalar.

Second variations probe the extremal character: the primal one,
int (|u'|^(p-2) |phi'|^2 + (p-2) |u'|^(p-4) (u' phi')^2) dmu, is positive
for admissible directions phi, and the dual one,
-int psi^2 (theta^2 / (2 zeta^3) + 2^(p/(p-2)) zeta^((4-p)/(p-2)) / (p-2)) dmu,
is negative wherever zeta > 0.  Near flux zeros the dual integrand is
singular, so a fixed neighborhood of each zero is excluded and reported.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .canonical_duality import conjugate_energy
from .errors import UsageError
from .flux_field import FluxField, case_fluxes
from .numerics import QuadratureSpec, integrate_samples
from .potential import RadialPotential, SideTag, build_potential, signed_density
from .radial_model import ProblemCase, surface_constant


@dataclass(frozen=True)
class EnergyReport:
    """All scalar diagnostics of one (case, p) evaluation."""

    p: float
    kantorovich: float
    primal: float
    complementary: float
    dual: float
    gap_abs: float
    gap_rel: float
    second_var_primal_min: float
    second_var_dual_max: float


def _as_tuple(pots) -> tuple:
    if isinstance(pots, (RadialPotential, FluxField)):
        return (pots,)
    return tuple(pots)


def _radial_quad(y: np.ndarray, r: np.ndarray, n: int) -> float:
    return integrate_samples(y * r ** (n - 1), r) * surface_constant(n)


# ---------------------------------------------------------------------------
# the three chained energies
# ---------------------------------------------------------------------------


def kantorovich_value(pots, case: ProblemCase) -> float:
    """Transfer pairing K = int u (f_plus - f_minus) dmu over the given sides."""
    total = 0.0
    for pot in _as_tuple(pots):
        dens, sign = signed_density(case, pot.side_tag)
        f = sign * dens.evaluate(pot.grid)
        total += _radial_quad(pot.values * f, pot.grid, case.n)
    return float(total)


def _primal_integral(grid, values, derivative, dens, sign, n, p) -> float:
    f = sign * dens.evaluate(grid)
    y = np.abs(derivative) ** p / p - values * f
    return _radial_quad(y, grid, n)


def primal_energy(pots, case: ProblemCase, p: float) -> float:
    """I_p of the sampled potential(s): gradient term minus the pairing."""
    total = 0.0
    for pot in _as_tuple(pots):
        dens, sign = signed_density(case, pot.side_tag)
        total += _primal_integral(pot.grid, pot.values, pot.derivative,
                                  dens, sign, case.n, p)
    return float(total)


def primal_energy_samples(grid, values, derivative, case: ProblemCase,
                          tag: SideTag, p: float) -> float:
    """One side's primal energy for arbitrary sampled (values, derivative).

    The perturbation probes use this to evaluate I_p at u + eps*phi
    without constructing a potential object around the perturbed data.
    """
    dens, sign = signed_density(case, tag)
    return float(_primal_integral(np.asarray(grid, dtype=float),
                                  np.asarray(values, dtype=float),
                                  np.asarray(derivative, dtype=float),
                                  dens, sign, case.n, p))


def zeta_field(flux: FluxField, grid: np.ndarray, p: float) -> np.ndarray:
    """Critical multiplier half along ``grid``: |theta_r|^((p-2)/(p-1)) / 2."""
    theta = np.asarray(flux.theta_radial(grid), dtype=float)
    return 0.5 * np.abs(theta) ** ((p - 2.0) / (p - 1.0))


def dual_energy_density(theta_sq: float, p: float) -> float:
    """Pointwise integrand theta^2/(4 zeta) + psi*(zeta) at the critical zeta.

    Vanishing flux contributes nothing; that limit is taken explicitly.
    """
    y = float(theta_sq)
    if y == 0.0:
        return 0.0
    lam = y ** ((p - 2.0) / (2.0 * p - 2.0))
    zeta = 0.5 * lam
    return y / (4.0 * zeta) + float(conjugate_energy(zeta, p))


def dual_energy(fluxes, p: float, case: ProblemCase,
                grid_size: int = 4096) -> float:
    """Pure dual energy I_d evaluated on uniform grids of the flux intervals."""
    total = 0.0
    for flux in _as_tuple(fluxes):
        a, b = flux.interval
        grid = np.linspace(a, b, grid_size + 1)
        theta = np.asarray(flux.theta_radial(grid), dtype=float)
        y = theta * theta
        zeta = zeta_field(flux, grid, p)
        if np.any((zeta == 0.0) & (np.abs(theta) > 1e-150)):
            raise UsageError("inconsistent critical pair: zeta = 0 under nonzero flux")
        dens = np.zeros_like(y)
        pos = zeta > 0.0
        dens[pos] = y[pos] / (4.0 * zeta[pos]) + conjugate_energy(zeta[pos], p)
        total -= _radial_quad(dens, grid, case.n)
    return float(total)


def total_complementary_energy(pots, zetas, case: ProblemCase, p: float) -> float:
    """Xi(u, zeta) = int (u'^2 zeta - psi*(zeta) - u f) dmu.

    ``zetas`` are multiplier-half arrays aligned with each potential's
    grid; passing the critical ones reproduces I_p up to quadrature,
    while any admissible perturbation can only lower the value.
    """
    pots = _as_tuple(pots)
    if isinstance(zetas, np.ndarray):
        zetas = (zetas,)
    else:
        zetas = tuple(zetas)
    if len(pots) != len(zetas):
        raise UsageError("need one zeta array per potential")
    total = 0.0
    for pot, z in zip(pots, zetas):
        z = np.asarray(z, dtype=float)
        if z.shape != pot.grid.shape:
            raise UsageError("zeta array does not match the potential grid")
        dens, sign = signed_density(case, pot.side_tag)
        f = sign * dens.evaluate(pot.grid)
        y = pot.derivative ** 2 * z - conjugate_energy(z, p) - pot.values * f
        total += _radial_quad(y, pot.grid, case.n)
    return float(total)


# ---------------------------------------------------------------------------
# test directions for the second variations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """A perturbation direction sampled with its exact derivative."""

    __test__ = False  # calculus-of-variations name, not a pytest class

    kind: str
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray


def _normalize(kind, grid, vals, deriv, n) -> TestFunction:
    norm_sq = _radial_quad(deriv ** 2 + vals ** 2, grid, n)
    scale = 1.0 / np.sqrt(norm_sq) if norm_sq > 0 else 1.0
    return TestFunction(kind=kind, grid=grid,
                        values=vals * scale, derivative=deriv * scale)


def smooth_bump(grid: np.ndarray, n: int) -> TestFunction:
    """Half-sine bump, zero at both ends, unit discrete energy norm."""
    a, b = float(grid[0]), float(grid[-1])
    s = (grid - a) / (b - a)
    vals = np.sin(np.pi * s)
    deriv = np.pi / (b - a) * np.cos(np.pi * s)
    return _normalize("smooth_bump", grid, vals, deriv, n)


def random_fourier(grid: np.ndarray, n: int, seed: int, modes: int = 8) -> TestFunction:
    """Seeded random sine series with 1/k coefficient decay.

    Vanishes at both endpoints by construction; the derivative is the
    exact termwise derivative, not a finite difference.
    """
    if modes < 1:
        raise UsageError(f"need at least one mode, got {modes}")
    a, b = float(grid[0]), float(grid[-1])
    s = (grid - a) / (b - a)
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal(modes) / np.arange(1, modes + 1)
    vals = np.zeros_like(grid)
    deriv = np.zeros_like(grid)
    for k, c in enumerate(coef, start=1):
        vals += c * np.sin(k * np.pi * s)
        deriv += c * k * np.pi / (b - a) * np.cos(k * np.pi * s)
    return _normalize("random_fourier", grid, vals, deriv, n)


def _check_direction(pot_grid: np.ndarray, fn: TestFunction) -> None:
    if fn.grid.shape != pot_grid.shape or not np.allclose(fn.grid, pot_grid):
        raise UsageError("test direction lives on a different grid")
    scale = max(1.0, float(np.max(np.abs(fn.values))))
    if abs(fn.values[0]) > 1e-12 * scale or abs(fn.values[-1]) > 1e-12 * scale:
        raise UsageError("test direction must vanish at both interval ends")


def second_variation_primal(pot: RadialPotential, fn: TestFunction,
                            case: ProblemCase, p: float) -> float:
    """Quadratic form int (|u'|^(p-2) phi'^2 + (p-2) |u'|^(p-4) (u' phi')^2) dmu.

    Where u' = 0 the second term's limit is zero for p > 2 and is taken
    explicitly so exponents below 4 do not trip on negative powers of 0.
    """
    _check_direction(pot.grid, fn)
    mag = np.abs(pot.derivative)
    t1 = mag ** (p - 2.0) * fn.derivative ** 2
    t2 = np.zeros_like(t1)
    pos = mag > 0.0
    t2[pos] = (p - 2.0) * mag[pos] ** (p - 4.0) * (pot.derivative[pos] * fn.derivative[pos]) ** 2
    return _radial_quad(t1 + t2, pot.grid, case.n)


def second_variation_dual(flux: FluxField, fn: TestFunction,
                          case: ProblemCase, p: float) -> float:
    """Dual quadratic form; strictly negative on directions seen by zeta > 0.

    Three grid cells around each flux zero (and the origin) are masked
    out: the integrand grows without bound there for p > 4 and the form
    is defined on the positive-multiplier region anyway.  A direction
    supported entirely inside the mask triggers a warning and returns 0.
    """
    if not np.any(fn.values != 0.0):
        raise UsageError("test direction is identically zero")
    grid = fn.grid
    theta = np.asarray(flux.theta_radial(grid), dtype=float)
    zeta = zeta_field(flux, grid, p)

    mask = zeta <= 0.0
    h = grid[1] - grid[0]
    for c in flux.singular_radii():
        mask |= np.abs(grid - c) <= 3.0 * h
    kept = ~mask
    if not np.any(fn.values[kept] != 0.0):
        warnings.warn("direction is supported only where the multiplier "
                      "degenerates; dual form is 0 there", UserWarning, stacklevel=2)
        return 0.0
    y = np.zeros_like(grid)
    z = zeta[kept]
    y[kept] = fn.values[kept] ** 2 * (
        theta[kept] ** 2 / (2.0 * z ** 3)
        + 2.0 ** (p / (p - 2.0)) / (p - 2.0) * z ** ((4.0 - p) / (p - 2.0))
    )
    return -_radial_quad(y, grid, case.n)


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def critical_pair(case: ProblemCase, p: float, grid_size: int = 4096,
                  quad: QuadratureSpec | None = None,
                  tol: float = 1e-12) -> tuple[tuple[FluxField, RadialPotential], ...]:
    """Flux and reconstructed potential for every side of ``case``."""
    fluxes = case_fluxes(case, p, quad=quad, tol=tol)
    return tuple((fl, build_potential(fl, p, grid_size=grid_size)) for fl in fluxes)


def energy_report(case: ProblemCase, p: float, grid_size: int = 4096,
                  quad: QuadratureSpec | None = None,
                  probes: int = 16, seed: int = 20210,
                  pairs=None) -> EnergyReport:
    """Evaluate the full duality chain plus second-variation scans.

    The scan takes the smooth bump plus ``probes`` seeded Fourier draws
    per side and records the worst case of each sign (minimum primal,
    maximum dual), so a single nonnegative dual value or nonpositive
    primal value is immediately visible in the report.  Callers that
    already built the critical pairs can pass them in unchanged.
    """
    if pairs is None:
        pairs = critical_pair(case, p, grid_size=grid_size, quad=quad)
    pots = tuple(pot for _, pot in pairs)
    fluxes = tuple(fl for fl, _ in pairs)

    k = kantorovich_value(pots, case)
    ip = primal_energy(pots, case, p)
    idual = dual_energy(fluxes, p, case, grid_size=grid_size)
    zetas = tuple(zeta_field(fl, pot.grid, p) for fl, pot in pairs)
    xi = total_complementary_energy(pots, zetas, case, p)

    sv_p = np.inf
    sv_d = -np.inf
    for fl, pot in pairs:
        fns = [smooth_bump(pot.grid, case.n)]
        fns += [random_fourier(pot.grid, case.n, seed=seed + 7 * i, modes=8)
                for i in range(probes)]
        for fn in fns:
            sv_p = min(sv_p, second_variation_primal(pot, fn, case, p))
            sv_d = max(sv_d, second_variation_dual(fl, fn, case, p))

    gap = abs(ip - idual)
    return EnergyReport(
        p=float(p), kantorovich=k, primal=ip, complementary=xi, dual=idual,
        gap_abs=gap, gap_rel=gap / max(1.0, abs(ip)),
        second_var_primal_min=float(sv_p), second_var_dual_max=float(sv_d),
    )
