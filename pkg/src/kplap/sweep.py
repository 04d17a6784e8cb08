"""Exponent sweeps: drive p upward and watch the transfer limit emerge.

As p grows the reconstructed potentials approach a 1-Lipschitz limit
profile whose slope magnitude is 1 wherever flux moves: a cone ``b - r``
on a ball side, a tent peaked at the interval midpoint on an annulus
side (assuming strictly positive density there).  The sweep evaluates
every requested exponent on one shared grid per side so that sup-norm
Cauchy increments, distances to the limit profile, and gradient values
at fixed probe radii are directly comparable across p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energies import EnergyReport, critical_pair, energy_report
from .errors import UsageError
from .flux_field import cumulative_profile
from .numerics import QuadratureSpec, integrate
from .radial_model import CaseKind, ProblemCase, Side, surface_constant


def _zero_moment_edge(case: ProblemCase, side: Side) -> float:
    """Largest radius below which the side's density carries no mass."""
    dens = case.density(side)
    a, b = case.interval(side)
    if dens.cumulative_moment(a + 1e-9 * (b - a), case.n) > 0.0:
        return a
    lo, hi = a, b
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dens.cumulative_moment(mid, case.n) > 0.0:
            hi = mid
        else:
            lo = mid
    return lo


def limit_potential(case: ProblemCase, side: Side, grid: np.ndarray) -> np.ndarray:
    """Large-p limit profile on ``grid``.

    Ball sides flatten across any initial mass-free segment and then
    descend (source) or ascend (sink) with unit slope to zero at the
    rim.  Annulus sides, for densities positive on the open interval,
    form a tent anchored at both edges with the kink at the midpoint.
    """
    a, b = case.interval(side)
    sign = case.density_sign(side)
    grid = np.asarray(grid, dtype=float)
    if case.kind is CaseKind.DISJOINT_BALLS:
        edge = _zero_moment_edge(case, side)
        return sign * (b - np.maximum(grid, edge))
    return sign * np.minimum(grid - a, b - grid)


def kantorovich_limit_value(case: ProblemCase,
                            quad: QuadratureSpec | None = None) -> float:
    """Transfer pairing of the limit profile against the signed density.

    Integrated side by side, split at the profile's kink so the
    quadrature only ever sees smooth integrands.
    """
    quad = quad or QuadratureSpec()
    omega = surface_constant(case.n)
    total = 0.0
    for side in case.sides():
        a, b = case.interval(side)
        sign = case.density_sign(side)
        dens = case.density(side)
        if case.kind is CaseKind.DISJOINT_BALLS:
            kink = _zero_moment_edge(case, side)
        else:
            kink = 0.5 * (a + b)

        def integrand(r, _side=side):
            u = limit_potential(case, _side, r)
            return u * sign * dens.evaluate(r) * omega * r ** (case.n - 1)

        if a < kink < b:
            total += integrate(integrand, a, kink, quad)
            total += integrate(integrand, kink, b, quad)
        else:
            total += integrate(integrand, a, b, quad)
    return float(total)


@dataclass(frozen=True)
class SideTrace:
    """Per-side sweep record on one shared grid."""

    side: Side
    grid: np.ndarray
    potentials: np.ndarray        # shape (num_p, grid.size)
    limit_values: np.ndarray
    probe_radii: np.ndarray
    probe_gradients: np.ndarray   # shape (num_p, num_probes), |u'| at the probes
    constants: np.ndarray         # flux constant per p (root-solved on annuli)
    constant_limit: float         # large-p limit of the constant


@dataclass(frozen=True)
class SweepResult:
    p_values: tuple[float, ...]
    reports: tuple[EnergyReport, ...]
    kantorovich: np.ndarray
    primal: np.ndarray
    dual: np.ndarray
    gap_abs: np.ndarray
    sup_gradient: np.ndarray      # max over sides, per p
    grad_gap: np.ndarray          # max over sides/probes of |1 - |u'||, per p
    limit_sup: np.ndarray         # max over sides of sup|u_p - u_inf|, per p
    cauchy_sup: np.ndarray        # length num_p - 1
    kantorovich_limit: float
    sides: tuple[SideTrace, ...]


def run_sweep(case: ProblemCase, p_values, grid_size: int = 4096,
              quad: QuadratureSpec | None = None, num_probes: int = 8,
              probe_margin: float = 0.1, workers: int = 1) -> SweepResult:
    """Evaluate the full pipeline at each exponent on shared grids.

    ``probe_margin`` keeps the gradient probes away from interval ends
    (where limit kinks and anchors live) by that fraction of the length
    on each side.  Exponents are independent of each other, so with
    ``workers`` > 1 they are evaluated on a thread pool; results are
    written into per-p slots, making the output independent of the
    completion order.
    """
    p_list = tuple(float(p) for p in p_values)
    if len(p_list) == 0:
        raise UsageError("need at least one exponent")
    if any(p <= 2.0 for p in p_list):
        raise UsageError("every exponent must exceed 2")
    if any(q <= p for p, q in zip(p_list, p_list[1:])):
        raise UsageError("exponents must be strictly increasing")
    if not 0.0 < probe_margin < 0.5:
        raise UsageError(f"probe margin must be in (0, 0.5), got {probe_margin}")

    sides = case.sides()
    grids = {}
    probes = {}
    for side in sides:
        a, b = case.interval(side)
        grids[side] = np.linspace(a, b, grid_size + 1)
        lo = a + probe_margin * (b - a)
        hi = b - probe_margin * (b - a)
        probes[side] = np.linspace(lo, hi, num_probes)

    num_p = len(p_list)
    pots_by_side = {side: np.empty((num_p, grids[side].size)) for side in sides}
    probe_grad = {side: np.empty((num_p, num_probes)) for side in sides}
    consts = {side: np.empty(num_p) for side in sides}
    reports: list[EnergyReport | None] = [None] * num_p
    sup_grad = np.empty(num_p)

    def _evaluate(i: int) -> None:
        p = p_list[i]
        pairs = critical_pair(case, p, grid_size=grid_size, quad=quad)
        reports[i] = energy_report(case, p, grid_size=grid_size, quad=quad,
                                   pairs=pairs)
        sup_grad[i] = max(pot.sup_gradient for _, pot in pairs)
        for fl, pot in pairs:
            pots_by_side[fl.side][i] = pot.values
            probe_grad[fl.side][i] = np.abs(fl.potential_slope(probes[fl.side], p))
            consts[fl.side][i] = fl.constant

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_evaluate, range(num_p)))
    else:
        for i in range(num_p):
            _evaluate(i)

    kant = np.array([rep.kantorovich for rep in reports])
    primal = np.array([rep.primal for rep in reports])
    dual = np.array([rep.dual for rep in reports])

    traces = []
    limit_sup = np.zeros(num_p)
    cauchy = np.zeros(max(num_p - 1, 0))
    for side in sides:
        lim = limit_potential(case, side, grids[side])
        mat = pots_by_side[side]
        if case.is_annulus:
            prof = cumulative_profile(case)
            a, b = case.interval(side)
            const_limit = float(prof(0.5 * (a + b)))
        else:
            const_limit = float(consts[side][-1])
        traces.append(SideTrace(side=side, grid=grids[side], potentials=mat,
                                limit_values=lim, probe_radii=probes[side],
                                probe_gradients=probe_grad[side],
                                constants=consts[side], constant_limit=const_limit))
        limit_sup = np.maximum(limit_sup, np.max(np.abs(mat - lim), axis=1))
        if num_p > 1:
            steps = np.max(np.abs(np.diff(mat, axis=0)), axis=1)
            cauchy = np.maximum(cauchy, steps)

    grad_gap = np.zeros(num_p)
    for side in sides:
        grad_gap = np.maximum(grad_gap,
                              np.max(np.abs(1.0 - probe_grad[side]), axis=1))

    return SweepResult(
        p_values=p_list, reports=tuple(reports),
        kantorovich=kant, primal=primal, dual=dual,
        gap_abs=np.abs(primal - dual), sup_gradient=sup_grad,
        grad_gap=grad_gap, limit_sup=limit_sup, cauchy_sup=cauchy,
        kantorovich_limit=kantorovich_limit_value(case, quad=quad),
        sides=tuple(traces),
    )
