"""Pointwise algebra of the canonical dual transformation for p-growth energy.

The primal energy density is psi(xi) = xi^(p/2) / p with xi = |grad w|^2.
Its canonical derivative zeta = psi'(xi) = xi^((p-2)/2) / 2 plays the role
of a pointwise multiplier; lambda = 2 zeta recovers |grad w|^(p-2).  The
Legendre conjugate of psi in the xi variable is

    psi*(zeta) = (1 - 2/p) * 2^(2/(p-2)) * zeta^(p/(p-2)),

and the flux theta = |grad w|^(p-2) grad w satisfies the scalar dual
algebraic relation |theta|^2 = lambda^((2p-2)/(p-2)).  Everything in this
module is that scalar bookkeeping; no geometry enters.

Inputs are admissible when xi, lambda stay in [0, 1] and zeta in [0, 1/2],
the ranges carved out by the unit gradient bound.  A squared flux above
one is reported with a warning rather than an error because the callers
use it as a diagnostic, not as a hard wall.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityWarning, DomainError

#: Exponents p at or below 2 + P_GAP are rejected: every dual exponent in
#: this module carries a 1/(p-2) and degenerates in that limit.
P_GAP = 1e-6


def _check_p(p: float) -> float:
    p = float(p)
    if not np.isfinite(p) or p <= 2.0 + P_GAP:
        raise DomainError(f"exponent must satisfy p > 2 + {P_GAP}, got {p}")
    return p


@dataclass(frozen=True)
class DualityScalars:
    """One pointwise critical tuple (xi, zeta, lambda) at exponent p."""

    p: float
    xi: float
    zeta: float
    lam: float
    admissible: bool = True


def flux_sq_from_multiplier(lam, p: float):
    """Squared flux magnitude produced by a multiplier: lam^((2p-2)/(p-2)).

    Strictly increasing on [0, 1], fixing 0 and 1.
    """
    p = _check_p(p)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0.0) or np.any(lam_arr > 1.0) or not np.all(np.isfinite(lam_arr)):
        raise DomainError(f"multiplier must lie in [0, 1], got {lam!r}")
    out = lam_arr ** ((2.0 * p - 2.0) / (p - 2.0))
    return out if out.shape else float(out)


def multiplier_from_flux_sq(theta_sq, p: float):
    """Inverse map: multiplier y^((p-2)/(2p-2)) for squared flux y >= 0.

    Values above one are admissibility violations of the unit gradient
    bound; they are propagated with a warning so diagnostics can continue.
    """
    p = _check_p(p)
    y = np.asarray(theta_sq, dtype=float)
    if np.any(y < 0.0) or not np.all(np.isfinite(y)):
        raise DomainError(f"squared flux must be finite and >= 0, got {theta_sq!r}")
    if np.any(y > 1.0):
        warnings.warn(
            "squared flux exceeds 1; the reconstructed gradient violates the "
            "unit bound", AdmissibilityWarning, stacklevel=2)
    out = y ** ((p - 2.0) / (2.0 * p - 2.0))
    return out if out.shape else float(out)


def solve_dae(theta_sq: float, p: float) -> DualityScalars:
    """Solve the dual algebraic relation for one squared flux magnitude.

    Returns the full critical tuple: lambda = theta_sq^((p-2)/(2p-2)),
    zeta = lambda / 2 and xi = theta_sq^(1/(p-1)) (equivalently
    lambda^(2/(p-2))).  theta_sq > 1 flags the result as inadmissible.
    """
    p = _check_p(p)
    y = float(theta_sq)
    if not np.isfinite(y) or y < 0.0:
        raise DomainError(f"squared flux must be finite and >= 0, got {theta_sq!r}")
    admissible = y <= 1.0 + 1e-12
    if not admissible:
        warnings.warn("squared flux exceeds 1; critical tuple is inadmissible",
                      AdmissibilityWarning, stacklevel=2)
    lam = y ** ((p - 2.0) / (2.0 * p - 2.0))
    xi = y ** (1.0 / (p - 1.0))
    return DualityScalars(p=p, xi=xi, zeta=0.5 * lam, lam=lam, admissible=admissible)


def canonical_energy(xi, p: float):
    """Primal energy density psi(xi) = xi^(p/2) / p on xi in [0, 1]."""
    p = _check_p(p)
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise DomainError(f"gradient square must lie in [0, 1], got {xi!r}")
    out = x ** (p / 2.0) / p
    return out if out.shape else float(out)


def conjugate_energy(zeta, p: float):
    """Legendre conjugate psi*(zeta) = (1 - 2/p) 2^(2/(p-2)) zeta^(p/(p-2)).

    Defined on zeta in [0, 1/2]; together with ``canonical_energy`` it
    satisfies psi(xi) + psi*(zeta(xi)) = xi * zeta(xi) exactly.
    """
    p = _check_p(p)
    z = np.asarray(zeta, dtype=float)
    if np.any(z < 0.0) or np.any(z > 0.5 + 1e-12) or not np.all(np.isfinite(z)):
        raise DomainError(f"multiplier half must lie in [0, 1/2], got {zeta!r}")
    out = (1.0 - 2.0 / p) * 2.0 ** (2.0 / (p - 2.0)) * z ** (p / (p - 2.0))
    return out if out.shape else float(out)
