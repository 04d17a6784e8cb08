"""Analytic transfer potentials on radial geometries, with duality checks.

The pipeline: describe a source/sink geometry (`radial_model`), build the
radial flux field it forces (`flux_field`), convert flux into a potential
through the closed-form dual algebra (`canonical_duality`, `potential`),
and chain the primal, complementary and dual energies (`energies`).  An
independent discretized minimizer (`direct_minimization`) and a large-p
sweep (`sweep`) cross-check the construction; `cli` drives it all.
"""

from .canonical_duality import (DualityScalars, canonical_energy,
                                conjugate_energy, flux_sq_from_multiplier,
                                multiplier_from_flux_sq, solve_dae)
from .direct_minimization import (DiscreteProblem, MinimizeResult, discretize,
                                  gradient_check, minimize_energy, solve_side)
from .energies import (EnergyReport, TestFunction, critical_pair, dual_energy,
                       dual_energy_density, energy_report, kantorovich_value,
                       primal_energy, primal_energy_samples, random_fourier,
                       second_variation_dual,
                       second_variation_primal, smooth_bump,
                       total_complementary_energy, zeta_field)
from .errors import (AdmissibilityWarning, BalanceError, BracketError,
                     ConfigError, ConvergenceError, DomainError, GeometryError,
                     KplapError, MonotonicityWarning, NumericError, UsageError)
from .flux_field import (CumulativeProfile, FluxField, boundary_mismatch,
                         case_fluxes, cumulative_profile, flux_annulus,
                         flux_disjoint_sink, flux_disjoint_source,
                         solve_constant_annulus)
from .numerics import (BracketSpec, QuadratureSpec, Scheme,
                       cumulative_panel_simpson, find_root_monotone,
                       graded_nodes, integrate, integrate_samples,
                       refine_panels)
from .potential import (ELResidualReport, RadialPotential, SideTag,
                        admissibility_report, build_potential, el_residual,
                        grid_table, signed_density)
from .radial_model import (BalanceReport, CaseKind, DensityForm, ProblemCase,
                           RadialDensity, Side, check_balance,
                           make_uniform_case, surface_constant)
from .sweep import (SideTrace, SweepResult, kantorovich_limit_value,
                    limit_potential, run_sweep)

__version__ = "0.1.0"
