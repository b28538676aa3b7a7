"""Mean-field games of optimal stopping: equilibrium solver and population simulator."""
from ._validation import ContractViolation, NonMonotoneBranch
from .agent import AgentProblem, default_time, optimality_check, payoff, stopping_time
from .distributions import (TimeIndexedCdf, cdf_from_table, load_cdf_csv, three_mass_family,
                            uniform_shifted_family)
from .equilibrium import (EquilibriumCurve, SolutionSet, build_curve, randomized_switch, solve_all,
                          uniqueness_diagnostic)
from .estimators import MeanFieldStoppingEquilibrium
from .model import (IntensityModel, MonotonePath, RateFunction, additive_model, check_integrability,
                    constant_rate, path_from_function)
from .population import (PopulationConfig, PopulationResult, fixed_point_residual, payoff_audit, simulate,
                         sunspot_game)

__version__ = "0.1.0"
