from .ao import AoState, MonotonicityError, alternate, run_ao
from .baselines import HybridResult, hybrid_ad_optimize
from .objective import (Link, dbm_to_watt, fully_digital_rate, mse_matrix, sum_rate, update_M, update_W,
                        wmmse_rate)
from .quadratic import QuadraticForm, build_quadratic, build_quadratic_full
from .solvers import (MMResult, SolverOptions, max_eigenvalue, power_iteration, solve_ao_box, solve_ba_greedy,
                      solve_lp_mm, solve_uc, solve_unit_modulus_mm)
