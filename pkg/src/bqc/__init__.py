"""Integer zeros of quadratic and biquadratic forms: exact counts and predicted densities."""
from .errors import (BQCError, BudgetExceeded, ConfigError, NonConvergent, NotOnHypersurface,
                     NotStabilized, SchemaError, SingularForm)
from .forms import (BiquadraticForm, QuadraticForm, dual_form, load_form, save_form, slice_x,
                    slice_y, in_Z)
from .expsums import expsum, expsum_brute, gauss_sum, ramanujan, sigma_n_sum
from .padic import count_mod, joint_singular_series, local_density, singular_series
from .archimedean import (WeightFunction, joint_singular_integral, kernel_K,
                          predicted_main_term, sigma_infinity)
from .counting import (count_A, count_exceptional, count_Nx, count_NU, count_quadric_box,
                       count_quadric_weighted, count_tilde, thin_set_count)
from .experiments import ExperimentConfig, Report, run_experiment

__version__ = "0.1.0"
