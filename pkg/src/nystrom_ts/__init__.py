"""Nystrom-regularized kernel regression for nonlinear autoregressive series."""

from .errors import (ConfigError, DataError, DegenerateInputError, InvalidArgumentError,
                     NumericalError, NystromTSError, StorageError, UnsupportedKernelError)
from .estimator import (EmbeddedDataset, NystromModel, fit_krr, fit_nystrom, fit_nystrom_path,
                        load_model, objective, predict, residuals, save_model)
from .experiments import (EvalProtocol, IIDDesign, Mechanism, REFERENCE_GRIDS, cross_validate,
                          lambda_grid, noise_extraction, noise_report, one_step_eval,
                          placement_study, ratio_sweep, rmse, scaling_sweep, spectrum_compare)
from .kernels import KernelSpec, eval_kernel, gram
from .linalg import Spectrum, effective_rank, pinv_solve, sym_eig
from .sampling import SubsampleSpec, resolve
from .seeding import derive_seed, make_rng
from .timeseries import (GeneratedSeries, NoiseSpec, Series, acf, embed, gen_m1, gen_m2,
                         gen_nar, register_map)

__version__ = "0.1.0"
