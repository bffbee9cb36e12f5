"""Second-order Darboux transformations of one-dimensional Schrodinger operators on a grid."""

__version__ = "0.1.0"

from .potential import Grid, Potential, PotentialError, make_builtin_potential, read_potential_csv, tabulated_potential
from .ode import WaveFunction, integrate, wronskian
from .spectrum import Spectrum, SpectrumError, compute_spectrum
from .darboux import DarbouxError, DarbouxPair, apply_L, apply_L_adjoint, kernel_functions, second_order_transform
from .regularity import (
    ConstructionError,
    Selector,
    TransformSpec,
    build_transformation_function,
    construct_u_with_nodes,
    verify_wronskian_regularity,
)
from .susy import (
    completeness_check,
    factorization_residual,
    intertwining_residual,
    predict_outcome,
    verify_outcome,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .pipeline import run_pipeline, emit_plot_data
