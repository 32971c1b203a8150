"""Detectability of collapse-model noise in optomechanical force sensors."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CONSTANTS,
    CollapseParams,
    Geometry,
    Material,
    NumericalError,
    Oscillator,
    Readout,
    ValidationError,
    geometry_from_mass,
    validate_experiment,
)
from .geometry import alpha, alpha_asymptotic, alpha_exact, alpha_quadrature, point_limit  # noqa: E402
from .bounds import (  # noqa: E402
    bound_report,
    csl_diffusion,
    dp_blur_bound,
    dp_diffusion_lattice,
    dp_diffusion_quadrature,
    measurement_bound,
    noise_budget,
    thermal_bound,
)
from .dynamics import (  # noqa: E402
    SimulationConfig,
    analytic_force_psd,
    infer_force_spectrum,
    simulate,
    sql_coupling,
    susceptibility,
)
from .spectral import WelchConfig, compare_to_analytic, welch_psd  # noqa: E402
from .config import load_config  # noqa: E402
from .survey import run_bounds, run_campaign, run_sweep, table1  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
