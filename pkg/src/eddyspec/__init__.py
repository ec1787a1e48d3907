"""Multi-frequency eddy-current inductance spectroscopy of metallic plates.

Forward model: analytic impedance change of an air-cored gradiometer pair
above a conductive, optionally ferromagnetic, plate of finite thickness
(Dodd-Deeds style layered-halfspace kernel integrated over spatial
frequency).  Inverse model: damped Gauss-Newton on the stacked real and
imaginary inductance spectrum, with per-iteration dynamic masking of
parameters the data cannot resolve.

All internal quantities are strict SI (m, S/m, H, Hz).  Millimetres and
MS/m appear only at the file-format and command-line boundary.
"""

from .specfun import QuadratureGrid, bessel_j0, bessel_j1, build_grid, p_integral
from .forward import (
    MU0,
    CoilGeometry,
    InductanceSpectrum,
    PlateParams,
    alpha1,
    a_factor,
    coil_constant,
    coil_grid,
    default_frequencies,
    delta_l,
    delta_l_spectrum,
    impedance_to_inductance,
    truncation_alpha_max,
)
from .sensitivity import PARAM_NAMES, JacobianMatrix, jacobian, sensitivity_spectrum
from .inversion import (
    InversionConfig,
    InversionResult,
    ParamBounds,
    RankDegeneracyError,
    SingularSystemError,
    dynamic_rank_mask,
    gauss_newton_step,
    inversion_report,
    invert,
    objective,
)
from .dataio import (
    ConfigFormatError,
    NoiseModel,
    SpectrumFormatError,
    add_noise,
    convert_impedance_file,
    load_coil_config,
    load_inversion_config,
    load_plate_config,
    load_spectrum,
    save_plate_config,
    save_spectrum,
)
from . import samples

__version__ = "0.1.0"

__all__ = [
    "MU0",
    "QuadratureGrid",
    "bessel_j0",
    "bessel_j1",
    "build_grid",
    "p_integral",
    "CoilGeometry",
    "PlateParams",
    "InductanceSpectrum",
    "alpha1",
    "a_factor",
    "coil_constant",
    "coil_grid",
    "default_frequencies",
    "delta_l",
    "delta_l_spectrum",
    "impedance_to_inductance",
    "truncation_alpha_max",
    "PARAM_NAMES",
    "JacobianMatrix",
    "jacobian",
    "sensitivity_spectrum",
    "InversionConfig",
    "InversionResult",
    "ParamBounds",
    "RankDegeneracyError",
    "SingularSystemError",
    "dynamic_rank_mask",
    "gauss_newton_step",
    "inversion_report",
    "invert",
    "objective",
    "ConfigFormatError",
    "NoiseModel",
    "SpectrumFormatError",
    "add_noise",
    "convert_impedance_file",
    "load_coil_config",
    "load_inversion_config",
    "load_plate_config",
    "load_spectrum",
    "save_plate_config",
    "save_spectrum",
    "samples",
    "__version__",
]
