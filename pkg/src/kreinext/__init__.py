"""Self-adjoint extensions of point-perturbed Laplacians via Krein's resolvent formula."""

__version__ = "0.1.0"

from .branchmath import CutPoint, Side, branch_sqrt, w_deriv, w_func
from .gamma import (Channel, ChannelDecomposition, FieldKind, Geometry, Projector,
                    channels_n2, gamma_deriv, gamma_matrix, krein_gamma)
from .krein import BoundaryMatrix, SpectralPointError, b_matrix, eval_deficiency, perturbed_resolvent_kernel
from .admissibility import check_admissible, discrete_spectrum_scan, krein_matrix, theta_matrix
from .quadrature import QuadratureSettings
from .energy import (EnergyResult, Status, divergence_coefficient, energy_channels, energy_general,
                     energy_printed_form, kernel_sqrt_diff, norm_log_ratio, theta_minimize, theta_sweep)
