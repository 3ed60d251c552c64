"""Signal processing for wide-sense-stationary graph random processes."""

from .errors import ConfigError, DataError, GGSPError
from .graph import Graph, build_graph, cartesian_product, correlation_graph, cycle_graph, erdos_renyi, generate_graph, graph_matrices, knn_graph, tensor_product
from .spectral import JointBasis, SpectralBasis, eigendecompose, fourier_basis_cycle, identity_basis, ijft, jft
from .model import GrpModel, check_hwss, check_jwss, check_vwss, covariance_from_jpsd, sample_grp
from .wiener import complete, completion_approx, completion_filter, denoise, denoise_filter, lce_oracle, mse_completion
from .estimation import SamplePlan, design_matrix, jpsd_periodogram, learn_hilbert_basis, variational_em

__version__ = "0.1.0"
