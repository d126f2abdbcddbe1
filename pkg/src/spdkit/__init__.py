"""SPD-manifold geometry, covariance and CSPD image-set descriptors, and classifiers."""
from .classifiers import CDLClassifier, LogEKSRClassifier, SPDNearestNeighbor, make_classifier
from .descriptors import (
    BlockGrid,
    CovarianceDescriptor,
    CSPDDescriptor,
    DescriptorConfig,
    ImageSet,
    covariance_descriptor,
    cspd_descriptor,
    descriptor_dim,
    partition,
)
from .kernels import GramMatrix, KernelSpec, cross_gram, gram_matrix, kernel_eval
from .linalg import frob_norm, matrix_exp, matrix_log, matrix_pow, sym_eig, trace_product
from .metrics import (
    TangentVector,
    airm_distance,
    airm_inner,
    lem_distance,
    lie_multiply,
    lie_scale,
    loge_inner,
)

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "CDLClassifier",
    "CSPDDescriptor",
    "CovarianceDescriptor",
    "DescriptorConfig",
    "GramMatrix",
    "ImageSet",
    "KernelSpec",
    "LogEKSRClassifier",
    "SPDNearestNeighbor",
    "TangentVector",
    "airm_distance",
    "airm_inner",
    "covariance_descriptor",
    "cross_gram",
    "cspd_descriptor",
    "descriptor_dim",
    "frob_norm",
    "gram_matrix",
    "kernel_eval",
    "lem_distance",
    "lie_multiply",
    "lie_scale",
    "loge_inner",
    "make_classifier",
    "matrix_exp",
    "matrix_log",
    "matrix_pow",
    "partition",
    "sym_eig",
    "trace_product",
]
