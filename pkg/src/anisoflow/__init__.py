"""Anisotropic Gaussian filtering and fibre direction estimation."""
__version__ = "0.1.0"

from .decomp import AnisoKernelSpec, Axis, DecompPlan, plan_auto, plan_x1, plan_x2
from .filters import (HYBRID_CUBIC, HYBRID_LINEAR, HYBRID_MOD_CUBIC, HYBRID_MOD_LINEAR,
                      LINEBUFFER_LINEAR, ORACLE, Algorithm, FilterAlgorithm,
                      anisotropic_filter, dense_filter, reconstruct_kernel)
from .gauss1d import UnsupportedSigmaError, coeffs_for_sigma, gauss1d
from .interp import InterpScheme
from .orientation import (MRParams, OrientationField, TensorParams, hessian_estimate,
                          mr_estimate, structure_tensor_estimate)

__all__ = [
    "AnisoKernelSpec", "Axis", "DecompPlan", "plan_auto", "plan_x1", "plan_x2",
    "Algorithm", "FilterAlgorithm", "HYBRID_LINEAR", "HYBRID_CUBIC", "HYBRID_MOD_LINEAR",
    "HYBRID_MOD_CUBIC", "LINEBUFFER_LINEAR", "ORACLE", "anisotropic_filter",
    "dense_filter", "reconstruct_kernel", "UnsupportedSigmaError", "coeffs_for_sigma",
    "gauss1d", "InterpScheme", "MRParams", "OrientationField", "TensorParams",
    "hessian_estimate", "mr_estimate", "structure_tensor_estimate",
]
