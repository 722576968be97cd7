"""Reference chains implementing the split-chain interface."""

from .base import SplitChainBase, SplitChainModel
from .contracting_normals import (
    ContractingNormalsModel,
    ContractingNormalsParams,
    ar1_mean_variance,
    contracting_exact_plan,
    contracting_params,
)
from .hier_t import (
    HierTModel,
    HierTParams,
    hier_t_drift,
    hier_t_exact_mse,
    hier_t_minorization,
    hier_t_params,
)
from .poisson_gamma import PumpModel, PumpParams, load_pump_data
from .toy_poly import ToyPolyModel, ToyPolyParams, toy_poly_params

__all__ = [
    "SplitChainBase",
    "SplitChainModel",
    "ContractingNormalsModel",
    "ContractingNormalsParams",
    "ar1_mean_variance",
    "contracting_exact_plan",
    "contracting_params",
    "HierTModel",
    "HierTParams",
    "hier_t_drift",
    "hier_t_exact_mse",
    "hier_t_minorization",
    "hier_t_params",
    "PumpModel",
    "PumpParams",
    "load_pump_data",
    "ToyPolyModel",
    "ToyPolyParams",
    "toy_poly_params",
]
