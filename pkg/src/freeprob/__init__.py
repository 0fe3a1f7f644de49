"""Operator-valued S- and R-transforms over finite-dimensional algebras,
checked against model variables on a truncated full Fock space."""

from freeprob.algebra import Algebra, AlgebraValidationError, NotInvertible
from freeprob.series import ContractError, FactorizationFailed, Jet, MultilinearMap
from freeprob.transforms import (
    MomentData,
    TransformResult,
    c_jet,
    dependence_check,
    phi_jet,
    psi_jet,
    r_transform,
    s_transform,
    twisted_rhs,
)
from freeprob.fock import DepthExceeded, FockConfig, FockVector, RvModel, fit_r_model, fit_s_model

__version__ = "0.1.0"
