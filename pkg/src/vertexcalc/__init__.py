"""Formal delta-function calculus, branch-tracked arithmetic and free-boson
checks for products and iterates of intertwining operators."""

from .branch import (LogPoint, RegionError, UntrackedExponentError, in_double_region, power, principal,
                     rotate, substitute)
from .delta import (IDENTITIES, CoeffReport, DeltaFactor, DeltaProduct, closed_form_coeff,
                    coeff_series_iterate_region, coeff_series_product_region, evaluate_cell, expand_side,
                    side_coefficient, verify_identity)
from .dual import (FunctionalSeries, InsufficientTruncation, TruncatedFunctional, check_tau_equality,
                   compatibility_check, conformal_vector, correlator_functional, lprime0_apply, tau1_apply,
                   tau2_apply, vacuum_vector)
from .expansion import (ExpansionFit, ExpansionRegressor, FitUnreliable, RealExpSeries, exponent_support,
                        fit_product_expansion, leading_extract, res_z)
from .formal_series import CoeffSeries, ExpansionConvention, binomial_coeff, iota_expand, mul
from .heisenberg import (DualVector, FockState, FockVector, Intertwiner, ModelConfig, VirasoroAction,
                         associativity_check, intertwiner_matrix_coeff, iterate_correlator, omega,
                         product_correlator, skew_chain_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
