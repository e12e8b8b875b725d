"""Strong approximation of iterated Ito and Stratonovich stochastic integrals
by truncated multiple Fourier series over Legendre and trigonometric bases."""

from .basis import (BasisSystem, DomainError, Interval, LEGENDRE, TRIGONOMETRIC,
                    legendre_P, phi, phi_integral)
from .coeffs import (CoeffTensor, TensorSizeError, WeightFn, coeff_tensor,
                     fourier_coeff, kernel_norm_sq, trace_sum, weight_custom,
                     weight_monomial, weight_one)
from .diagnostics import (b_constants, delta_coeff, delta_second_moment,
                          delta_sum_trend, delta_table, residual_eq15,
                          tail_kernel_Fp)
from .expand import (GaussianTable, hermite_reference, ito_truncated,
                     sample_table, strat_correction, strat_truncated)
from .oracle import (MseResult, WienerPath, ito_sum, mse_pathwise, sample_path,
                     strat_sum, zeta_from_path)
from .quadrature import Grid, QuadratureError
from .sde import (SdeModel, StrongOrderResult, strong_order_study, strong_step,
                  noncommutative_model, commutative_model, linear_model)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
