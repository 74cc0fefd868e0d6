"""Expected future prices of contingent claims over finite horizons.

The library evaluates E_t[F_H], the time-t physical expectation of a
claim's market price at a horizon H between today and the claim's
maturity T, under hybrid dynamics that follow the physical measure
strictly before H and the pricing measure from H on. It provides exact
binomial trees, lognormal and stochastic-rate closed forms, affine and
quadratic term-structure engines, characteristic-function transforms
with Fourier inversion, a first-passage credit model, a density
extraction toolchain, and a seeded Monte Carlo oracle for every closed
form.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .affine import (AffineModelSpec, atsm_bond_price, expected_bond_price_atsm,
                     expected_log_bond_price, expected_yield)
from .equity import (bs_call_price, bs_expected_call, bs_expected_put,
                     bs_put_price, fso_expected_price)
from .errors import (AlignmentError, DivergenceError, DomainError, GridError,
                     InstabilityError, InversionError, NumericalError,
                     ParameterError, PricerError, ToleranceError)
from .forwardmeasure import (CDGSpec, MargrabeSpec, MertonInputs,
                             MertonVasicekSpec, cdg_default_probability,
                             cdg_expected_bond, expected_asset_price_vasicek,
                             margrabe_expected_exchange, margrabe_price,
                             merton_expected_call, merton_vasicek_expected_call,
                             merton_vasicek_vp)
from .fspd import (ExpectedFSPD, StrikeGrid, default_strike_grid,
                   extract_fspd_pipeline, fspd_second_difference,
                   implied_drift_invert, implied_vol_invert,
                   lognormal_switched_density, price_arbitrary_payoff,
                   smooth_curve_fit)
from .mc.engine import (BatchConfig, HestonSpec, MCEstimate, PathBatch,
                        heston_characteristics, simulate_expected_price,
                        simulate_first_passage)
from .measures import (ExpectedPriceResult, GBMSpec, HorizonSpec, MeasureTag,
                       RegimeDrift, binomial_expected_price, crr_price,
                       crr_probabilities, iterated_expectation_oracle, r_drift)
from .qtsm import (QTSMSpec, qtsm3_expected_bond, qtsm_bond_price,
                   qtsm_expected_bond)
from .riccati import RiccatiSolution, riccati_solve
from .shortrate import (A1R3Params, CIRParams, VasicekParams,
                        a1r3_bond_price, a1r3_expected_bond,
                        a1r3_to_affine_spec, cir_bond_price,
                        cir_expected_bond, vasicek_bond_price,
                        vasicek_expected_bond)
from .transforms import (AJDCharacteristic, ComplexRiccatiSolution,
                         expected_call_ajd, expected_call_fso_ajd,
                         exponential_jumps, extended_r_transform,
                         forward_start_r_transform, fourier_expected_call,
                         no_jumps, normal_jumps, q_transform, r_transform)

__version__ = "0.1.0"
