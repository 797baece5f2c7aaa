"""Capacity-optimal transmit covariances for half-duplex AF MISO relaying
under channel mean feedback.

The public surface groups into: the channel/covariance model (`channel`),
special-function kernels (`specfun`), transform-order checks
(`stochastic_order`), Monte Carlo capacity estimators (`capacity`), the
power-split search (`optimizer`), the beamforming sign test (`beamforming`),
and reproducible experiment drivers (`experiments`, `cli`).
"""

from .beamforming import (
    BeamformingInstance,
    BfExpectations,
    bf_expectations,
    bf_threshold,
    f_gamma,
    pz_density,
    sample_z,
)
from .capacity import (
    CapacityEstimate,
    ConditionalPair,
    PairedCapacity,
    amplifier_gain,
    conditional_capacity_pair,
    estimate_capacity,
    estimate_capacity_limit,
    integrand_meanfeedback,
    integrand_raw,
    paired_capacity_comparison,
)
from .channel import (
    ChannelMeanModel,
    CovarianceReport,
    FadingDistribution,
    LinkParams,
    SourceCovariance,
    complete_orthonormal_basis,
    db_to_linear,
    quadratic_form,
    sample_backward_channel,
    validate_covariance,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    run_fig1,
    run_fig2,
    run_fig3,
    run_lt_suite,
)
from .optimizer import (
    OptimalStructure,
    SearchConfig,
    build_q_opt,
    optimize_phi,
    optimize_suboptimal,
    phi_objective,
)
from .specfun import (
    MixtureSpec,
    bessel_i0_scaled,
    expx_gamma0,
    gamma0,
    mgf_mixture,
    sample_ncx2,
)
from .stochastic_order import (
    ComparisonInstance,
    Lemma1Report,
    LtOrderReport,
    j_function,
    lemma1_check,
    lt_order_check,
    log_mgf_ratio,
    majorization_check,
    phi_hat_from_q1,
    r_function,
)

__version__ = "0.1.0"
