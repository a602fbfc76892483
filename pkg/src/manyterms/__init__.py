"""Series estimation of the partially linear model with many approximating terms.

The estimator, its V-statistic decomposition, degrees-of-freedom-corrected
homoskedastic inference, two companion estimators with the same structure
(JIVE2 and the leave-one-out integrated squared density estimator), and a
Monte Carlo harness.
"""

from .basis import BasisMatrix, BasisSpec, build_basis, ladder, ladder_spec
from .companions import (
    IvSample,
    KernelSpec,
    isd_decompose,
    isd_estimate,
    isd_small_bandwidth_variance,
    jive2_fit,
)
from .errors import (
    ConfigError,
    DimensionError,
    ManyTermsError,
    NumericalError,
    ParseError,
    RankDeficient,
    SingularDesign,
    SingularGamma,
)
from .plm import (
    ConfidenceInterval,
    PlmFit,
    confidence_interval,
    fit_plm,
    gamma_population_limit,
    omega_hom,
)
from .projection import (
    LeverageComplements,
    ProjectionWorkspace,
    apply_annihilator,
    factorize,
    leverage_complements,
    offdiag_cross,
)
from .vstat import (
    DecompositionReport,
    OracleData,
    decompose_plm,
    hoeffding_decompose_discrete,
    oracle_sigma_n_hom,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMatrix",
    "BasisSpec",
    "ConfidenceInterval",
    "ConfigError",
    "DecompositionReport",
    "DimensionError",
    "IvSample",
    "KernelSpec",
    "LeverageComplements",
    "ManyTermsError",
    "NumericalError",
    "OracleData",
    "ParseError",
    "PlmFit",
    "ProjectionWorkspace",
    "RankDeficient",
    "SingularDesign",
    "SingularGamma",
    "apply_annihilator",
    "build_basis",
    "confidence_interval",
    "decompose_plm",
    "factorize",
    "fit_plm",
    "gamma_population_limit",
    "hoeffding_decompose_discrete",
    "isd_decompose",
    "isd_estimate",
    "isd_small_bandwidth_variance",
    "jive2_fit",
    "ladder",
    "ladder_spec",
    "leverage_complements",
    "offdiag_cross",
    "omega_hom",
    "oracle_sigma_n_hom",
]
