"""Border-county-pair estimates of how benefit duration moves unemployment.

Quasi-differenced pair regressions with interactive fixed effects, effect
calculators, county geography helpers and a synthetic search-model world
with known coefficients.
"""

__version__ = "0.1.0"

from .effects import EffectQuery, Scenario, effect_k_ahead, effect_k_permanent, effect_n_periods, effect_permanent
from .errors import (
    CollinearityError, DataError, DivergenceError, GeometryError, HorizonError, ParameterError,
    ParseError, QDPError, SingularDesignError,
)
from .estimators import (
    DesignPanel, EstimateResult, additive_fe, cluster_bootstrap_se, endogeneity_test,
    interactive_fe, pooled_ols, to_design_panel,
)
from .panel_data import BorderPair, CountyPanel, Quarter, SeparationSeries
from .transform import QuasiDiffConfig, build_samples, quasi_difference
