"""Empty-signal detection receivers: closed forms, Monte Carlo oracle, design search."""

__version__ = "0.1.0"

from .analytics import (
    NO_BLOCK,
    EsdDesign,
    Feasibility,
    LinkMetrics,
    ReportProbs,
    UndefinedRatioError,
    aux_report_prob_nonempty,
    aux_report_prob_vacuum,
    bb84_effective_detection,
    default_postprocessing,
    esd_effective,
    feasibility,
    key_rate,
    link_metrics,
    nesr,
    qber,
    report_probs,
    sifting_rate_esd,
)
from .binomial import binomial_tail
from .design import DesignPoint, DesignQuery, InfeasibleDesignError, Objective, feasibility_report, optimize, sweep
from .montecarlo import EstimateWithCI, RngSeed, compare_to_analytic, simulate_aux_branch, simulate_link
from .params import (
    AuxSourceParams,
    ChannelSpec,
    DetectorParams,
    GateParams,
    LinkParams,
    ParameterError,
    ProtocolParams,
    Variant,
    effective_deflection,
    reference_settings,
    transmission_rate,
    validate,
)
