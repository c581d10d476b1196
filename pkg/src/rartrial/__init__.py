"""Bayesian response-adaptive randomization engine for a composite
mortality/morbidity endpoint (organ-support-free days).

The package simulates multi-arm staged trials whose outcome is a mixture of
a death spike, a censoring mass at the best observable value, and a
truncated-normal morbidity component.  Posterior inference is by Gibbs
sampling; per-stage allocation follows one of six randomization rules;
early-stopping boundaries are calibrated by simulation under alpha-spending
schedules.
"""

__version__ = "0.1.0"

from .outcome import (
    ArmModel,
    PatientRecord,
    ScenarioSpec,
    TransformConstants,
    CONSTANTS,
    LOWER,
    UPPER,
    build_scenario,
    simulate_patient,
    transform_osfd,
)
from .posterior import (
    McmcConfig,
    PosteriorSample,
    estimate_theta,
    estimate_xi,
    gibbs_fit,
    prob_best,
    prob_superiority,
    theta_of,
    tn_moments,
    var_of,
)
from .allocation import (
    AllocationResult,
    ComparatorConfig,
    apply_suspension,
    fixed_randomization,
    rule1,
    rule2,
    rule3,
    thompson,
    trippa,
)
from .stopping import (
    CalibrationConfig,
    SpendingSchedule,
    alpha_obf,
    alpha_pocock,
    alpha_power,
    calibrate_boundaries,
    check_early_stop,
)
from .engine import ReplicationSummary, TrialConfig, TrialResult, final_pps, replicate, run_trial
