# Outcome model
from .outcome import *
from .monitoring import *

# Hierarchical models and designs
from .model import *
from .design import *
from .scenario import *

# Run plumbing
from .decision import *
from .run_config import *
from .fixture import *

__all__ = [
    # Outcomes
    "CELL_ORDER",
    "CELL_NAMES",
    "PROB_TOLERANCE",
    "UtilityTable",
    "UTILITY_PRESETS",
    "DEFAULT_UTILITY",
    "JointOutcomeProb",
    "OutcomeCounts",

    # Monitoring
    "TailDirection",
    "MonitoringLimits",
    "CalibrationResult",

    # Models
    "ModelKind",
    "InverseGammaPrior",
    "HalfCauchyPrior",
    "Tau2Prior",
    "HierHyperparams",
    "IndicationQuasiData",
    "QuasiData",
    "McmcConfig",
    "ConjugatePosterior",
    "IndicationPosterior",
    "PosteriorSummary",

    # Designs
    "DesignKind",
    "Dose",
    "DoseStatus",
    "IndicationStatus",
    "Selection",
    "StopReason",
    "IndicationDesign",
    "DesignConfig",
    "DoseTrack",
    "IndicationState",
    "DoseCounts",
    "IndicationResult",
    "TrialResult",

    # Scenarios
    "DoseTruth",
    "IndicationTruth",
    "ScenarioSpec",
    "IndicationOC",
    "OperatingCharacteristics",

    # Decisions
    "DecisionStage",
    "ObservedDose",
    "ObservedIndication",
    "ObservedTrial",
    "RuleCheck",
    "IndicationDecision",
    "DecisionReport",

    # Run config and fixtures
    "ReportFormat",
    "RunConfig",
    "GoldenFixture",
    "OracleKind",
]
