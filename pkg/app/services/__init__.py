from .outcome_service import outcome_service, OutcomeService
from .monitoring_service import monitoring_service, MonitoringService
from .model_service import model_service, ModelService
from .scenario_service import scenario_service, ScenarioService
from .design_service import design_service, DesignService
from .comparator_service import comparator_service, ComparatorService
from .simulation_service import simulation_service, SimulationService
from .decision_service import decision_service, DecisionService
from .report_service import report_service, ReportService
from .validation_service import validation_service, ValidationService

__all__ = [
    "outcome_service",
    "OutcomeService",
    "monitoring_service",
    "MonitoringService",
    "model_service",
    "ModelService",
    "scenario_service",
    "ScenarioService",
    "design_service",
    "DesignService",
    "comparator_service",
    "ComparatorService",
    "simulation_service",
    "SimulationService",
    "decision_service",
    "DecisionService",
    "report_service",
    "ReportService",
    "validation_service",
    "ValidationService",
]
