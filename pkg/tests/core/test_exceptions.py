from app.core.exceptions import (
    ConfigError,
    ConfigMismatch,
    DomainError,
    InfeasibleAssociation,
    NoFeasibleN,
    RomiError,
    SchemaError,
)


class TestExitCodes:
    def test_config_errors_exit_one(self):
        for error in (ConfigError(), SchemaError(), ConfigMismatch()):
            assert error.exit_code == 1

    def test_runtime_errors_exit_two(self):
        for error in (DomainError(), InfeasibleAssociation(), NoFeasibleN(), RomiError()):
            assert error.exit_code == 2


def test_config_error_payload_names_key():
    payload = ConfigError("bad value", key="mcmc.n_iter").to_payload()
    assert payload["success"] is False
    assert payload["error"] == "ConfigError"
    assert payload["context"]["key"] == "mcmc.n_iter"


def test_schema_error_carries_row_and_field():
    error = SchemaError("negative count", row=2, field="high.stage2")
    assert error.row == 2
    assert error.key == "high.stage2"
    assert error.context == {"row": 2, "field": "high.stage2", "key": "high.stage2"}


def test_no_feasible_n_reports_range():
    error = NoFeasibleN(n_range=(5, 9))
    assert error.context["n_range"] == [5, 9]
    assert error.message == NoFeasibleN.default_message
