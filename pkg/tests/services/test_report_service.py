import orjson
import pandas as pd
import pytest

from app.core.exceptions import SchemaError
from app.schemas.decision import DecisionReport, DecisionStage, IndicationDecision, RuleCheck
from app.schemas.design import DesignKind, Selection
from app.schemas.run_config import ReportFormat
from app.schemas.scenario import IndicationOC, OperatingCharacteristics
from app.services.report_service import config_hash, report_service


def _oc(design="ROMI-v1", scenario="A2", csp=62.2):
    indications = [
        IndicationOC(
            index=k, pct_high=12.3456789 + k, pct_low=62.8 - k, pct_none=24.8543211,
            se_high=0.73, se_low=1.08, se_none=0.97, avg_n=47.25 + k, true_obd=Selection.LOW,
            stop_breakdown={"selected": 75.0, "stage1_futility": 25.0},
        )
        for k in range(3)
    ]
    return OperatingCharacteristics(
        design=design, scenario=scenario, n_reps=2000, master_seed=20240601,
        indications=indications, csp=csp, avg_total_n=146.7, se_total_n=0.31,
    )


class TestCsv:
    def test_round_trip_full_precision(self, tmp_path):
        results = [_oc(), _oc(design="Pool", csp=None)]
        path = report_service.write_csv(results, tmp_path / "oc.csv")
        back = report_service.read_csv(path)
        assert back[0].indications[0].pct_high == 12.3456789
        assert back[1].csp is None
        assert back[0].indications[1].stop_breakdown["stage1_futility"] == 25.0
        assert back[0].indications[1].stop_breakdown["interim_terminated"] == 0.0
        assert [r.design for r in back] == ["ROMI-v1", "Pool"]

    def test_missing_column(self, tmp_path):
        path = tmp_path / "oc.csv"
        report_service.to_frame([_oc()]).drop(columns=["pct_low"]).to_csv(path, index=False)
        with pytest.raises(SchemaError) as exc:
            report_service.read_csv(path)
        assert exc.value.field == "pct_low"

    def test_one_row_per_indication(self):
        frame = report_service.to_frame([_oc(), _oc(scenario="A3")])
        assert len(frame) == 6
        assert "stop_selected" in frame.columns


class TestMarkdown:
    def test_layout(self):
        text = report_service.render_markdown([_oc(), _oc(design="Pool", csp=None)])
        lines = text.splitlines()
        assert lines[0] == "### Scenario A2 (2000 replications)"
        assert lines[2].startswith("| Design | I1 H (L) | I1 L (L) |")
        assert "| ROMI-v1 | 12.3 | 62.8 |" in text
        assert lines[-1].endswith("| NA | 147 |")

    def test_one_table_per_scenario(self):
        text = report_service.render_markdown([_oc(scenario="A1"), _oc(scenario="A2")])
        assert text.count("### Scenario") == 2

    def test_any_frame(self):
        frame = pd.DataFrame([{"n": 14, "boundary": 1, "fn": 0.0028867}, {"n": 5, "boundary": None, "fn": 0.05}])
        frame["boundary"] = frame["boundary"].astype("Int64")
        lines = report_service.render_frame_markdown(frame).splitlines()
        assert lines == [
            "| n | boundary | fn |",
            "|---|---|---|",
            "| 14 | 1 | 0.002887 |",
            "| 5 | - | 0.050000 |",
        ]

    def test_write_frame_formats(self, tmp_path):
        frame = pd.DataFrame([{"indication": 1, "achieved_fn": 0.0123456789}])
        csv_path = report_service.write_frame(frame, tmp_path / "t.csv", ReportFormat.CSV)
        assert pd.read_csv(csv_path).loc[0, "achieved_fn"] == 0.0123456789
        md_path = report_service.write_frame(frame, tmp_path / "sub" / "t.md", ReportFormat.MARKDOWN)
        assert md_path.read_text().splitlines()[2] == "| 1 | 0.012346 |"


class TestDecisionReport:
    REPORT = DecisionReport(design=DesignKind.ROMI_V1, stage=DecisionStage.STAGE1, indications=[
        IndicationDecision(index=0, action="drop: toxicity", rules=[
            RuleCheck(dose="H", rule="toxicity", probability=0.999, cutoff=0.95, fires=True),
            RuleCheck(dose="H", rule="futility", probability=0.01, cutoff=0.95, fires=False),
        ]),
        IndicationDecision(index=1, action="dropped earlier"),
    ])

    def test_frame(self):
        frame = report_service.decision_frame(self.REPORT)
        assert len(frame) == 3
        assert frame.loc[0, "fires"]
        assert pd.isna(frame.loc[2, "rule"])

    def test_markdown(self):
        text = report_service.render_decision_markdown(self.REPORT)
        assert "| I1 | drop: toxicity | H toxicity 0.9990 > 0.95; H futility 0.0100 <= 0.95 | - | - |" in text
        assert "| I2 | dropped earlier | - | - | - |" in text


class TestManifest:
    def test_hash_ignores_key_order(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_written_manifest(self, tmp_path):
        manifest = report_service.manifest({"n_reps": 10}, 7, [tmp_path / "oc.csv"])
        path = report_service.write_manifest(manifest, tmp_path / "manifest.json")
        data = orjson.loads(path.read_bytes())
        assert data["master_seed"] == 7
        assert data["config_hash"] == config_hash({"n_reps": 10})
        assert {"python", "numpy", "scipy"} <= set(data["versions"])
        assert data["outputs"] == [str(tmp_path / "oc.csv")]
