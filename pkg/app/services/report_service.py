"""
Report emission: basket-table markdown, full-precision CSV and the run manifest.
"""
import hashlib
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import orjson
import pandas as pd

from app.core.exceptions import SchemaError
from app.core.logger import get_logger
from app.schemas.decision import DecisionReport
from app.schemas.design import Selection, StopReason
from app.schemas.run_config import ReportFormat
from app.schemas.scenario import IndicationOC, OperatingCharacteristics

logger = get_logger("report_service")

MANIFEST_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "arviz", "mpmath", "typer")

OC_COLUMNS = [
    "design", "scenario", "n_reps", "master_seed", "csp", "avg_total_n", "se_total_n",
    "indication", "true_obd", "pct_high", "pct_low", "pct_none", "se_high", "se_low", "se_none", "avg_n",
]
STOP_COLUMNS = [f"stop_{reason.value}" for reason in StopReason]


def _table_lines(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(cells) + " |" for cells in rows]
    return lines


def _cell(value: Any, float_format: str) -> str:
    if value is None or pd.isna(value):
        return "-"
    if isinstance(value, float):
        return format(value, float_format)
    return str(value)


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 over the key-sorted JSON form of a config tree."""
    payload = orjson.dumps(config, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
    return hashlib.sha256(payload).hexdigest()


class ReportService:

    def to_frame(self, results: Sequence[OperatingCharacteristics]) -> pd.DataFrame:
        """One row per (design, scenario, indication)."""
        rows = []
        for oc in results:
            for ind in oc.indications:
                row = {
                    "design": oc.design,
                    "scenario": oc.scenario,
                    "n_reps": oc.n_reps,
                    "master_seed": oc.master_seed,
                    "csp": oc.csp,
                    "avg_total_n": oc.avg_total_n,
                    "se_total_n": oc.se_total_n,
                    "indication": ind.index,
                    "true_obd": ind.true_obd.value,
                    "pct_high": ind.pct_high,
                    "pct_low": ind.pct_low,
                    "pct_none": ind.pct_none,
                    "se_high": ind.se_high,
                    "se_low": ind.se_low,
                    "se_none": ind.se_none,
                    "avg_n": ind.avg_n,
                }
                for column in STOP_COLUMNS:
                    row[column] = ind.stop_breakdown.get(column[len("stop_"):], 0.0)
                rows.append(row)
        return pd.DataFrame(rows, columns=OC_COLUMNS + STOP_COLUMNS)

    def write_csv(self, results: Sequence[OperatingCharacteristics], path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(results).to_csv(path, index=False)
        logger.info(f"Wrote {len(results)} OC tables to {path}")
        return path

    def read_csv(self, path: Union[str, Path]) -> List[OperatingCharacteristics]:
        """Parse a CSV written by write_csv back into OperatingCharacteristics."""
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False, na_values={"csp": [""]})
        missing = [c for c in OC_COLUMNS if c not in frame.columns]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}", field=missing[0])

        results = []
        for (design, scenario), group in frame.groupby(["design", "scenario"], sort=False):
            first = group.iloc[0]
            indications = []
            for _, row in group.iterrows():
                indications.append(IndicationOC(
                    index=int(row["indication"]),
                    pct_high=float(row["pct_high"]),
                    pct_low=float(row["pct_low"]),
                    pct_none=float(row["pct_none"]),
                    se_high=float(row["se_high"]),
                    se_low=float(row["se_low"]),
                    se_none=float(row["se_none"]),
                    avg_n=float(row["avg_n"]),
                    true_obd=Selection(row["true_obd"]),
                    stop_breakdown={
                        c[len("stop_"):]: float(row[c]) for c in STOP_COLUMNS if c in group.columns
                    },
                ))
            results.append(OperatingCharacteristics(
                design=str(design),
                scenario=str(scenario),
                n_reps=int(first["n_reps"]),
                master_seed=int(first["master_seed"]),
                indications=indications,
                csp=None if pd.isna(first["csp"]) else float(first["csp"]),
                avg_total_n=float(first["avg_total_n"]),
                se_total_n=float(first["se_total_n"]),
            ))
        return results

    def render_markdown(self, results: Sequence[OperatingCharacteristics]) -> str:
        """
        One table per scenario: rows are designs, columns are per-indication
        selection percentages for each dose, then CSP and average N.
        """
        by_scenario: Dict[str, List[OperatingCharacteristics]] = {}
        for oc in results:
            by_scenario.setdefault(oc.scenario, []).append(oc)

        blocks = []
        for scenario, rows in by_scenario.items():
            K = len(rows[0].indications)
            header = ["Design"]
            for k in range(K):
                truth = rows[0].indications[k].true_obd
                mark = f" ({truth.value})" if truth is not Selection.NONE else ""
                header += [f"I{k + 1} H{mark}", f"I{k + 1} L{mark}"]
            header += ["CSP", "N"]
            body = []
            for oc in rows:
                cells = [oc.design]
                for ind in oc.indications:
                    cells += [f"{ind.pct_high:.1f}", f"{ind.pct_low:.1f}"]
                cells += ["NA" if oc.csp is None else f"{oc.csp:.1f}", f"{oc.avg_total_n:.0f}"]
                body.append(cells)
            lines = [f"### Scenario {scenario} ({rows[0].n_reps} replications)", "", *_table_lines(header, body)]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def write_markdown(self, results: Sequence[OperatingCharacteristics], path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render_markdown(results), encoding="utf-8")
        return path

    def decision_frame(self, report: DecisionReport) -> pd.DataFrame:
        """One row per evaluated rule; indications without rules get a single row."""
        rows = []
        for ind in report.indications:
            base = {
                "design": report.design.value,
                "stage": report.stage.value,
                "indication": ind.index,
                "action": ind.action,
                "q_high": ind.q_high,
                "q_low": ind.q_low,
                "selection": ind.selection.value if ind.selection else None,
            }
            checks = ind.rules or [None]
            for check in checks:
                row = dict(base)
                if check is not None:
                    row.update(dose=check.dose, rule=check.rule, probability=check.probability,
                               cutoff=check.cutoff, fires=check.fires)
                rows.append(row)
        columns = ["design", "stage", "indication", "action", "dose", "rule", "probability", "cutoff", "fires",
                   "q_high", "q_low", "selection"]
        return pd.DataFrame(rows, columns=columns)

    def render_decision_markdown(self, report: DecisionReport) -> str:
        body = []
        for ind in report.indications:
            rules = "; ".join(
                f"{r.dose} {r.rule} {r.probability:.4f}{' > ' if r.fires else ' <= '}{r.cutoff}" for r in ind.rules
            ) or "-"
            q_high = "-" if ind.q_high is None else f"{ind.q_high:.4f}"
            q_low = "-" if ind.q_low is None else f"{ind.q_low:.4f}"
            body.append([f"I{ind.index + 1}", ind.action, rules, q_high, q_low])
        lines = [f"### {report.design.label} decision at {report.stage.value}", ""]
        lines += _table_lines(["Indication", "Action", "Rules", "Q H", "Q L"], body)
        return "\n".join(lines) + "\n"

    def render_frame_markdown(self, frame: pd.DataFrame, float_format: str = ".6f") -> str:
        """Any frame as one markdown table; missing values print as '-'."""
        rows = [[_cell(v, float_format) for v in row] for row in frame.astype(object).itertuples(index=False)]
        return "\n".join(_table_lines([str(c) for c in frame.columns], rows)) + "\n"

    def write_frame(self, frame: pd.DataFrame, path: Union[str, Path], format: ReportFormat) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if format is ReportFormat.CSV:
            frame.to_csv(path, index=False)
        else:
            path.write_text(self.render_frame_markdown(frame), encoding="utf-8")
        return path

    def manifest(self, config: Dict[str, Any], master_seed: int, outputs: Sequence[Union[str, Path]]) -> Dict[str, Any]:
        versions = {"python": platform.python_version()}
        for package in MANIFEST_PACKAGES:
            try:
                versions[package] = metadata.version(package)
            except metadata.PackageNotFoundError:
                versions[package] = None
        return {
            "config_hash": config_hash(config),
            "master_seed": master_seed,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "versions": versions,
            "outputs": [str(p) for p in outputs],
            "config": config,
        }

    def write_manifest(self, manifest: Dict[str, Any], path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(orjson.dumps(manifest, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
        return path


report_service = ReportService()
