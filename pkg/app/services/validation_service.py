"""
Golden fixtures and the verify harness.

Fixtures are produced by the independent oracles in app.utils (mpmath enumeration,
tensor-grid quadrature, closed forms) and checked against the production services.
"""
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
import orjson
from pydantic import ValidationError

from app.core.exceptions import ConfigError, FixtureError, RomiError
from app.core.logger import get_logger
from app.schemas.design import DesignKind
from app.schemas.fixture import GoldenFixture, OracleKind
from app.schemas.model import (
    HierHyperparams,
    IndicationQuasiData,
    InverseGammaPrior,
    McmcConfig,
    ModelKind,
    QuasiData,
)
from app.schemas.monitoring import MonitoringLimits
from app.schemas.outcome import CELL_NAMES
from app.schemas.run_config import parse_run_config
from app.services.model_service import ModelService, model_service
from app.services.monitoring_service import MonitoringService, monitoring_service
from app.services.outcome_service import OutcomeService, outcome_service
from app.services.scenario_service import load_structured, scenario_service
from app.services.simulation_service import simulation_service
from app.utils import oracles
from app.utils.mcmc import monte_carlo_se
from app.utils.quadrature import quadrature_oracle

logger = get_logger("validation_service")

# (name, z_H2, n_H2, z_L2, n_L2, z_H1, n_H1)
GOLDEN_DATASETS = [
    ("balanced", 12.0, 20, 13.0, 20, 7.0, 14),
    ("low_better", 6.0, 20, 12.0, 20, 3.0, 14),
    ("high_better", 15.0, 20, 8.0, 20, 10.0, 14),
]
QUADRATURE_TOLERANCE = {ModelKind.V1: 0.01, ModelKind.NC: 0.01, ModelKind.V2: 0.015}
VERIFY_MCMC = McmcConfig(n_iter=24000, n_burn=4000, seed=20240601, diagnostics=False)

BENCHMARK_TOLERANCE = {"pct": 3.0, "csp": 3.0, "n": 3.0}
ACCEPTANCE_RANGE = (0.15, 0.6)
MIN_ESS = 200.0

# proper priors throughout, so every checked moment exists
PRIOR_HYPER = HierHyperparams(
    tau2_prior=InverseGammaPrior(a=4.0, b=0.3),
    q_beta_a=2.0, q_beta_b=3.0,
    zeta_beta_a=2.0, zeta_beta_b=1.0,
    omega_beta_a=1.0, omega_beta_b=3.0,
)
PRIOR_MCMC = McmcConfig(n_iter=22000, n_burn=2000, seed=20240601, likelihood_on=False, diagnostics=False)
PRIOR_MCSE_BOUND = 3.0

DRIFT_MARGIN = 1.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    level: str
    checks: List[CheckResult] = field(default_factory=list)
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _dataset(row) -> IndicationQuasiData:
    _, z_h, n_h, z_l, n_l, z_h1, n_h1 = row
    return IndicationQuasiData(index=0, z_H2=z_h, n_H2=n_h, z_L2=z_l, n_L2=n_l, z_H1=z_h1, n_H1=n_h1)


def _beta_mean(a: float, b: float) -> float:
    return a / (a + b)


def prior_moments(kind: ModelKind, hyper: HierHyperparams) -> Dict[str, float]:
    """
    Analytic prior moments of the quantities a likelihood-free chain should reproduce.

    Raises:
        ValueError: for the conjugate model, or when the tau^2 prior has no finite mean
    """
    if kind is ModelKind.CONJUGATE:
        raise ValueError("the conjugate model has no sampler")
    prior = hyper.tau2_prior
    if not isinstance(prior, InverseGammaPrior) or prior.a <= 1.0:
        raise ValueError("prior moment checks need an inverse-gamma tau^2 prior with a > 1")

    moments = {"q_high": _beta_mean(hyper.q_beta_a, hyper.q_beta_b), "tau2": prior.b / (prior.a - 1.0)}
    if kind is ModelKind.NC:
        moments.update(mu=hyper.nc_mu_mean, mu_var=hyper.nc_mu_sd ** 2)
        return moments
    moments.update(
        mu0=hyper.mu0_mean, mu1=hyper.mu1_mean,
        mu0_var=hyper.mu0_sd ** 2, mu1_var=hyper.mu1_sd ** 2,
        q=_beta_mean(hyper.zeta_beta_a, hyper.zeta_beta_b),
    )
    if kind is ModelKind.V2:
        omega = _beta_mean(hyper.omega_beta_a, hyper.omega_beta_b)
        moments.update(omega=omega, spike=omega, drift_sq=omega * hyper.spike_var + (1.0 - omega) * hyper.slab_var)
    return moments


def drift_criterion_holds(csp_v1: Optional[float], csp_v2: Optional[float], margin: float = DRIFT_MARGIN) -> bool:
    """ROMI-v2 may trail ROMI-v1 by at most margin CSP points."""
    if csp_v1 is None or csp_v2 is None:
        return False
    return csp_v2 >= csp_v1 - margin


class ValidationService:

    def __init__(
        self,
        monitoring: MonitoringService = monitoring_service,
        outcomes: OutcomeService = outcome_service,
        models: ModelService = model_service,
    ):
        self.monitoring = monitoring
        self.outcomes = outcomes
        self.models = models
        self._checkers: Dict[OracleKind, Callable[[GoldenFixture], CheckResult]] = {
            OracleKind.BETA_ENUMERATION: self._check_boundary,
            OracleKind.BINOMIAL_ENUMERATION: self._check_false_negative,
            OracleKind.EXHAUSTIVE_SCAN: self._check_calibration,
            OracleKind.CLOSED_FORM: self._check_joint,
            OracleKind.QUADRATURE: self._check_quadrature,
        }

    # ---- fixture generation --------------------------------------------------------

    def build_fixtures(self, quadrature_points: int = 801) -> List[GoldenFixture]:
        fixtures = []
        lim = MonitoringLimits()

        for rule, limit in (("toxicity", lim.tox_limit), ("futility", lim.resp_floor)):
            inputs = {"rule": rule, "n": 14, "limit": limit, "cutoff": 0.95, "prior_a": lim.prior_a, "prior_b": lim.prior_b}
            if rule == "toxicity":
                boundary = oracles.toxicity_boundary_by_enumeration(14, limit, 0.95, lim.prior_a, lim.prior_b)
            else:
                boundary = oracles.futility_boundary_by_enumeration(14, limit, 0.95, lim.prior_a, lim.prior_b)
            tails = {
                str(x): oracles.beta_tail_quadrature(
                    lim.prior_a + x, lim.prior_b + 14 - x, limit, "above" if rule == "toxicity" else "below"
                )
                for x in range(15)
            }
            fixtures.append(GoldenFixture(
                name=f"boundary_{rule}_n14",
                oracle=OracleKind.BETA_ENUMERATION,
                inputs=inputs,
                expected={"boundary": boundary, "tails": tails},
                tolerance=1e-8,
            ))

        pi_true = lim.resp_floor + 0.20
        fixtures.append(GoldenFixture(
            name="false_negative_n14_delta020",
            oracle=OracleKind.BINOMIAL_ENUMERATION,
            inputs={"n": 14, "pi_true": pi_true, "resp_floor": lim.resp_floor, "cutoff": 0.95},
            expected={"fn": oracles.false_negative_by_enumeration(14, pi_true, lim.resp_floor, 0.95)},
            tolerance=1e-10,
        ))

        scan = oracles.calibrate_by_scan(5, 60, pi_true, lim.resp_floor, 0.95)
        chosen = next(row for row in scan if row["fn"] <= 0.10)
        fixtures.append(GoldenFixture(
            name="calibration_floor025_delta020",
            oracle=OracleKind.EXHAUSTIVE_SCAN,
            inputs={"resp_floor": lim.resp_floor, "delta": 0.20, "cutoff": 0.95, "max_fn": 0.10, "n_min": 5, "n_max": 60},
            expected={"n": chosen["n"], "fn": chosen["fn"]},
            tolerance=1e-10,
        ))

        fixtures.append(GoldenFixture(
            name="joint_cells_025_040_025",
            oracle=OracleKind.CLOSED_FORM,
            inputs={"pi_T": 0.25, "pi_R": 0.40, "phi": 0.25},
            expected=oracles.joint_cells_exact(0.25, 0.40, 0.25),
            tolerance=1e-12,
        ))

        hyper = HierHyperparams()
        for row in GOLDEN_DATASETS:
            data = _dataset(row)
            for kind in (ModelKind.V1, ModelKind.NC, ModelKind.V2):
                result = quadrature_oracle(data, hyper, kind, points=quadrature_points)
                fixtures.append(GoldenFixture(
                    name=f"posterior_{kind.value}_{row[0]}",
                    oracle=OracleKind.QUADRATURE,
                    inputs={"kind": kind.value, "data": data.model_dump(), "hyper": hyper.model_dump()},
                    expected={"q_high": result.q_high, "q_low": result.q_low},
                    tolerance=QUADRATURE_TOLERANCE[kind],
                ))
        return fixtures

    def generate_fixtures(self, directory: Union[str, Path], quadrature_points: int = 801) -> List[Path]:
        """Write every golden fixture to directory as one JSON file each."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for fixture in self.build_fixtures(quadrature_points):
            path = directory / f"{fixture.name}.json"
            path.write_bytes(orjson.dumps(fixture.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
            paths.append(path)
        logger.info(f"Generated {len(paths)} fixtures in {directory}")
        return paths

    def load_fixtures(self, directory: Union[str, Path]) -> List[GoldenFixture]:
        """
        Raises:
            FixtureError: if the directory is missing, empty or holds an unreadable fixture
        """
        directory = Path(directory)
        paths = sorted(directory.glob("*.json")) if directory.is_dir() else []
        if not paths:
            raise FixtureError(f"no fixtures found in {directory}", context={"directory": str(directory)})
        fixtures = []
        for path in paths:
            try:
                fixtures.append(GoldenFixture(**orjson.loads(path.read_bytes())))
            except (orjson.JSONDecodeError, ValidationError, TypeError) as e:
                raise FixtureError(f"corrupt fixture {path.name}: {e}", context={"fixture": path.name}) from e
        return fixtures

    # ---- checks --------------------------------------------------------------------

    def _check_boundary(self, fx: GoldenFixture) -> CheckResult:
        inp = fx.inputs
        if inp["rule"] == "toxicity":
            lim = MonitoringLimits(tox_limit=inp["limit"], prior_a=inp["prior_a"], prior_b=inp["prior_b"])
            got = self.monitoring.toxicity_boundary(inp["n"], lim, inp["cutoff"])
            prob = lambda x: self.monitoring.toxicity_probability(inp["n"], x, lim)
        else:
            lim = MonitoringLimits(resp_floor=inp["limit"], prior_a=inp["prior_a"], prior_b=inp["prior_b"])
            got = self.monitoring.futility_boundary(inp["n"], lim, inp["cutoff"])
            prob = lambda x: self.monitoring.futility_probability(inp["n"], x, lim)
        worst = max(abs(prob(int(x)) - v) for x, v in fx.expected["tails"].items())
        passed = got == fx.expected["boundary"] and worst <= fx.tolerance
        return CheckResult(fx.name, passed, f"boundary {got} vs {fx.expected['boundary']}, max tail error {worst:.2e}")

    def _check_false_negative(self, fx: GoldenFixture) -> CheckResult:
        inp = fx.inputs
        lim = MonitoringLimits(resp_floor=inp["resp_floor"])
        got = self.monitoring.false_negative_prob(inp["n"], inp["pi_true"], lim, inp["cutoff"])
        err = abs(got - fx.expected["fn"])
        return CheckResult(fx.name, err <= fx.tolerance, f"fn {got:.12f} vs {fx.expected['fn']:.12f}")

    def _check_calibration(self, fx: GoldenFixture) -> CheckResult:
        inp = fx.inputs
        lim = MonitoringLimits(resp_floor=inp["resp_floor"])
        got = self.monitoring.calibrate_stage1_n(lim, inp["delta"], inp["cutoff"], inp["max_fn"], (inp["n_min"], inp["n_max"]))
        passed = got.n == fx.expected["n"] and abs(got.achieved_fn - fx.expected["fn"]) <= fx.tolerance
        return CheckResult(fx.name, passed, f"n {got.n} vs {fx.expected['n']}")

    def _check_joint(self, fx: GoldenFixture) -> CheckResult:
        inp = fx.inputs
        joint = self.outcomes.solve_joint(inp["pi_T"], inp["pi_R"], inp["phi"])
        got = {f"p{c}": v for c, v in zip(CELL_NAMES, joint.as_tuple())}
        worst = max(abs(v - fx.expected[c]) for c, v in got.items())
        return CheckResult(fx.name, worst <= fx.tolerance, f"max cell error {worst:.2e}")

    def _check_quadrature(self, fx: GoldenFixture) -> CheckResult:
        kind = ModelKind(fx.inputs["kind"])
        data = QuasiData(indications=[IndicationQuasiData(**fx.inputs["data"])])
        hyper = HierHyperparams(**fx.inputs["hyper"])
        post = self.models.fit(kind, data, hyper, VERIFY_MCMC).indications[0]
        err = max(abs(post.q_high - fx.expected["q_high"]), abs(post.q_low - fx.expected["q_low"]))
        return CheckResult(
            fx.name,
            err <= fx.tolerance,
            f"Q_H {post.q_high:.4f} vs {fx.expected['q_high']:.4f}, Q_L {post.q_low:.4f} vs {fx.expected['q_low']:.4f}",
        )

    def check_fixture(self, fx: GoldenFixture) -> CheckResult:
        try:
            return self._checkers[fx.oracle](fx)
        except (KeyError, TypeError, ValueError, RomiError) as e:
            return CheckResult(fx.name, False, f"{type(e).__name__}: {e}")

    def check_sampler_diagnostics(self) -> List[CheckResult]:
        """ESS and acceptance at the default McmcConfig on a three-indication workload."""
        data = QuasiData(indications=[
            IndicationQuasiData(index=k, z_H2=z_h, n_H2=20, z_L2=z_l, n_L2=20, z_H1=z_h1, n_H1=14)
            for k, (z_h, z_l, z_h1) in enumerate([(10.4, 12.2, 7.0), (9.8, 11.6, 6.4), (12.6, 9.0, 8.6)])
        ])
        checks = []
        for kind in (ModelKind.V1, ModelKind.NC, ModelKind.V2):
            post = self.models.fit(kind, data, HierHyperparams(), McmcConfig(seed=7))
            low, high = ACCEPTANCE_RANGE
            bad_rates = {k: v for k, v in post.acceptance.items() if k != "log_tau2" and not low <= v <= high}
            min_ess = min(post.ess.values())
            checks.append(CheckResult(
                f"sampler_{kind.value}",
                not bad_rates and min_ess >= MIN_ESS,
                f"min ESS {min_ess:.0f}, acceptance {post.acceptance}",
            ))
        return checks

    def check_prior_moments(self, hyper: HierHyperparams = PRIOR_HYPER, mcmc: McmcConfig = PRIOR_MCMC,
                            K: int = 3) -> List[CheckResult]:
        """Likelihood-free chains of every hierarchical model against the analytic prior moments."""
        mcmc = mcmc.model_copy(update={"likelihood_on": False})
        data = QuasiData(indications=[
            IndicationQuasiData(index=k, z_H2=0.0, n_H2=0, z_L2=0.0, n_L2=0) for k in range(K)
        ])
        checks = []
        for kind in (ModelKind.V1, ModelKind.NC, ModelKind.V2):
            draws = self.models.sample(kind, data, hyper, mcmc)
            series = {
                "q_high": draws.q_high.mean(axis=1),
                "tau2": draws.tau2,
                "mu": draws.mu,
                "mu0": draws.mu0,
                "mu1": draws.mu1,
                "q": draws.q,
                "omega": draws.omega,
            }
            if draws.beta is not None:
                series["spike"] = draws.spike.mean(axis=1)
                series["drift_sq"] = (draws.beta ** 2).mean(axis=1)

            scores = {}
            moments = prior_moments(kind, hyper)
            for name in ("mu", "mu0", "mu1"):
                if series[name] is not None:
                    series[f"{name}_var"] = (series[name] - moments[name]) ** 2
            for name, expected in moments.items():
                x = series[name]
                scores[name] = abs(float(np.mean(x)) - expected) / monte_carlo_se(x)
            worst = max(scores, key=scores.get)
            checks.append(CheckResult(
                f"prior_{kind.value}",
                all(z <= PRIOR_MCSE_BOUND for z in scores.values()),
                ", ".join(f"{name} {z:.2f}" for name, z in scores.items()) + f" MCSE (worst {worst})",
            ))
        return checks

    def check_drift(self, config_path: Union[str, Path], n_reps: Optional[int] = None,
                    workers: Optional[int] = None) -> List[CheckResult]:
        """
        ROMI-v1 and ROMI-v2 on the drift scenarios under one master seed; v2 must not
        trail v1 by more than DRIFT_MARGIN CSP points.

        Raises:
            ConfigError: if the config does not list both romi_v1 and romi_v2
        """
        config_path = Path(config_path)
        cfg = parse_run_config(load_structured(config_path), base_dir=config_path.parent)
        if not {DesignKind.ROMI_V1, DesignKind.ROMI_V2} <= set(cfg.designs):
            raise ConfigError(
                "the drift check compares romi_v1 with romi_v2",
                context={"config": str(config_path), "designs": [d.value for d in cfg.designs]},
            )
        seed = cfg.seed if cfg.seed is not None else 0

        checks = []
        for scenario in scenario_service.load_scenarios(cfg.scenario_file):
            csp = {}
            for kind in (DesignKind.ROMI_V1, DesignKind.ROMI_V2):
                oc = simulation_service.simulate(
                    cfg.design_config(kind, scenario.K), scenario, n_reps or cfg.n_reps, seed, workers=workers, progress=False,
                )
                csp[kind] = oc.csp
            v1, v2 = csp[DesignKind.ROMI_V1], csp[DesignKind.ROMI_V2]
            checks.append(CheckResult(
                f"drift_{scenario.name}",
                drift_criterion_holds(v1, v2),
                f"CSP v2 {v2} vs v1 {v1} (margin {DRIFT_MARGIN})",
            ))
        return checks

    def check_benchmark(self, config_path: Union[str, Path], reference_path: Union[str, Path],
                       n_reps: Optional[int] = None, workers: Optional[int] = None) -> List[CheckResult]:
        """Simulate the committed benchmark config and compare against the reference values."""
        config_path = Path(config_path)
        cfg = parse_run_config(load_structured(config_path), base_dir=config_path.parent)
        reference: Dict[str, Any] = load_structured(Path(reference_path))
        skip = set(reference.get("documented_discrepancies", []))
        seed = cfg.seed if cfg.seed is not None else 0

        checks = []
        for scenario in scenario_service.load_scenarios(cfg.scenario_file):
            if scenario.name in skip or scenario.name not in reference["scenarios"]:
                continue
            expected_rows = reference["scenarios"][scenario.name]
            for kind in cfg.designs:
                expected = expected_rows.get(kind.label)
                if expected is None:
                    continue
                oc = simulation_service.simulate(
                    cfg.design_config(kind, scenario.K), scenario, n_reps or cfg.n_reps, seed, workers=workers, progress=False,
                )
                problems = []
                for ind, (h, l) in zip(oc.indications, expected["pct"]):
                    if abs(ind.pct_high - h) > BENCHMARK_TOLERANCE["pct"] or abs(ind.pct_low - l) > BENCHMARK_TOLERANCE["pct"]:
                        problems.append(f"I{ind.index + 1} {ind.pct_high:.1f}/{ind.pct_low:.1f} vs {h}/{l}")
                if expected.get("csp") is not None and (oc.csp is None or abs(oc.csp - expected["csp"]) > BENCHMARK_TOLERANCE["csp"]):
                    problems.append(f"CSP {oc.csp} vs {expected['csp']}")
                if abs(oc.avg_total_n - expected["n"]) > BENCHMARK_TOLERANCE["n"]:
                    problems.append(f"N {oc.avg_total_n:.1f} vs {expected['n']}")
                checks.append(CheckResult(f"benchmark_{scenario.name}_{kind.value}", not problems, "; ".join(problems)))
        return checks

    def verify(self, directory: Union[str, Path], level: str = "quick",
               benchmark_config: Optional[Union[str, Path]] = None,
               benchmark_reference: Optional[Union[str, Path]] = None,
               n_reps: Optional[int] = None,
               workers: Optional[int] = None,
               drift_config: Optional[Union[str, Path]] = None) -> VerificationReport:
        """
        Check the production code against the golden fixtures; level 'full' adds
        sampler diagnostics, the prior moment checks, the benchmark reproduction
        and the drift comparison.

        Raises:
            FixtureError: if fixtures are missing or corrupt
        """
        if level not in ("quick", "full"):
            raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
        started = time.perf_counter()
        report = VerificationReport(level=level)
        for fx in self.load_fixtures(directory):
            result = self.check_fixture(fx)
            logger.debug(f"{result.name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
            report.checks.append(result)

        if level == "full":
            report.checks.extend(self.check_sampler_diagnostics())
            report.checks.extend(self.check_prior_moments())
            if benchmark_config is not None and benchmark_reference is not None:
                report.checks.extend(self.check_benchmark(benchmark_config, benchmark_reference, n_reps, workers))
            if drift_config is not None:
                report.checks.extend(self.check_drift(drift_config, n_reps, workers))

        report.duration = time.perf_counter() - started
        logger.info(f"verify {level}: {len(report.checks) - len(report.failed)}/{len(report.checks)} checks passed")
        return report


validation_service = ValidationService()
