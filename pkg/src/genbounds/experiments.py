"""Configuration-driven experiment runners with deterministic CSV/SVG output.

Runners consume an :class:`~genbounds.config.ExperimentConfig` and produce a
:class:`SweepResult` table (curve sweeps, misspecification tables, learner
reports) or a :class:`ValidationReport`.  All rate columns are in nats
unless the bits display unit is selected, in which case rate-like columns
are rescaled by 1/ln(2) and renamed; bound values are in loss units either
way.  Output is byte-deterministic for a fixed (config, seed, unit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .bounds import (
    gen_tail_bound,
    mi_bound,
    mismatched_mi_bound,
    misspec_bounds,
    per_sample_mi_bound,
    subgaussian_gap_lower,
)
from .config import ExperimentConfig
from .coupling import coupling_min_gap_at_rate, product_coupling_gap
from .errors import ConfigError
from .learners import (
    enumerate_joint,
    erm_aux_risk_exact,
    exact_gen_error,
    exact_mi,
    gap_tail_prob,
    gibbs,
    output_law,
    per_sample_mi,
)
from .measures import (
    FiniteDistribution,
    hoeffding_sigma,
    kl_divergence,
    renyi_divergence,
)
from .rd_solver import GapRateSolver, batched_max_gap_values
from .scenario import Scenario, scenario
from .svg import render_line_chart

__all__ = [
    "SweepResult",
    "SweepRow",
    "ValidationReport",
    "ValidationRow",
    "run_curve",
    "run_constrained_curve",
    "run_misspec",
    "run_learner",
    "run_validate",
    "emit_plot",
    "write_manifest",
]

LN2 = math.log(2.0)
SANDWICH_SLACK = 1e-8
TAIL_SLACK = 1e-12
TAIL_GRID_SIZE = 50


@dataclass(frozen=True)
class SweepRow:
    x: float
    values: dict
    flags: str = "ok"


@dataclass
class SweepResult:
    """A sweep table: one x column, named value columns, flags, config hash."""

    x_name: str
    columns: list
    rows: list
    config_hash: str
    unit: str = "nats"

    def to_csv_text(self) -> str:
        header = [self.x_name, *self.columns, "flags", "config_hash"]
        lines = [",".join(header)]
        for row in self.rows:
            cells = [f"{row.x:.12g}"]
            for col in self.columns:
                cells.append(f"{row.values[col]:.12g}")
            cells.append(row.flags)
            cells.append(self.config_hash)
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def column(self, name: str) -> np.ndarray:
        return np.array([row.values[name] for row in self.rows])

    @property
    def xs(self) -> np.ndarray:
        return np.array([row.x for row in self.rows])


def _sigma_for(s: Scenario) -> float:
    return hoeffding_sigma(float(s.loss.values.min()), float(s.loss.values.max()))


def _to_bits(result: SweepResult) -> SweepResult:
    if result.x_name.endswith("_nats"):
        result.x_name = result.x_name[:-5] + "_bits"
        result.rows = [SweepRow(x=row.x / LN2, values=row.values, flags=row.flags)
                       for row in result.rows]
    renamed = []
    for col in result.columns:
        if col.endswith("_nats"):
            new = col[:-5] + "_bits"
            for row in result.rows:
                row.values[new] = row.values.pop(col) / LN2
            renamed.append(new)
        else:
            renamed.append(col)
    result.columns = renamed
    result.unit = "bits"
    return result


def _curve_column(name: str, config: ExperimentConfig, s: Scenario,
                  r_grid: np.ndarray) -> np.ndarray:
    """Values of one bound column over the whole rate grid."""
    sigma2 = _sigma_for(s) ** 2
    if name == "mi_bound":
        return np.sqrt(2.0 * sigma2 * r_grid / s.n)
    if name == "mismatched_mi_bound":
        gamma = kl_divergence(s.train_dist, s.test_dist)
        return np.sqrt(2.0 * sigma2 * gamma + 2.0 * sigma2 * r_grid / s.n)
    if name == "max_gap":
        solver = GapRateSolver(s)
        return np.array([solver.value_at(float(r) / s.n, None) for r in r_grid])
    if name == "max_gap_over_mu":
        # worst case over on-diagonal (no-mismatch) Bernoulli instance laws
        if s.n_instances != 2:
            raise ConfigError(
                "[bounds] max_gap_over_mu: the distribution sweep needs a "
                "binary instance alphabet")
        ps = np.linspace(0.0, 1.0, config.mu_grid)
        sources = np.stack([1.0 - ps, ps], axis=1)
        pops = sources @ s.loss.values.T  # (B, n_w) population risks
        gains = pops[:, None, :] - s.loss.values.T[None, :, :]
        values = batched_max_gap_values(gains, sources, r_grid / s.n)
        return values.max(axis=0)
    raise ConfigError(f"[bounds] include: unknown bound {name!r}")


def run_curve(config: ExperimentConfig, seed: int = 0, unit: str = "nats") -> SweepResult:
    """Evaluate the requested bound columns over the rate grid."""
    if config.scenario is None:
        raise ConfigError("[scenario] section required for curve runs")
    if config.r_grid is None:
        raise ConfigError("[sweep] r_grid required for curve runs")
    if not config.bounds:
        raise ConfigError("[bounds] include: at least one bound required")
    s = config.scenario
    r_grid = np.asarray(config.r_grid, dtype=float)
    columns = {name: _curve_column(name, config, s, r_grid) for name in config.bounds}
    rows = []
    for k, r in enumerate(r_grid):
        values = {name: float(col[k]) for name, col in columns.items()}
        flags = "ok" if all(math.isfinite(v) for v in values.values()) else "vacuous"
        rows.append(SweepRow(x=float(r), values=values, flags=flags))
    result = SweepResult(x_name="r_nats", columns=list(columns), rows=rows,
                         config_hash=config.hash_for(seed, unit))
    return _to_bits(result) if unit == "bits" else result


def run_constrained_curve(config: ExperimentConfig, seed: int = 0,
                          unit: str = "nats") -> SweepResult:
    """Per-sample gap curve with and without the auxiliary-risk floor.

    Both columns are evaluated at r/n; the floor is the exact expected ERM
    auxiliary risk of the scenario.
    """
    if config.scenario is None or config.scenario.aux_loss is None:
        raise ConfigError("[scenario] aux_loss required for constrained runs")
    if config.r_grid is None:
        raise ConfigError("[sweep] r_grid required for constrained runs")
    s = config.scenario
    v_n = erm_aux_risk_exact(s)
    plain = GapRateSolver(s)
    constrained = GapRateSolver(s, min_aux_risk=v_n)
    rows = []
    for r in config.r_grid:
        rho = float(r) / s.n
        values = {
            "max_gap": plain.value_at(rho, None),
            "max_gap_aux": constrained.value_at(rho, None),
        }
        rows.append(SweepRow(x=float(r), values=values))
    result = SweepResult(x_name="r_nats", columns=["max_gap", "max_gap_aux"],
                         rows=rows, config_hash=config.hash_for(seed, unit))
    return _to_bits(result) if unit == "bits" else result


def run_misspec(config: ExperimentConfig, seed: int = 0, unit: str = "nats") -> SweepResult:
    """Both misspecification bounds over the divergence-budget grid."""
    if config.misspec is None:
        raise ConfigError("[misspec] section required for misspec runs")
    m = config.misspec
    rows = []
    for gamma in m.gamma_grid:
        pair = misspec_bounds(m.eps_base, m.eps_base_half_delta, m.sigma2,
                              float(gamma), m.betas, m.delta)
        rows.append(SweepRow(x=float(gamma),
                             values={"bound_a": pair.bound_a, "bound_b": pair.bound_b},
                             flags=f"{pair.better}_better"))
    result = SweepResult(x_name="gamma_nats", columns=["bound_a", "bound_b"],
                         rows=rows, config_hash=config.hash_for(seed, unit))
    return _to_bits(result) if unit == "bits" else result


def run_learner(config: ExperimentConfig, seed: int = 0, unit: str = "nats") -> SweepResult:
    """Exact-enumeration report for one configured learner."""
    if config.scenario is None:
        raise ConfigError("[scenario] section required for learner runs")
    if config.learner is None:
        raise ConfigError("[learner] section required for learner runs")
    s = config.scenario
    joint = enumerate_joint(s, config.learner)
    info = exact_mi(joint)
    per_sample = [per_sample_mi(joint, i) for i in range(s.n)]
    sigma2 = _sigma_for(s) ** 2
    gamma = kl_divergence(s.train_dist, s.test_dist)
    pw = output_law(joint)
    gen = exact_gen_error(joint)
    values = {
        "gen_error": gen,
        "mi_nats": info,
        "max_gap": GapRateSolver(s).value_at(info / s.n),
        "mi_bound": mi_bound(sigma2, s.n, info),
        "mismatched_mi_bound": mismatched_mi_bound(sigma2, s.n, info, gamma),
        "per_sample_mi_bound": per_sample_mi_bound(sigma2, per_sample, gamma),
        "coupling_lower": coupling_min_gap_at_rate(pw, s, info / s.n),
        "independent_gap": product_coupling_gap(pw, s),
    }
    rows = [SweepRow(x=float(s.n), values=values)]
    result = SweepResult(x_name="n", columns=list(values), rows=rows,
                         config_hash=config.hash_for(seed, unit))
    return _to_bits(result) if unit == "bits" else result


# -- validation suite -------------------------------------------------------


@dataclass(frozen=True)
class ValidationRow:
    scenario_id: int
    learner: str
    inequality: str
    lhs: float
    rhs: float
    ok: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class ValidationReport:
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.ok for row in self.rows)

    def failures(self) -> list:
        return [row for row in self.rows if not row.ok]

    def summary_text(self) -> str:
        lines = []
        for row in self.rows:
            status = "ok  " if row.ok else "FAIL"
            lines.append(
                f"{status} scenario={row.scenario_id:02d} learner={row.learner:<16} "
                f"{row.inequality:<34} lhs={row.lhs: .9f} rhs={row.rhs: .9f} "
                f"slack={row.slack: .3e}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: {len(self.rows)} inequalities, "
                     f"{len(self.failures())} violated")
        return "\n".join(lines) + "\n"


def _random_tiny_scenario(rng: np.random.Generator) -> Scenario:
    n_hyp = int(rng.integers(2, 4))
    n = int(rng.integers(1, 6))
    loss = rng.uniform(0.0, 1.0, size=(n_hyp, 2))
    test = rng.uniform(0.15, 0.85)
    train = rng.uniform(0.15, 0.85)
    return scenario(FiniteDistribution.bernoulli(test),
                    FiniteDistribution.bernoulli(train),
                    np.arange(n_hyp, dtype=float), loss, n=n)


def validation_suite(count: int, seed: int):
    """Deterministic list of tiny scenarios for the sandwich/tail checks."""
    out = []
    for k in range(count):
        rng = np.random.Generator(np.random.Philox(seed * 1_000_003 + k))
        out.append(_random_tiny_scenario(rng))
    return out


def run_validate(config: ExperimentConfig, seed: int = 0,
                 corrupt: str | None = None) -> ValidationReport:
    """Sandwich and tail inequalities on a seeded suite of tiny scenarios.

    Every lower bound must sit below the exact generalization error, which
    must sit below the gap-curve value at the measured information rate,
    which must sit below the closed-form information bounds.  ``corrupt``
    names a bound to deliberately shift (test hook for the negative control).
    """
    report = ValidationReport()
    betas = config.validate_betas
    scenarios = validation_suite(config.validate_count, seed)

    def tweak(name: str, value: float, direction: float) -> float:
        if corrupt == name:
            return value + 0.05 * direction
        return value

    for sid, s in enumerate(scenarios):
        sigma2 = _sigma_for(s) ** 2
        gamma = kl_divergence(s.train_dist, s.test_dist)
        alpha = _sigma_for(s)
        solver = GapRateSolver(s)
        for beta in betas:
            spec = gibbs(beta)
            joint = enumerate_joint(s, spec)
            gen = exact_gen_error(joint)
            info = exact_mi(joint)
            per_sample = [per_sample_mi(joint, i) for i in range(s.n)]
            pw = output_law(joint)
            rd_value = tweak("max_gap", solver.value_at(info / s.n), -1.0)
            upper_mi = tweak("mismatched_mi_bound",
                             mismatched_mi_bound(sigma2, s.n, info, gamma), -1.0)
            upper_per_sample = tweak("per_sample_mi_bound",
                                     per_sample_mi_bound(sigma2, per_sample, gamma), -1.0)
            lower_coupling = tweak("coupling_lower",
                                   coupling_min_gap_at_rate(pw, s, info / s.n), 1.0)
            if info > 1e-12:
                lower_sub = subgaussian_gap_lower(product_coupling_gap(pw, s),
                                                  alpha, s.n, info)
            else:
                lower_sub = product_coupling_gap(pw, s)
            lower_sub = tweak("subgaussian_lower", lower_sub, 1.0)
            name = spec.describe()
            checks = [
                ("coupling_lower<=gen_error", lower_coupling, gen + SANDWICH_SLACK),
                ("subgaussian_lower<=gen_error", lower_sub, gen + SANDWICH_SLACK),
                ("gen_error<=max_gap", gen, rd_value + SANDWICH_SLACK),
                ("max_gap<=mismatched_mi_bound", rd_value, upper_mi + SANDWICH_SLACK),
                ("gen_error<=per_sample_mi_bound", gen,
                 upper_per_sample + SANDWICH_SLACK),
            ]
            for label, lhs, rhs in checks:
                report.rows.append(ValidationRow(
                    scenario_id=sid, learner=name, inequality=label,
                    lhs=float(lhs), rhs=float(rhs), ok=lhs <= rhs))

            order2_mm = _order2(s.train_dist, s.test_dist)
            order2_joint = _order2_joint(joint)
            worst = None
            pop = s.population_risk()
            eta_max = float(np.abs(pop[None, :] - joint.emp_risk).max())
            for eta in np.linspace(0.0, eta_max * 1.05, TAIL_GRID_SIZE):
                lhs = gap_tail_prob(joint, float(eta))
                rhs = tweak("gen_tail_bound",
                            gen_tail_bound(sigma2, s.n, float(eta), order2_mm,
                                           order2_joint), -1.0)
                if worst is None or lhs - rhs > worst[0]:
                    worst = (lhs - rhs, float(eta), lhs, rhs)
            report.rows.append(ValidationRow(
                scenario_id=sid, learner=name,
                inequality=f"tail_prob<=gen_tail_bound@eta={worst[1]:.4f}",
                lhs=worst[2], rhs=worst[3] + TAIL_SLACK, ok=worst[2] <= worst[3] + TAIL_SLACK))
    return report


def _order2(p: FiniteDistribution, q: FiniteDistribution) -> float:
    return renyi_divergence(p, q, 2.0)


def _order2_joint(joint) -> float:
    table = joint.table.reshape(-1)
    product = np.outer(joint.table.sum(axis=1), joint.table.sum(axis=0)).reshape(-1)
    return renyi_divergence(FiniteDistribution(table), FiniteDistribution(product), 2.0)


# -- output emission --------------------------------------------------------


def emit_plot(result: SweepResult, path) -> None:
    """Write the sweep as a standalone SVG line chart (gaps at flagged rows)."""
    if not result.rows:
        raise ValueError("empty sweep result")
    series = []
    for col in result.columns:
        pts = []
        for row in result.rows:
            v = row.values[col]
            broken = ("vacuous" in row.flags) or ("infeasible" in row.flags)
            pts.append((row.x, None if (broken or not math.isfinite(v)) else v))
        series.append((col, pts))
    text = render_line_chart(series, x_label=result.x_name,
                             y_label="bound value (loss units)")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_manifest(path, config_hash: str, wall_time: float) -> None:
    import scipy

    lines = [
        f"config_hash={config_hash}",
        f"genbounds_version={__version__}",
        f"numpy_version={np.__version__}",
        f"scipy_version={scipy.__version__}",
        f"wall_time_s={wall_time:.3f}",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
