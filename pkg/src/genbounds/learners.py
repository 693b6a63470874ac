"""Exact analysis of concrete learners on tiny finite instances.

Enumerates the full joint law of (training dataset, output hypothesis) for
ERM, Gibbs, and constant learners, from which the generalization error,
mutual information, per-sample informations, and tail probabilities are
computed exactly.  Also evaluates the expected ERM risk under an auxiliary
loss, exactly and by seeded Monte Carlo with a bounded-differences margin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .measures import FiniteDistribution
from .scenario import Scenario

__all__ = [
    "LearnerSpec",
    "ExactJoint",
    "erm",
    "gibbs",
    "constant",
    "enumerate_joint",
    "exact_gen_error",
    "exact_mi",
    "per_sample_mi",
    "output_law",
    "gap_tail_prob",
    "erm_aux_risk_exact",
    "erm_aux_risk_mc",
    "AuxRiskEstimate",
]

ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class LearnerSpec:
    """A learning rule: 'erm', 'gibbs' (inverse temperature beta), or 'constant'.

    ERM breaks ties toward the lowest hypothesis index, which makes it a
    deterministic kernel; Gibbs weights hypotheses by exp(-beta * n * risk),
    so beta = 0 is the uniform rule and beta -> inf recovers ERM off ties.
    """

    kind: str
    beta: float = 0.0
    index: int = 0

    def __post_init__(self):
        if self.kind not in ("erm", "gibbs", "constant"):
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.kind == "gibbs" and not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"gibbs temperature must be finite and nonnegative, got {self.beta}")

    def describe(self) -> str:
        if self.kind == "gibbs":
            return f"gibbs(beta={self.beta:g})"
        if self.kind == "constant":
            return f"constant({self.index})"
        return "erm"


def erm() -> LearnerSpec:
    return LearnerSpec(kind="erm")


def gibbs(beta: float) -> LearnerSpec:
    return LearnerSpec(kind="gibbs", beta=beta)


def constant(index: int) -> LearnerSpec:
    return LearnerSpec(kind="constant", index=index)


@dataclass(frozen=True)
class ExactJoint:
    """Fully enumerated joint law over (dataset, hypothesis)."""

    scenario: Scenario
    datasets: np.ndarray       # (m, n) instance indices
    dataset_probs: np.ndarray  # (m,) product-law masses
    cond: np.ndarray           # (m, n_hyp) learner kernel
    table: np.ndarray          # dataset_probs[:, None] * cond
    emp_risk: np.ndarray       # (m, n_hyp) empirical risks

    @property
    def n_datasets(self) -> int:
        return self.datasets.shape[0]


def _enumerate_datasets(train_probs: np.ndarray, n_instances: int, n: int):
    coords = np.array(list(itertools.product(range(n_instances), repeat=n)),
                      dtype=int).reshape(n_instances ** n, n)
    counts = np.stack([(coords == z).sum(axis=1) for z in range(n_instances)], axis=1)
    logp = np.where(train_probs > 0,
                    np.log(np.where(train_probs > 0, train_probs, 1.0)), -math.inf)
    log_mass = np.where(counts > 0, counts * logp[None, :], 0.0).sum(axis=1)
    probs = np.exp(log_mass)
    return coords, counts, probs / probs.sum()


def enumerate_joint(s: Scenario, learner: LearnerSpec,
                    cap: int = ENUMERATION_CAP) -> ExactJoint:
    """Exact joint law of (dataset, learner output) under the training law."""
    m = s.n_instances ** s.n
    if m * s.n_hypotheses > cap:
        raise ValueError(
            f"{m} datasets x {s.n_hypotheses} hypotheses exceeds the cap {cap}"
        )
    coords, counts, probs = _enumerate_datasets(s.train_dist.probs, s.n_instances, s.n)
    emp_risk = (counts / s.n) @ s.loss.values.T  # (m, n_hyp)
    if learner.kind == "constant":
        if not 0 <= learner.index < s.n_hypotheses:
            raise ValueError(f"constant hypothesis index {learner.index} out of range")
        cond = np.zeros((m, s.n_hypotheses))
        cond[:, learner.index] = 1.0
    elif learner.kind == "erm":
        choice = np.argmin(emp_risk, axis=1)  # lowest index on exact ties
        cond = np.zeros((m, s.n_hypotheses))
        cond[np.arange(m), choice] = 1.0
    else:  # gibbs
        energy = -learner.beta * s.n * emp_risk
        energy -= energy.max(axis=1, keepdims=True)
        cond = np.exp(energy)
        cond /= cond.sum(axis=1, keepdims=True)
    table = probs[:, None] * cond
    return ExactJoint(scenario=s, datasets=coords, dataset_probs=probs,
                      cond=cond, table=table, emp_risk=emp_risk)


def exact_gen_error(j: ExactJoint) -> float:
    """Expected population-minus-empirical risk of the learner output."""
    pop = j.scenario.population_risk()
    return float((j.table * (pop[None, :] - j.emp_risk)).sum())


def _mi_of_table(table: np.ndarray) -> float:
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(table) - np.log(rows[:, None] * cols[None, :])
        terms = np.where(table > 0, table * log_ratio, 0.0)
    return max(float(terms.sum()), 0.0)


def exact_mi(j: ExactJoint) -> float:
    """Mutual information between the dataset and the output, in nats."""
    return _mi_of_table(j.table)


def per_sample_mi(j: ExactJoint, i: int) -> float:
    """Mutual information between one training sample and the output."""
    n = j.scenario.n
    if not 0 <= i < n:
        raise ValueError(f"sample index {i} out of range for n={n}")
    nz = j.scenario.n_instances
    z_i = j.datasets[:, i]
    marg = np.zeros((nz, j.table.shape[1]))
    np.add.at(marg, z_i, j.table)
    return _mi_of_table(marg)


def output_law(j: ExactJoint) -> FiniteDistribution:
    """Marginal law of the learner output over the hypothesis grid."""
    return FiniteDistribution(j.table.sum(axis=0))


def gap_tail_prob(j: ExactJoint, eta: float) -> float:
    """Exact probability that |population risk - empirical risk| >= eta."""
    if eta < 0:
        raise ValueError(f"threshold must be nonnegative, got {eta}")
    pop = j.scenario.population_risk()
    gaps = np.abs(pop[None, :] - j.emp_risk)
    return float(j.table[gaps >= eta].sum())


def erm_aux_risk_exact(s: Scenario, cap: int = ENUMERATION_CAP) -> float:
    """Expected minimum empirical auxiliary risk, by full dataset enumeration."""
    if s.aux_loss is None:
        raise ValueError("scenario has no auxiliary loss")
    m = s.n_instances ** s.n
    if m * s.n_hypotheses > cap:
        raise ValueError(
            f"{m} datasets x {s.n_hypotheses} hypotheses exceeds the cap {cap}"
        )
    _, counts, probs = _enumerate_datasets(s.train_dist.probs, s.n_instances, s.n)
    emp_aux = (counts / s.n) @ s.aux_loss.values.T
    return float(probs @ emp_aux.min(axis=1))


@dataclass(frozen=True)
class AuxRiskEstimate:
    """Monte Carlo estimate of the expected ERM auxiliary risk.

    ``margin`` gives the bounded-differences deviation radius for a *single*
    dataset's ERM value around its mean at the requested confidence; the
    mean of many trials concentrates much faster (see ``std_error``).
    """

    estimate: float
    std_error: float
    sensitivity: float
    n: int
    trials: int

    def margin(self, confidence: float) -> float:
        if not 0 < confidence < 1:
            raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
        fail = 1.0 - confidence
        return self.sensitivity * math.sqrt(math.log(2.0 / fail) / (2.0 * self.n))


def erm_aux_risk_mc(s: Scenario, trials: int, seed: int) -> AuxRiskEstimate:
    """Seeded Monte Carlo counterpart of :func:`erm_aux_risk_exact`.

    Uses a counter-based generator so identical seeds reproduce bit-identical
    estimates regardless of scheduling.
    """
    if s.aux_loss is None:
        raise ValueError("scenario has no auxiliary loss")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    aux = s.aux_loss.values
    sensitivity = float((aux.max(axis=1) - aux.min(axis=1)).max())
    rng = np.random.Generator(np.random.Philox(seed))
    draws = rng.choice(s.n_instances, size=(trials, s.n), p=s.train_dist.probs)
    counts = np.stack([(draws == z).sum(axis=1) for z in range(s.n_instances)], axis=1)
    emp_aux = (counts / s.n) @ aux.T
    values = emp_aux.min(axis=1)
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return AuxRiskEstimate(estimate=estimate, std_error=std_error,
                           sensitivity=sensitivity, n=s.n, trials=trials)
