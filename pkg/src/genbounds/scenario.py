"""Learning scenarios on finite alphabets: losses, risks, gap matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import FiniteDistribution

__all__ = [
    "LossMatrix",
    "Scenario",
    "GapMatrix",
    "scenario",
    "gap_matrix",
    "hypothesis_grid",
]


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    a = np.array(values, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite everywhere")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LossMatrix:
    """Loss values indexed (hypothesis, instance); every entry finite."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, 2, "loss matrix"))

    @property
    def n_hypotheses(self) -> int:
        return self.values.shape[0]

    @property
    def n_instances(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Scenario:
    """A finite learning problem: test law, training law, hypotheses, losses.

    ``loss`` (and the optional ``aux_loss``) are |hypotheses| x |instances|
    matrices; both distributions live on the instance alphabet; ``n`` is the
    training-sample size.
    """

    test_dist: FiniteDistribution
    train_dist: FiniteDistribution
    hypothesis_labels: np.ndarray
    loss: LossMatrix
    aux_loss: LossMatrix | None = None
    n: int = 1

    def __post_init__(self):
        labels = _frozen_array(self.hypothesis_labels, 1, "hypothesis labels")
        object.__setattr__(self, "hypothesis_labels", labels)
        if labels.size != self.loss.n_hypotheses:
            raise ValueError(
                f"{labels.size} hypothesis labels but loss has "
                f"{self.loss.n_hypotheses} rows"
            )
        if len(self.test_dist) != self.loss.n_instances:
            raise ValueError("test distribution does not match the instance alphabet")
        if len(self.train_dist) != self.loss.n_instances:
            raise ValueError("training distribution does not match the instance alphabet")
        if self.aux_loss is not None and self.aux_loss.values.shape != self.loss.values.shape:
            raise ValueError("auxiliary loss must have the same shape as the loss")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"sample size must be a positive integer, got {self.n!r}")

    @property
    def n_hypotheses(self) -> int:
        return self.loss.n_hypotheses

    @property
    def n_instances(self) -> int:
        return self.loss.n_instances

    def population_risk(self) -> np.ndarray:
        """Expected loss of each hypothesis under the test distribution."""
        return self.loss.values @ self.test_dist.probs

    def train_population_risk(self) -> np.ndarray:
        """Expected loss of each hypothesis under the training distribution."""
        return self.loss.values @ self.train_dist.probs

    def aux_train_population_risk(self) -> np.ndarray:
        if self.aux_loss is None:
            raise ValueError("scenario has no auxiliary loss")
        return self.aux_loss.values @ self.train_dist.probs


@dataclass(frozen=True)
class GapMatrix:
    """g(w, z) = population risk of w minus the loss at (w, z).

    Rows average to zero under the test distribution by construction.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, 2, "gap matrix"))


def scenario(test_dist, train_dist, hypothesis_labels, loss, aux_loss=None, n=1) -> Scenario:
    """Build a Scenario from plain arrays / lists."""
    test_d = test_dist if isinstance(test_dist, FiniteDistribution) else FiniteDistribution(test_dist)
    train_d = train_dist if isinstance(train_dist, FiniteDistribution) else FiniteDistribution(train_dist)
    loss_m = loss if isinstance(loss, LossMatrix) else LossMatrix(loss)
    aux_m = None
    if aux_loss is not None:
        aux_m = aux_loss if isinstance(aux_loss, LossMatrix) else LossMatrix(aux_loss)
    return Scenario(
        test_dist=test_d,
        train_dist=train_d,
        hypothesis_labels=hypothesis_labels,
        loss=loss_m,
        aux_loss=aux_m,
        n=int(n),
    )


def gap_matrix(s: Scenario) -> GapMatrix:
    """Centered generalization gap g(w, z) = L_test(w) - loss(w, z)."""
    pop = s.population_risk()
    return GapMatrix(pop[:, None] - s.loss.values)


def hypothesis_grid(points: int) -> np.ndarray:
    """Uniform grid {0, 1/(points-1), ..., 1} for interval hypothesis spaces."""
    if points < 2:
        raise ValueError(f"grid needs at least 2 points, got {points}")
    return np.linspace(0.0, 1.0, points)
