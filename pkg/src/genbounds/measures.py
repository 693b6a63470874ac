"""Finite-alphabet probability distributions and divergence measures.

All information quantities are in nats.  Divergences return ``math.inf``
when absolute continuity fails instead of raising, and the conventions
0*log(0) = 0 and 0*log(0/q) = 0 apply throughout.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "FiniteDistribution",
    "JointTable",
    "kl_divergence",
    "renyi_divergence",
    "chi_squared",
    "tv_distance",
    "mutual_information",
    "entropy",
    "hoeffding_sigma",
]

NORMALIZATION_TOL = 1e-12


def _as_masses(dist) -> np.ndarray:
    """Coerce a distribution-like argument to a validated mass vector."""
    if isinstance(dist, FiniteDistribution):
        return dist.probs
    return FiniteDistribution(dist).probs


class FiniteDistribution:
    """Probability vector over an indexed finite alphabet.

    Masses must be nonnegative and sum to one within 1e-12; inputs inside
    the tolerance are renormalized exactly at construction.  Instances are
    immutable (the backing array is read-only).
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probability vector must be one-dimensional and nonempty")
        if not np.all(np.isfinite(p)):
            raise ValueError("probability masses must be finite")
        if np.any(p < 0):
            raise ValueError("probability masses must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(
                f"masses sum to {total!r}; expected 1 within {NORMALIZATION_TOL}"
            )
        p = p / total
        p.setflags(write=False)
        self.probs = p

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    def entropy(self) -> float:
        return entropy(self)

    def __repr__(self) -> str:
        return f"FiniteDistribution({np.array2string(self.probs, separator=', ')})"

    @classmethod
    def bernoulli(cls, p: float) -> "FiniteDistribution":
        """Distribution over {0, 1} with mass ``p`` on the symbol 1."""
        return cls([1.0 - p, p])

    @classmethod
    def uniform(cls, size: int) -> "FiniteDistribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, index: int, size: int) -> "FiniteDistribution":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)


class JointTable:
    """Joint probability mass over a pair of finite alphabets.

    Entries are nonnegative with total mass one within 1e-12; marginals are
    recovered by summation.
    """

    __slots__ = ("mass",)

    def __init__(self, mass):
        m = np.asarray(mass, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("joint mass must be a nonempty matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("joint mass entries must be finite")
        if np.any(m < 0):
            raise ValueError("joint mass entries must be nonnegative")
        total = float(m.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(
                f"joint mass sums to {total!r}; expected 1 within {NORMALIZATION_TOL}"
            )
        m = m / total
        m.setflags(write=False)
        self.mass = m

    @property
    def shape(self):
        return self.mass.shape

    def row_marginal(self) -> FiniteDistribution:
        return FiniteDistribution(self.mass.sum(axis=1))

    def col_marginal(self) -> FiniteDistribution:
        return FiniteDistribution(self.mass.sum(axis=0))

    def flattened(self) -> FiniteDistribution:
        return FiniteDistribution(self.mass.reshape(-1))

    @classmethod
    def from_product(cls, row: FiniteDistribution, col: FiniteDistribution) -> "JointTable":
        return cls(np.outer(_as_masses(row), _as_masses(col)))


def _check_same_alphabet(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise ValueError(f"alphabet sizes differ: {p.size} vs {q.size}")


def kl_divergence(p, q) -> float:
    """KL divergence D(p || q) in nats; +inf when p is not dominated by q."""
    pm, qm = _as_masses(p), _as_masses(q)
    _check_same_alphabet(pm, qm)
    support = pm > 0
    if np.any(qm[support] == 0):
        return math.inf
    ps, qs = pm[support], qm[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def renyi_divergence(p, q, alpha: float) -> float:
    """Renyi divergence of order ``alpha`` > 1 in nats; +inf off support."""
    if not alpha > 1:
        raise ValueError(f"order must exceed 1, got {alpha!r}")
    pm, qm = _as_masses(p), _as_masses(q)
    _check_same_alphabet(pm, qm)
    support = pm > 0
    if np.any(qm[support] == 0):
        return math.inf
    ps, qs = pm[support], qm[support]
    total = float(np.sum(np.exp(alpha * np.log(ps) + (1.0 - alpha) * np.log(qs))))
    return max(math.log(total) / (alpha - 1.0), 0.0)


def chi_squared(p, q) -> float:
    """Pearson chi-squared divergence; +inf when p is not dominated by q."""
    pm, qm = _as_masses(p), _as_masses(q)
    _check_same_alphabet(pm, qm)
    zero_q = qm == 0
    if np.any(pm[zero_q] > 0):
        return math.inf
    support = ~zero_q
    diff = pm[support] - qm[support]
    return max(float(np.sum(diff * diff / qm[support])), 0.0)


def tv_distance(p, q) -> float:
    """Total variation distance, in [0, 1]."""
    pm, qm = _as_masses(p), _as_masses(q)
    _check_same_alphabet(pm, qm)
    return 0.5 * float(np.abs(pm - qm).sum())


def entropy(p) -> float:
    """Shannon entropy in nats."""
    pm = _as_masses(p)
    ps = pm[pm > 0]
    return max(-float(np.sum(ps * np.log(ps))), 0.0)


def mutual_information(joint) -> float:
    """Mutual information of a joint table: D(joint || product of marginals)."""
    if not isinstance(joint, JointTable):
        joint = JointTable(joint)
    m = joint.mass
    rows = m.sum(axis=1)
    cols = m.sum(axis=0)
    support = m > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(m) - np.log(rows[:, None] * cols[None, :])
        terms = np.where(support, m * log_ratio, 0.0)
    return max(float(terms.sum()), 0.0)


def hoeffding_sigma(loss_min: float, loss_max: float) -> float:
    """Sub-Gaussian parameter sigma valid for any variable bounded on the range.

    For a random variable confined to [loss_min, loss_max], sigma =
    (loss_max - loss_min) / 2 satisfies the MGF bound exp(sigma^2 s^2 / 2).
    """
    if not (math.isfinite(loss_min) and math.isfinite(loss_max)):
        raise ValueError("loss range must be finite")
    if loss_min > loss_max:
        raise ValueError(f"reversed range: [{loss_min}, {loss_max}]")
    return 0.5 * (loss_max - loss_min)
