"""Couplings with prescribed marginals.

Covers the independent (product) baseline, the maximal coupling attaining
the total-variation mismatch probability, exhaustive optimal transport on
tiny alphabets, and the mutual-information-limited transport problem

    min { E[g(W, Z)] : couplings of (pw, train law), I(W; Z) <= r }

solved along the entropic-regularization path: for each regularizer eps the
Sinkhorn fixed point minimizes E[g] + eps * I exactly, so it is one point
of the frontier; eps is bisected until the achieved rate matches r.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import NonConvergenceError
from .measures import FiniteDistribution, _as_masses
from .scenario import Scenario, gap_matrix

__all__ = [
    "Coupling",
    "product_coupling_gap",
    "maximal_coupling",
    "ot_brute_force",
    "coupling_min_gap_at_rate",
    "entropic_min_cost",
]

MARGINAL_TOL = 1e-8
OT_ALPHABET_CAP = 4
RATE_TOL = 1e-6
EPS_FLOOR, EPS_CEIL = 1e-9, 1e9


@dataclass(frozen=True)
class Coupling:
    """Joint mass with prescribed row and column marginals."""

    mass: np.ndarray
    row_marginal: FiniteDistribution
    col_marginal: FiniteDistribution

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if np.any(m < -1e-15):
            raise ValueError("coupling mass entries must be nonnegative")
        m = np.clip(m, 0.0, None)
        if np.abs(m.sum(axis=1) - self.row_marginal.probs).max() > MARGINAL_TOL:
            raise ValueError("row sums deviate from the target marginal")
        if np.abs(m.sum(axis=0) - self.col_marginal.probs).max() > MARGINAL_TOL:
            raise ValueError("column sums deviate from the target marginal")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def mismatch_probability(self) -> float:
        """Mass off the diagonal (square couplings only)."""
        return 1.0 - float(np.trace(self.mass))

    def mutual_information(self) -> float:
        return _mi_of_mass(self.mass)


def _mi_of_mass(mass: np.ndarray) -> float:
    rows = mass.sum(axis=1)
    cols = mass.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(mass) - np.log(rows[:, None] * cols[None, :])
        terms = np.where(mass > 0, mass * log_ratio, 0.0)
    return max(float(terms.sum()), 0.0)


def product_coupling_gap(pw, s: Scenario) -> float:
    """Expected gap of the product coupling: E_pw[L_test - L_train].

    This is the exact rate-zero value of the coupling frontier, since the
    expected empirical risk equals the training-population risk.
    """
    w = _as_masses(pw)
    if w.size != s.n_hypotheses:
        raise ValueError("output law does not match the hypothesis grid")
    return float(w @ (s.population_risk() - s.train_population_risk()))


def maximal_coupling(p, q) -> Coupling:
    """Coupling of (p, q) with mismatch probability exactly the TV distance.

    Diagonal mass min(p_i, q_i); the leftover mass is spread as the product
    of the normalized residuals (one valid choice among many).
    """
    pm, qm = _as_masses(p), _as_masses(q)
    if pm.shape != qm.shape:
        raise ValueError(f"alphabet sizes differ: {pm.size} vs {qm.size}")
    diag = np.minimum(pm, qm)
    mass = np.diag(diag)
    tv = float((pm - diag).sum())
    if tv > 1e-15:
        mass = mass + np.outer(pm - diag, qm - diag) / tv
    return Coupling(mass, FiniteDistribution(pm), FiniteDistribution(qm))


def ot_brute_force(pw, pz, cost) -> float:
    """Exact transport minimum by enumerating transportation-polytope vertices.

    Vertices are the basic feasible solutions whose support is a spanning
    forest of the bipartite alphabet graph; every spanning tree is solved by
    leaf elimination and feasible ones are compared.  Alphabets capped at 4.
    """
    a, b = _as_masses(pw), _as_masses(pz)
    c = np.asarray(cost, dtype=float)
    m, n = a.size, b.size
    if c.shape != (m, n):
        raise ValueError(f"cost shape {c.shape} does not match marginals ({m}, {n})")
    if m > OT_ALPHABET_CAP or n > OT_ALPHABET_CAP:
        raise ValueError(f"alphabets capped at {OT_ALPHABET_CAP} for brute force")
    cells = [(i, j) for i in range(m) for j in range(n)]
    best = math.inf
    for support in itertools.combinations(cells, m + n - 1):
        parent = list(range(m + n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for i, j in support:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic:
            continue
        flow = _solve_tree_flow(support, a, b, m, n)
        if flow is None:
            continue
        value = sum(f * c[i, j] for (i, j), f in zip(support, flow))
        best = min(best, value)
    return best


def _solve_tree_flow(support, a, b, m, n):
    """Unique flow on a spanning tree; None when it leaves the polytope."""
    remaining = np.concatenate([a, b]).astype(float)
    adjacency: dict[int, list[int]] = {}
    for e, (i, j) in enumerate(support):
        adjacency.setdefault(i, []).append(e)
        adjacency.setdefault(m + j, []).append(e)
    alive = [True] * len(support)
    degree = {node: len(es) for node, es in adjacency.items()}
    flow = [0.0] * len(support)
    order = sorted(adjacency)
    for _ in range(len(support)):
        leaf = next(node for node in order if degree.get(node, 0) == 1)
        e = next(e for e in adjacency[leaf] if alive[e])
        i, j = support[e]
        other = m + j if leaf == i else i
        f = remaining[leaf]
        if f < -1e-12:
            return None
        flow[e] = max(f, 0.0)
        remaining[leaf] = 0.0
        remaining[other] -= f
        alive[e] = False
        degree[leaf] -= 1
        degree[other] -= 1
    if np.abs(remaining).max() > 1e-9:
        return None
    return flow


def _exact_min_cost(a, b, cost) -> float:
    """Unregularized transport optimum via linear programming."""
    m, n = cost.shape
    eq_rows = []
    rhs = []
    for i in range(m):
        row = np.zeros(m * n)
        row[i * n:(i + 1) * n] = 1.0
        eq_rows.append(row)
        rhs.append(a[i])
    for j in range(n - 1):  # last column constraint is redundant
        row = np.zeros(m * n)
        row[j::n] = 1.0
        eq_rows.append(row)
        rhs.append(b[j])
    res = linprog(cost.reshape(-1), A_eq=np.array(eq_rows), b_eq=np.array(rhs),
                  bounds=(0.0, None), method="highs")
    if not res.success:
        raise NonConvergenceError(f"transport LP failed: {res.message}")
    return float(res.fun)


def _sinkhorn_log(cost, log_a, log_b, eps, f, g, tol=1e-11, max_iter=20_000):
    """Log-domain alternating marginal scaling for the entropic problem."""
    a = np.exp(log_a)
    converged = False
    for _ in range(max_iter):
        f = -eps * _lse((g[None, :] - cost) / eps + log_b[None, :], axis=1)
        g = -eps * _lse((f[:, None] - cost) / eps + log_a[:, None], axis=0)
        log_pi = log_a[:, None] + log_b[None, :] + (f[:, None] + g[None, :] - cost) / eps
        row_err = np.abs(np.exp(_lse(log_pi, axis=1)) - a).max()
        if row_err < tol:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"marginal scaling did not converge at regularization {eps}"
        )
    return f, g, log_pi


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


class _EntropicPath:
    """Warm-started Sinkhorn evaluations along the regularization path.

    Small regularizers are reached by annealing in half-decade steps from
    the nearest solved value, which keeps the scaling iterations stable.
    """

    def __init__(self, cost, a, b):
        self.cost = cost
        self.log_a = np.log(a)
        self.log_b = np.log(b)
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def _nearest(self, eps: float) -> float | None:
        if not self._cache:
            return None
        return min(self._cache, key=lambda e: abs(math.log(e) - math.log(eps)))

    def at(self, eps: float):
        nearest = self._nearest(eps)
        if nearest is None:
            f0 = np.zeros(self.cost.shape[0])
            g0 = np.zeros(self.cost.shape[1])
            start = max(eps, 1.0)
        else:
            f0, g0 = self._cache[nearest]
            start = nearest
        steps = max(0, math.ceil(abs(math.log10(eps) - math.log10(start)) / 0.5))
        ladder = np.geomspace(start, eps, steps + 1)[1:] if steps else [eps]
        f, g = f0, g0
        for e in ladder:
            f, g, log_pi = _sinkhorn_log(self.cost, self.log_a, self.log_b, float(e), f, g)
            self._cache[float(e)] = (f, g)
        pi = np.exp(log_pi)
        pi = pi / pi.sum()
        return pi, _mi_of_mass(pi), float((pi * self.cost).sum())


def entropic_min_cost(pw, pz, cost, eps: float):
    """One entropic-path point: (coupling, mutual information, expected cost)."""
    a, b = _as_masses(pw), _as_masses(pz)
    c = np.asarray(cost, dtype=float)
    ia, ib = a > 0, b > 0
    path = _EntropicPath(c[np.ix_(ia, ib)], a[ia], b[ib])
    pi_red, mi, value = path.at(eps)
    pi = np.zeros_like(c)
    pi[np.ix_(ia, ib)] = pi_red
    return Coupling(pi, FiniteDistribution(a), FiniteDistribution(b)), mi, value


def coupling_min_gap_at_rate(pw, s: Scenario, rate: float, *,
                             rate_tol: float = RATE_TOL) -> float:
    """Smallest expected gap over couplings of (pw, train law) with I <= rate.

    At rate 0 this is the product-coupling value; beyond the rate of the
    unregularized transport optimum it is that optimum (computed exactly);
    in between, the entropic regularizer is bisected until the achieved
    mutual information matches ``rate``.  The returned value always comes
    from a coupling with I >= rate, so it never exceeds the true frontier
    value at ``rate`` (safe as a generalization-error lower bound).
    """
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    w = _as_masses(pw)
    if w.size != s.n_hypotheses:
        raise ValueError("output law does not match the hypothesis grid")
    if rate == 0:
        return product_coupling_gap(pw, s)
    cost_full = gap_matrix(s).values  # (n_w, n_z); minimized
    b_full = s.train_dist.probs
    ia, ib = w > 0, b_full > 0
    a, b, cost = w[ia], b_full[ib], cost_full[np.ix_(ia, ib)]
    if math.isinf(rate):
        return _exact_min_cost(a, b, cost)
    path = _EntropicPath(cost, a, b)

    eps_lo = 1e-3  # high-information side
    _, mi_lo, val_lo = path.at(eps_lo)
    while mi_lo < rate and eps_lo > EPS_FLOOR:
        eps_lo /= 10.0
        _, mi_lo, val_lo = path.at(eps_lo)
    if mi_lo < rate:
        # the requested rate exceeds what even near-unregularized transport uses
        return _exact_min_cost(a, b, cost)

    eps_hi = 1e3  # low-information side
    _, mi_hi, val_hi = path.at(eps_hi)
    while mi_hi > rate and eps_hi < EPS_CEIL:
        eps_hi *= 10.0
        _, mi_hi, val_hi = path.at(eps_hi)
    if mi_hi > rate:
        return val_hi  # still above the target rate: feasible-side value

    best_val, best_mi = val_lo, mi_lo
    for _ in range(200):
        if abs(best_mi - rate) <= rate_tol:
            break
        if eps_hi / eps_lo <= 1.0 + 1e-12:
            break
        eps_mid = math.sqrt(eps_lo * eps_hi)
        _, mi_mid, val_mid = path.at(eps_mid)
        if mi_mid >= rate:
            eps_lo = eps_mid
            if mi_mid < best_mi:
                best_val, best_mi = val_mid, mi_mid
        else:
            eps_hi = eps_mid
    return best_val
