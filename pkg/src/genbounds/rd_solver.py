"""Rate-limited maximum-gap curves via slope-swept alternating minimization.

The central object is the concave nondecreasing curve

    r  ->  max { E[g(W, Z)] : channels P(w|z), Z ~ train law, I(W; Z) <= r }

where g is the centered generalization gap of a scenario.  The curve is
traced parametrically: for each slope beta > 0 the tilted alternating
updates

    q(w)    <-  sum_z train(z) P(w|z)
    P(w|z)  propto  q(w) * exp(beta * g(w, z))

converge to a channel maximizing E[g] - I/beta, which yields one exact
point (rate, value) on the curve.  Queries between traced points are
answered by linear interpolation on the upper concave envelope, with the
bracketing slopes bisected until the bracket is tight; every interpolated
value is a certified lower estimate because each traced channel is
feasible.

An optional auxiliary-risk constraint E[aux(W, Z)] >= v adds a second
multiplier to the tilt, bisected on the feasible side until the constraint
is active.  The dataset-level variant runs the same machinery on the
product alphabet of all training samples.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleConstraintError
from .scenario import GapMatrix, Scenario, gap_matrix

__all__ = [
    "RDPoint",
    "RDCurve",
    "GapRateSolver",
    "ba_fixed_slope",
    "rd_curve",
    "max_gap_at_rate",
    "constrained_max_gap_at_rate",
    "dataset_max_gap_at_rate",
    "grid_search_max_gap",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
SLOPE_MIN = 1e-3
SLOPE_MAX = 1e3
SLOPE_GRID_SIZE = 64
RATE_JUMP_REFINE = 0.05   # nats; adjacent traced points further apart get bisected
CONSTRAINT_TOL = 1e-8
TIE_TOL = 1e-12
DATASET_CAP = 4096
GRID_SEARCH_CELL_CAP = 12
GRID_SEARCH_COMBO_CAP = 20_000_000


@dataclass(frozen=True)
class RDPoint:
    """One traced point: slope, achieved rate (nats), achieved expected gap."""

    slope: float
    rate: float
    value: float
    channel: np.ndarray  # conditional law, rows indexed by the source symbol
    aux_expectation: float | None = None
    aux_multiplier: float = 0.0
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class RDCurve:
    """Upper concave envelope of traced points, sorted by rate."""

    points: tuple[RDPoint, ...]

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def value_at(self, rate: float) -> float:
        return _interpolate(self.points, rate)


def _interpolate(points, rate: float) -> float:
    rates = [p.rate for p in points]
    if rate <= rates[0]:
        return points[0].value
    if rate >= rates[-1]:
        return points[-1].value
    hi = bisect_left(rates, rate)
    lo = hi - 1
    r0, r1 = rates[lo], rates[hi]
    v0, v1 = points[lo].value, points[hi].value
    if r1 - r0 <= 0:
        return max(v0, v1)
    w = (rate - r0) / (r1 - r0)
    return (1.0 - w) * v0 + w * v1


def _upper_envelope(points) -> list[RDPoint]:
    """Concave nondecreasing upper chain of (rate, value) points."""
    pts = sorted(points, key=lambda p: (p.rate, p.value))
    dedup: list[RDPoint] = []
    for p in pts:
        if dedup and p.rate - dedup[-1].rate <= 1e-14:
            if p.value > dedup[-1].value:
                dedup[-1] = p
        else:
            dedup.append(p)
    monotone: list[RDPoint] = []
    best = -math.inf
    for p in dedup:
        if p.value > best:
            monotone.append(p)
            best = p.value
    hull: list[RDPoint] = []
    for p in monotone:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b.rate - a.rate) * (p.value - a.value) - (b.value - a.value) * (
                p.rate - a.rate
            )
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


Z_FLOOR = 1e-300  # keeps partition sums loggable when a row's support dies


def _tilt_matrix(exponent: np.ndarray) -> np.ndarray:
    """Row-rescaled exponential tilt exp(exponent - row max).

    The dropped per-row constant cancels from the channel normalization and
    from objective differences, and keeps the entries in (0, 1].
    """
    return np.exp(exponent - exponent.max(axis=-1, keepdims=True))


def _channel_from(tilt: np.ndarray, q: np.ndarray) -> np.ndarray:
    z = np.maximum(tilt @ q, Z_FLOOR)
    return tilt * q[None, :] / z[:, None]


def _mutual_information_zw(source: np.ndarray, cond: np.ndarray) -> float:
    """I between the source and the channel output; source (nz,), cond (nz, nw)."""
    joint = source[:, None] * cond
    out = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(joint) - np.log(source[:, None] * out[None, :])
        terms = np.where(joint > 0, joint * log_ratio, 0.0)
    return max(float(terms.sum()), 0.0)


def _ba_core(tilt, source, q, slope, tol, max_iter):
    """Alternating maximization under a fixed row-rescaled tilt(z, w).

    Probability-domain updates: Z = tilt q, then q <- q * tilt^T (source/Z).
    Tracks the surrogate Lagrangian sum_z source(z) log Z(z) / slope, which
    is nondecreasing across iterations (up to the dropped row constants);
    stops once its improvement drops below ``tol``.
    """
    prev = -math.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        z = np.maximum(tilt @ q, Z_FLOOR)
        objective = float(source @ np.log(z)) / slope
        u = source / z
        u /= u.sum()
        q = q * (tilt.T @ u)
        q = q / q.sum()
        if objective - prev < tol:
            converged = True
            break
        prev = objective
    return q, iterations, converged


class GapRateSolver:
    """Evaluator for one scenario's rate-limited maximum-gap curve.

    Traced points are cached so repeated queries share work; warm starts
    chain along the slope grid.  With ``min_aux_risk`` set, every point is
    additionally constrained to E[aux] >= min_aux_risk via an inner
    multiplier bisection (scenario must carry an auxiliary loss).
    """

    def __init__(self, s: Scenario, *, min_aux_risk: float | None = None,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
        gain = gap_matrix(s).values.T  # (n_z, n_w)
        aux = None
        if min_aux_risk is not None:
            if s.aux_loss is None:
                raise ValueError("auxiliary constraint requires an auxiliary loss")
            aux = s.aux_loss.values.T
        self._init_arrays(gain, s.train_dist.probs, aux, min_aux_risk, tol, max_iter)

    @classmethod
    def for_dataset(cls, s: Scenario, cap: int = DATASET_CAP) -> "GapRateSolver":
        """Exact dataset-level solver over the product alphabet of n samples.

        Enumerates all |Z|^n training datasets (capped), with the gap
        averaged over the dataset; rates are then full-dataset rates.
        """
        solver = cls.__new__(cls)
        gain, source = _dataset_gain_and_source(s, cap)
        solver._init_arrays(gain, source, None, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
        return solver

    def _init_arrays(self, gain, source, aux, min_aux_risk, tol, max_iter):
        self._gain = np.asarray(gain, dtype=float)
        self._source = np.asarray(source, dtype=float)
        self._aux = None if aux is None else np.asarray(aux, dtype=float)
        self._min_aux = min_aux_risk
        self._tol = tol
        self._max_iter = max_iter
        self._nz, self._nw = self._gain.shape
        self._active = self._source > 0
        self._src_act = self._source[self._active]
        self._log_src_act = np.log(self._src_act)
        self._gain_act = self._gain[self._active]
        self._aux_act = None if self._aux is None else self._aux[self._active]
        self._points: dict[float, RDPoint] = {}
        self._warm: dict[float, np.ndarray] = {}
        self._last_multiplier = 1.0
        self._grid_done = False
        self.nonconverged_count = 0
        if self._min_aux is not None:
            reachable = float(self._src_act @ self._aux_act.max(axis=1))
            if self._min_aux > reachable + CONSTRAINT_TOL:
                raise InfeasibleConstraintError(
                    f"auxiliary-risk floor {self._min_aux} exceeds the maximum "
                    f"achievable value {reachable}"
                )

    # -- single points ----------------------------------------------------

    def point_at_slope(self, slope: float) -> RDPoint:
        if slope < 0:
            raise ValueError(f"slope must be nonnegative, got {slope}")
        key = float(slope)
        if key not in self._points:
            if key == 0.0:
                self._points[key] = self._zero_point()
            elif math.isinf(key):
                self._points[key] = self._saturation_point()
            else:
                self._points[key] = self._solve_slope(key)
        return self._points[key]

    def _warm_start(self, slope: float) -> np.ndarray:
        if not self._warm:
            return np.full(self._nw, -math.log(self._nw))
        nearest = min(self._warm, key=lambda s: abs(math.log(s) - math.log(slope)))
        return self._warm[nearest]

    def _run_ba(self, slope: float, aux_multiplier: float, log_q0):
        exponent = slope * self._gain_act
        if aux_multiplier != 0.0:
            exponent = exponent + aux_multiplier * self._aux_act
        log_q, iterations, converged = _ba_core(
            exponent, self._log_src_act, self._src_act, log_q0,
            slope, self._tol, self._max_iter,
        )
        if not converged:
            self.nonconverged_count += 1
        full_exp = slope * self._gain
        if aux_multiplier != 0.0:
            full_exp = full_exp + aux_multiplier * self._aux
        tilted = log_q[None, :] + full_exp
        cond = np.exp(tilted - _logsumexp_rows(tilted)[:, None])
        cond = cond / cond.sum(axis=1, keepdims=True)
        rate = _mutual_information_zw(self._source, cond)
        value = float((self._source[:, None] * cond * self._gain).sum())
        aux_val = None
        if self._aux is not None:
            aux_val = float((self._source[:, None] * cond * self._aux).sum())
        point = RDPoint(
            slope=slope, rate=rate, value=value, channel=cond,
            aux_expectation=aux_val, aux_multiplier=aux_multiplier,
            converged=converged, iterations=iterations,
        )
        return point, log_q

    def _solve_slope(self, slope: float) -> RDPoint:
        log_q0 = self._warm_start(slope)
        point, log_q = self._run_ba(slope, 0.0, log_q0)
        if self._min_aux is not None and point.aux_expectation < self._min_aux - CONSTRAINT_TOL:
            point, log_q = self._bisect_multiplier(slope, log_q)
        self._warm[slope] = log_q
        return point

    def _bisect_multiplier(self, slope: float, log_q):
        """Smallest multiplier making the auxiliary constraint active.

        Keeps the feasible-side iterate so the returned value never exceeds
        the true constrained optimum at its achieved rate.
        """
        target = self._min_aux
        t_lo = 0.0
        t_hi = max(self._last_multiplier, 1e-6)
        point, log_q = self._run_ba(slope, t_hi, log_q)
        while point.aux_expectation < target and t_hi < 1e12:
            t_lo = t_hi
            t_hi *= 4.0
            point, log_q = self._run_ba(slope, t_hi, log_q)
        if point.aux_expectation < target - CONSTRAINT_TOL:
            raise InfeasibleConstraintError(
                f"auxiliary-risk floor {target} unreachable at slope {slope}"
            )
        best, best_logq = point, log_q
        for _ in range(200):
            if best.aux_expectation - target <= CONSTRAINT_TOL:
                break
            if t_hi - t_lo <= 1e-15 * max(1.0, t_hi):
                break
            t_mid = 0.5 * (t_lo + t_hi)
            point, log_q = self._run_ba(slope, t_mid, log_q)
            if point.aux_expectation >= target:
                t_hi, best, best_logq = t_mid, point, log_q
            else:
                t_lo = t_mid
        self._last_multiplier = t_hi
        return best, best_logq

    def _zero_point(self) -> RDPoint:
        """Rate-zero optimum: the best constant hypothesis mixture."""
        mean_gain = self._source @ self._gain  # (n_w,)
        if self._min_aux is None:
            best = mean_gain.max()
            ties = mean_gain >= best - TIE_TOL
            q = ties / ties.sum()
            value = float(mean_gain @ q)
            aux_val = None
            if self._aux is not None:
                aux_val = float((self._source @ self._aux) @ q)
        else:
            mean_aux = self._source @ self._aux
            res = linprog(
                -mean_gain,
                A_ub=-mean_aux[None, :], b_ub=[-self._min_aux],
                A_eq=np.ones((1, self._nw)), b_eq=[1.0],
                bounds=(0.0, 1.0), method="highs",
            )
            if not res.success:
                raise InfeasibleConstraintError(
                    f"auxiliary-risk floor {self._min_aux} infeasible at rate 0"
                )
            q = res.x
            value = float(mean_gain @ q)
            aux_val = float(mean_aux @ q)
        channel = np.tile(q, (self._nz, 1))
        return RDPoint(slope=0.0, rate=0.0, value=value, channel=channel,
                       aux_expectation=aux_val)

    def _saturation_point(self) -> RDPoint:
        """Unconstrained maximum: per-symbol best hypotheses, ties split evenly."""
        best = self._gain.max(axis=1, keepdims=True)
        ties = self._gain >= best - TIE_TOL
        cond = ties / ties.sum(axis=1, keepdims=True)
        rate = _mutual_information_zw(self._source, cond)
        value = float(self._src_act @ self._gain_act.max(axis=1))
        aux_val = None
        if self._aux is not None:
            aux_val = float((self._source[:, None] * cond * self._aux).sum())
        return RDPoint(slope=math.inf, rate=rate, value=value, channel=cond,
                       aux_expectation=aux_val)

    # -- curve tracing ----------------------------------------------------

    def _ensure_grid(self) -> None:
        if self._grid_done:
            return
        self.point_at_slope(0.0)
        for s in np.geomspace(SLOPE_MIN, SLOPE_MAX, SLOPE_GRID_SIZE):
            self.point_at_slope(float(s))
        if self._min_aux is None:
            self.point_at_slope(math.inf)
        inserted = 0
        for _ in range(3):  # refine where the rate jumps between adjacent slopes
            slopes = sorted(s for s in self._points if 0.0 < s < math.inf)
            new = []
            for lo, hi in zip(slopes, slopes[1:]):
                gap = self._points[hi].rate - self._points[lo].rate
                if gap > RATE_JUMP_REFINE and inserted + len(new) < 64:
                    new.append(math.sqrt(lo * hi))
            if not new:
                break
            for s in new:
                self.point_at_slope(s)
            inserted += len(new)
        self._grid_done = True

    def _bracket(self, rate: float):
        pts = sorted(self._points.values(), key=lambda p: p.rate)
        lo = pts[0]
        hi = None
        for p in pts:
            if p.rate <= rate and p.rate >= lo.rate:
                lo = p
            if p.rate >= rate and (hi is None or p.rate < hi.rate):
                hi = p
        return lo, hi

    def value_at(self, rate: float, value_tol: float | None = 1e-9) -> float:
        """Curve value at ``rate``: envelope interpolation, locally refined.

        With ``value_tol`` set, the bracketing slopes are bisected until the
        bracket's value gap falls below the tolerance (or the bracket
        degenerates to a linear segment, where the chord is exact).
        """
        if rate < 0:
            raise ValueError(f"rate must be nonnegative, got {rate}")
        self._ensure_grid()
        if value_tol is not None:
            self._refine_at(rate, value_tol)
        envelope = _upper_envelope(self._points.values())
        return _interpolate(envelope, rate)

    def _refine_at(self, rate: float, value_tol: float, max_steps: int = 60) -> None:
        for _ in range(max_steps):
            lo, hi = self._bracket(rate)
            if hi is None or hi.value - lo.value <= value_tol:
                return
            if lo.slope == 0.0:
                if hi.slope <= 1e-8:
                    return
                s_new = hi.slope / 4.0
            elif math.isinf(hi.slope):
                if lo.slope >= 1e12:
                    return
                s_new = lo.slope * 4.0
            else:
                if hi.slope / lo.slope <= 1.0 + 1e-12:
                    return  # slope interval exhausted: linear segment, chord exact
                s_new = math.sqrt(lo.slope * hi.slope)
            if s_new in self._points:
                return  # no further progress possible
            self.point_at_slope(s_new)

    def curve(self) -> RDCurve:
        self._ensure_grid()
        return RDCurve(points=tuple(_upper_envelope(self._points.values())))


# -- module-level operations ----------------------------------------------


def ba_fixed_slope(s: Scenario, slope: float, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> RDPoint:
    """Alternating-minimization fixed point at one slope (no constraint).

    Slope 0 returns the independent optimum: the best constant hypothesis
    mixture at rate exactly 0.  Non-convergence is flagged on the returned
    point, never raised.
    """
    solver = GapRateSolver(s, tol=tol, max_iter=max_iter)
    return solver.point_at_slope(slope)


def rd_curve(s: Scenario, *, min_aux_risk: float | None = None) -> RDCurve:
    """Traced envelope of the (rate, value) curve for a scenario."""
    return GapRateSolver(s, min_aux_risk=min_aux_risk).curve()


def max_gap_at_rate(s: Scenario, rate: float, *, value_tol: float | None = 1e-9) -> float:
    """Largest expected gap achievable by any channel with I(W; Z) <= rate."""
    return GapRateSolver(s).value_at(rate, value_tol)


def constrained_max_gap_at_rate(s: Scenario, rate: float, min_aux_risk: float,
                                *, value_tol: float | None = 1e-9) -> float:
    """Like :func:`max_gap_at_rate` with the extra floor E[aux] >= min_aux_risk."""
    solver = GapRateSolver(s, min_aux_risk=min_aux_risk)
    return solver.value_at(rate, value_tol)


def dataset_max_gap_at_rate(s: Scenario, rate: float, *, cap: int = DATASET_CAP,
                            value_tol: float | None = 1e-9) -> float:
    """Exact dataset-level curve value; rate is the full-dataset budget."""
    return GapRateSolver.for_dataset(s, cap=cap).value_at(rate, value_tol)


def _dataset_gain_and_source(s: Scenario, cap: int):
    n_states = s.n_instances ** s.n
    if n_states > cap:
        raise ValueError(
            f"{s.n_instances}^{s.n} = {n_states} datasets exceeds the cap {cap}"
        )
    coords = np.array(list(itertools.product(range(s.n_instances), repeat=s.n)),
                      dtype=int).reshape(n_states, s.n)
    counts = np.stack([(coords == z).sum(axis=1) for z in range(s.n_instances)], axis=1)
    logp = np.where(s.train_dist.probs > 0, np.log(np.where(
        s.train_dist.probs > 0, s.train_dist.probs, 1.0)), -math.inf)
    log_mass = np.where(counts > 0, counts * logp[None, :], 0.0).sum(axis=1)
    source = np.exp(log_mass)
    source = source / source.sum()
    emp_risk = (counts / s.n) @ s.loss.values.T  # (n_states, n_w)
    gain = s.population_risk()[None, :] - emp_risk
    return gain, source


def batched_max_gap_values(gains: np.ndarray, sources: np.ndarray,
                           rates, tol: float = DEFAULT_TOL,
                           max_iter: int = 2000,
                           stall_tol: float = 1e-7) -> np.ndarray:
    """Curve values for a stack of same-shape gap problems at shared rates.

    ``gains`` is (B, nz, nw) oriented (source symbol, hypothesis), ``sources``
    is (B, nz); returns a (B, len(rates)) array.  All problems iterate in
    lockstep over the common slope grid, which is much faster than tracing
    them one by one; queries are answered per problem by envelope
    interpolation (no per-query refinement).

    Besides the Lagrangian stop, iteration halts once the achieved (rate,
    value) pairs stop moving (drift below ``stall_tol`` between periodic
    checks): with tied hypotheses the output marginal can wander through a
    flat valley long after the traced point has stabilized.  Every traced
    point is a feasible channel, so early exits only cost tightness.
    """
    gains = np.asarray(gains, dtype=float)
    sources = np.asarray(sources, dtype=float)
    nb, nz, nw = gains.shape
    rates = np.asarray(rates, dtype=float)
    with np.errstate(divide="ignore"):
        log_src = np.log(sources)

    def batch_point(cond):
        joint = sources[:, :, None] * cond
        out = joint.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.log(joint) - np.log(sources[:, :, None] * out[:, None, :])
            mi = np.where(joint > 0, joint * log_ratio, 0.0).sum(axis=(1, 2))
        values = (joint * gains).sum(axis=(1, 2))
        return np.maximum(mi, 0.0), values

    curves: list[list[tuple[float, float]]] = [[] for _ in range(nb)]
    mean_gain = np.einsum("bz,bzw->bw", sources, gains)
    zero_vals = mean_gain.max(axis=1)
    for b in range(nb):
        curves[b].append((0.0, float(zero_vals[b])))

    stall_check = 25
    log_q = np.full((nb, nw), -math.log(nw))
    for slope in np.geomspace(SLOPE_MIN, SLOPE_MAX, SLOPE_GRID_SIZE):
        exponent = slope * gains
        prev = np.full(nb, -math.inf)
        prev_mi = prev_val = None
        log_cond = None
        for it in range(1, max_iter + 1):
            tilted = log_q[:, None, :] + exponent
            m = tilted.max(axis=2, keepdims=True)
            log_norm = np.log(np.exp(tilted - m).sum(axis=2)) + m[:, :, 0]
            objective = (sources * log_norm).sum(axis=1) / slope
            log_cond = tilted - log_norm[:, :, None]
            shifted = log_src[:, :, None] + log_cond
            m2 = shifted.max(axis=1, keepdims=True)
            log_q = np.log(np.exp(shifted - m2).sum(axis=1)) + m2[:, 0, :]
            if np.all(objective - prev < tol):
                break
            prev = objective
            if it % stall_check == 0:
                cond = np.exp(log_cond)
                cond /= cond.sum(axis=2, keepdims=True)
                mi, values = batch_point(cond)
                if prev_mi is not None and (
                        np.abs(mi - prev_mi).max() < stall_tol
                        and np.abs(values - prev_val).max() < stall_tol):
                    break
                prev_mi, prev_val = mi, values
        cond = np.exp(log_cond)
        cond /= cond.sum(axis=2, keepdims=True)
        mi, values = batch_point(cond)
        for b in range(nb):
            curves[b].append((float(mi[b]), float(values[b])))

    best = gains.max(axis=2, keepdims=True)
    ties = gains >= best - TIE_TOL
    cond = ties / ties.sum(axis=2, keepdims=True)
    mi, _ = batch_point(cond)
    sat_vals = np.einsum("bz,bz->b", sources, gains.max(axis=2))
    for b in range(nb):
        curves[b].append((float(mi[b]), float(sat_vals[b])))

    out = np.empty((nb, rates.size))
    for b in range(nb):
        pts = [RDPoint(slope=math.nan, rate=r, value=v, channel=None)
               for r, v in curves[b]]
        envelope = _upper_envelope(pts)
        for k, r in enumerate(rates):
            out[b, k] = _interpolate(envelope, float(r))
    return out


def _simplex_grid(parts: int, steps: int) -> np.ndarray:
    """All probability vectors with ``parts`` entries on a 1/steps grid."""
    rows = []
    for dividers in itertools.combinations(range(steps + parts - 1), parts - 1):
        prev = -1
        counts = []
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(steps + parts - 2 - prev)
        rows.append(counts)
    return np.array(rows, dtype=float) / steps


def grid_search_max_gap(s: Scenario, rate: float, grid_step: float) -> float:
    """Exhaustive channel-grid search: independent oracle for the solver.

    Enumerates every channel whose rows live on the ``grid_step`` simplex
    grid, keeps those with mutual information at most ``rate``, and returns
    the best expected gap.  Limited to tiny alphabets.
    """
    nw, nz = s.n_hypotheses, s.n_instances
    if nw * nz > GRID_SEARCH_CELL_CAP:
        raise ValueError(f"{nw}x{nz} exceeds the {GRID_SEARCH_CELL_CAP}-cell cap")
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError(f"1/{grid_step} must be an integer number of steps")
    rows = _simplex_grid(nw, steps)
    m = rows.shape[0]
    total = m ** nz
    if total > GRID_SEARCH_COMBO_CAP:
        raise ValueError(f"{total} channel combinations exceed the enumeration cap")
    source = s.train_dist.probs
    gain = gap_matrix(s).values.T  # (nz, nw)
    best = -math.inf
    chunk = 200_000
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        row_idx = np.stack(np.unravel_index(idx, (m,) * nz), axis=1)  # (c, nz)
        cond = rows[row_idx]  # (c, nz, nw)
        joint = source[None, :, None] * cond
        out = joint.sum(axis=1)  # (c, nw)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.log(joint) - np.log(source[None, :, None] * out[:, None, :])
            mi = np.where(joint > 0, joint * log_ratio, 0.0).sum(axis=(1, 2))
        values = (joint * gain[None, :, :]).sum(axis=(1, 2))
        feasible = mi <= rate + 1e-12
        if np.any(feasible):
            best = max(best, float(values[feasible].max()))
    return best
