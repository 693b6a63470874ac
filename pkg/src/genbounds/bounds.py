"""Closed-form bound evaluators.

Pure formulas over measured quantities: mutual-information generalization
bounds with and without a train/test divergence term, dual-penalty lower
bounds, high-probability tails, ERM excess risk, and the uniform-stability
bounds under model misspecification.  Everything is stateless; rates and
divergences are in nats, risks in loss units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundReport",
    "mi_bound",
    "mismatched_mi_bound",
    "per_sample_mi_bound",
    "rd_converse_lower",
    "gap_lower_from_mgf",
    "subgaussian_gap_lower",
    "gen_tail_bound",
    "holder_orders",
    "renyi_holder_bound",
    "erm_excess_risk_bound",
    "misspec_tilt",
    "misspec_shift",
    "misspec_bounds",
    "MisspecBounds",
]

LAMBDA_FLOOR = 1e-4
DEFAULT_LAMBDA_CAP = 50.0
DEFAULT_GRID_SIZE = 512


@dataclass(frozen=True)
class BoundReport:
    """A named bound value together with the assumptions it rides on."""

    name: str
    value: float
    assumptions: tuple[str, ...] = ()
    inputs: dict = field(default_factory=dict)


def _require_nonneg(**kwargs) -> None:
    for name, v in kwargs.items():
        if not (v >= 0):
            raise ValueError(f"{name} must be nonnegative, got {v!r}")


def mi_bound(sigma2: float, n: int, mi: float) -> float:
    """Square-root mutual-information bound sqrt(2 sigma^2 I / n)."""
    _require_nonneg(sigma2=sigma2, mi=mi)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    return math.sqrt(2.0 * sigma2 * mi / n)


def mismatched_mi_bound(sigma2: float, n: int, mi: float, kl_shift: float) -> float:
    """Mutual-information bound with a train/test KL penalty added under the root.

    Reduces to :func:`mi_bound` at kl_shift = 0; for fixed kl_shift > 0 the
    value floors at sqrt(2 sigma^2 kl_shift) as n grows.
    """
    _require_nonneg(sigma2=sigma2, mi=mi, kl_shift=kl_shift)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    return math.sqrt(2.0 * sigma2 * kl_shift + 2.0 * sigma2 * mi / n)


def per_sample_mi_bound(sigma2: float, per_sample_mi, kl_shift: float = 0.0) -> float:
    """Average of per-sample square-root bounds (1/n) sum sqrt(2 s^2 (I_i + kl))."""
    mis = np.asarray(per_sample_mi, dtype=float)
    if mis.ndim != 1 or mis.size == 0:
        raise ValueError("per-sample informations must be a nonempty vector")
    if np.any(mis < 0):
        raise ValueError("per-sample informations must be nonnegative")
    _require_nonneg(sigma2=sigma2, kl_shift=kl_shift)
    return float(np.mean(np.sqrt(2.0 * sigma2 * (mis + kl_shift))))


def _grid_refine_min(fn, lo: float, hi: float, grid_size: int) -> float:
    """Minimum of fn over [lo, hi]: log-spaced scan plus golden refinement.

    Any evaluation point yields a valid bound for the callers below, so grid
    coarseness affects tightness only; the refinement step recovers smooth
    optima to near machine precision.
    """
    xs = np.geomspace(lo, hi, grid_size)
    vals = np.array([fn(x) for x in xs])
    if not np.any(np.isfinite(vals)):
        raise ValueError("objective not finite anywhere on the grid")
    i = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))
    best = float(vals[i])
    left = math.log(xs[max(i - 1, 0)])
    right = math.log(xs[min(i + 1, grid_size - 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = left, right
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(math.exp(c)), fn(math.exp(d))
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(math.exp(d))
    return min(best, fc, fd)


def rd_converse_lower(rate: float, kl_shift: float, log_mgf,
                      lambda_cap: float = DEFAULT_LAMBDA_CAP,
                      grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Lower bound on a rate-limited distortion minimum from its log-MGF.

    ``log_mgf`` maps a negative tilt lambda to sup over reproduction symbols
    of the log moment generating function of the distortion.  Every grid
    point certifies (rate + kl_shift + log_mgf(lambda)) / lambda as a lower
    bound; the best one is returned (negated sign handled internally).
    """
    _require_nonneg(rate=rate, kl_shift=kl_shift)
    if lambda_cap <= LAMBDA_FLOOR:
        raise ValueError(f"lambda cap must exceed {LAMBDA_FLOOR}")

    def objective(u: float) -> float:
        try:
            phi = log_mgf(-u)
        except OverflowError:
            return math.inf
        if not math.isfinite(phi):
            return math.inf
        return (rate + kl_shift + phi) / u

    return -_grid_refine_min(objective, LAMBDA_FLOOR, lambda_cap, grid_size)


def gap_lower_from_mgf(independent_gap: float, mgf_bound, n: int, rate: float,
                       lambda_cap: float = DEFAULT_LAMBDA_CAP,
                       grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Coupling-constrained gap lower bound via the dual penalty.

    ``mgf_bound`` is a function psi with psi(x) >= 1 dominating the centered
    loss MGF under the output law; the returned bound is the independent
    value minus inf over lambda > 0 of lambda*rate + lambda*(psi(1/(n l))^n - 1).
    """
    _require_nonneg(rate=rate)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")

    def penalty(lam: float) -> float:
        try:
            psi = mgf_bound(1.0 / (n * lam))
        except OverflowError:
            return math.inf
        if not math.isfinite(psi):
            return math.inf
        if psi < 1.0 - 1e-9:
            raise ValueError(f"mgf bound dipped below 1 at lambda={lam}: {psi}")
        try:
            grown = psi ** n
        except OverflowError:
            return math.inf
        if not math.isfinite(grown):
            return math.inf
        return lam * rate + lam * (grown - 1.0)

    pen = max(_grid_refine_min(penalty, LAMBDA_FLOOR, lambda_cap, grid_size), 0.0)
    return independent_gap - pen


def subgaussian_gap_lower(independent_gap: float, alpha: float, n: int,
                          rate: float) -> float:
    """Closed-form instance of :func:`gap_lower_from_mgf` for sub-Gaussian losses.

    Requires rate > 0 (the penalty has a removable 0/0 there; use
    :func:`gap_lower_from_mgf` for the rate-zero limit).
    """
    _require_nonneg(alpha=alpha)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if not rate > 0:
        raise ValueError("rate must be strictly positive; see gap_lower_from_mgf")
    penalty = (alpha * math.sqrt(rate) / math.sqrt(2.0)
               + alpha * math.expm1(rate) / math.sqrt(2.0 * rate)) / math.sqrt(n)
    return independent_gap - penalty


def gen_tail_bound(sigma2: float, n: int, eta: float,
                   order2_mismatch: float, order2_joint: float) -> float:
    """Two-sided tail bound on the generalization gap, clamped to [0, 1].

    Vacuous inputs (threshold below the mismatch floor) return exactly 1.
    """
    _require_nonneg(eta=eta, order2_mismatch=order2_mismatch, order2_joint=order2_joint)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if sigma2 == 0:
        return 0.0 if eta > 0 else 1.0
    arg = (n * (eta * eta / 2.0 - sigma2 * order2_mismatch)
           - sigma2 * order2_joint) / (3.0 * sigma2)
    if arg <= 0:
        return 1.0
    return min(1.0, 2.0 * math.exp(-arg))


def holder_orders(alpha: float, p: float, q: float) -> tuple[float, float]:
    """Divergence orders (1+(alpha-1)p, 1+(alpha-1)q) for the Holder split."""
    if not alpha > 1:
        raise ValueError(f"order must exceed 1, got {alpha}")
    if not (p > 1 and q > 1):
        raise ValueError("Holder exponents must exceed 1")
    if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise ValueError(f"1/{p} + 1/{q} != 1")
    return 1.0 + (alpha - 1.0) * p, 1.0 + (alpha - 1.0) * q


def renyi_holder_bound(alpha: float, p: float, q: float, joint_term: float,
                       marginal_term: float, n: int) -> float:
    """Holder decomposition of a joint-vs-test-product Renyi divergence.

    ``joint_term`` is the divergence of the joint from the product with the
    *training* marginal at order 1+(alpha-1)p; ``marginal_term`` the
    train-vs-test divergence at order 1+(alpha-1)q.
    """
    holder_orders(alpha, p, q)  # validates conjugacy
    _require_nonneg(joint_term=joint_term, marginal_term=marginal_term)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    return joint_term + n * marginal_term


def erm_excess_risk_bound(sigma2: float, n: int, delta: float,
                          order2_mismatch: float, order2_joint: float,
                          log_coeff: float = 3.0) -> float:
    """High-probability excess-risk bound for empirical risk minimization.

    ``log_coeff`` scales the log(4/delta) term of the second radical; the
    default 3 is the safe (larger) constant.
    """
    _require_nonneg(sigma2=sigma2, order2_mismatch=order2_mismatch,
                    order2_joint=order2_joint)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    t = math.log(4.0 / delta)
    first = math.sqrt(2.0 * sigma2 * order2_mismatch + 2.0 * sigma2 * t / n)
    second = math.sqrt(2.0 * sigma2 * order2_mismatch
                       + 2.0 * sigma2 * (order2_joint + log_coeff * t) / n)
    return first + second


def misspec_tilt(sigma2: float, delta: float, gamma: float) -> float:
    """Tilt parameter sqrt(2 (log(1/delta) + gamma) / sigma^2)."""
    _require_nonneg(gamma=gamma)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if sigma2 <= 0:
        raise ValueError(f"sigma^2 must be positive, got {sigma2}")
    return math.sqrt(2.0 * (math.log(1.0 / delta) + gamma) / sigma2)


def misspec_shift(sigma2: float, delta: float, gamma: float, betas) -> float:
    """Deviation term of the tilted misspecification bound.

    Combines the mismatch floor, a confidence radical, and a per-coordinate
    stability sum damped by the tilt parameter.
    """
    _require_nonneg(gamma=gamma)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    bs = np.asarray(betas, dtype=float)
    if np.any(bs < 0):
        raise ValueError("stability coefficients must be nonnegative")
    tilt = misspec_tilt(sigma2, delta / 2.0, gamma)
    stability = float(np.log1p(0.5 * np.expm1(tilt * bs) * math.sqrt(gamma)).sum()) / tilt
    return (math.sqrt(2.0 * sigma2 * gamma)
            + math.sqrt(2.0 * sigma2 * (math.log(2.0 / delta) + gamma))
            + stability)


@dataclass(frozen=True)
class MisspecBounds:
    """The two stability-based excess-risk routes; ``better`` names the smaller."""

    bound_a: float
    bound_b: float

    @property
    def better(self) -> str:
        return "b" if self.bound_b < self.bound_a else "a"


def misspec_bounds(eps_base: float, eps_base_half_delta: float, sigma2: float,
                   gamma: float, betas, delta: float) -> MisspecBounds:
    """Both misspecification routes from a base sample-complexity guarantee.

    Route a adds the raw stability sum and twice the mismatch radical to the
    guarantee at confidence delta; route b starts from the guarantee at
    confidence delta/2 and adds the tilted deviation term.
    """
    _require_nonneg(gamma=gamma)
    bs = np.asarray(betas, dtype=float)
    bound_a = eps_base + float(bs.sum()) + 2.0 * math.sqrt(2.0 * sigma2 * gamma)
    bound_b = eps_base_half_delta + misspec_shift(sigma2, delta, gamma, bs)
    return MisspecBounds(bound_a=bound_a, bound_b=bound_b)
