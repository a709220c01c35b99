"""Recovery of a single spectral spike from sampled coefficient access.

Given counted access to y whose transform is v*e_ell plus small noise, the
solver finds ell and estimates v using polylogarithmically many samples.  The
stages: prune the angular regions near 0 and pi (where the cosine ratio
estimator degrades), prune roots whose normalized angle has badly
equidistributed integer dilates, then binary-search the angle by estimating
cos(w * theta_ell) at dyadically growing blow-ups w, and finish with a
correlation check that also yields the value estimate.

Every pruning stage shares one sample set per round across all candidate
roots, so the query count depends on the sampling schedule, not on the
candidate count.  All randomness flows through an explicit generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Protocol

import numpy as np

from . import plan as plan_mod
from .jacobi import log_norm_factor
from .numtheory import bad_intervals

__all__ = [
    "OneSparseConfig",
    "OneSparseResult",
    "SpreadConstants",
    "SPREAD",
    "RecoveryError",
    "ArcCosError",
    "check",
    "prune",
    "prune_non_spread",
    "query_cos",
    "approx_arccos",
    "solve_one_sparse",
]


class SampleAccess(Protocol):
    """Counted query access to entries of the coefficient-side vector."""

    def query_many(self, idx: np.ndarray) -> np.ndarray: ...


class RecoveryError(RuntimeError):
    """Every stage of the solver failed to locate a spike."""


class ArcCosError(RuntimeError):
    """The dyadic angle search lost its target; noise is above contract."""


class OneSparseResult(NamedTuple):
    index: int
    value: float


@dataclass(frozen=True)
class SpreadConstants:
    """Thresholds controlling which angles count as safely spread."""

    nu: float = 0.125

    @staticmethod
    def delta0(eps: float) -> float:
        return math.sqrt(eps) / 5000.0

    @staticmethod
    def rho(delta: float) -> float:
        return 2.0 * math.sqrt(5.0 * delta)


SPREAD = SpreadConstants()


@dataclass(frozen=True)
class OneSparseConfig:
    """Sampling-schedule multipliers, calibrated by the acceptance suite."""

    c_s: float = 1e-3  # correlation sample count multiplier
    s_floor: float = 64.0  # lower bound multiplier on samples per round
    c_r: float = 0.25  # rounds per unit of log(1/mu)
    r_min: int = 3  # minimum rounds (kept odd for clean medians)
    c_theta: float = 1.0  # boundary prune reach
    c_r_cos: float = 8.0  # rounds multiplier for the cosine estimator
    row_cand_limit: int = 512  # above this, correlate via a full transform


DEFAULT_CONFIG = OneSparseConfig()


def _sample_size(plan: plan_mod.TransformPlan, eps: float, cfg: OneSparseConfig) -> int:
    n = plan.n
    flat = plan.U * plan.U * n
    big = math.log(n) / (eps * eps)
    s = max(cfg.c_s * flat * big * math.log(big), cfg.s_floor * flat * math.log(n))
    return int(min(max(8.0, math.ceil(s)), 4.0e6))


def _round_count(mu: float, cfg: OneSparseConfig) -> int:
    r = max(cfg.r_min, math.ceil(cfg.c_r * math.log(1.0 / min(mu, 0.5))))
    return int(r) | 1


def _correlate(plan, cand: np.ndarray, js: np.ndarray, y: np.ndarray, cfg) -> np.ndarray:
    """(N/s)-scaled correlations of one sampling round against candidate rows."""
    n = plan.n
    scale = n / len(js)
    if n <= plan_mod.DENSE_CACHE_LIMIT:
        f = plan.matrix()
        if len(cand) * 2 >= n:
            acc = np.bincount(js, weights=y, minlength=n)
            return scale * (f @ acc)[cand]
        return scale * (f[np.ix_(cand, js)] @ y)
    if len(cand) <= cfg.row_cand_limit:
        rows = np.stack([plan.row(int(c))[js] for c in cand])
        return scale * (rows @ y)
    acc = np.bincount(js, weights=y, minlength=n)
    return scale * plan.forward(acc)[cand]


def _estimate(plan, oracle, cand, mu_each, eps, rng, cfg, early_fail):
    """Medians of the norm and correlation estimators over shared samples.

    Returns (u, per-candidate medians), or None if an early partial median
    showed nothing anywhere near the acceptance threshold.
    """
    s = _sample_size(plan, eps, cfg)
    rounds = _round_count(mu_each, cfg)
    n = plan.n
    u_rounds = np.empty(rounds)
    v_rounds = np.empty((rounds, len(cand)))
    for r in range(rounds):
        js = rng.integers(0, n, size=s)
        y = oracle.query_many(js)
        u_rounds[r] = math.sqrt((n / s) * float(y @ y))
        v_rounds[r] = _correlate(plan, cand, js, y, cfg)
        if early_fail and r in (1, 3) and r < rounds - 1:
            u_part = float(np.median(u_rounds[: r + 1]))
            v_part = np.abs(np.median(v_rounds[: r + 1], axis=0))
            if np.all(v_part <= u_part / 20.0):
                return None
    return float(np.median(u_rounds)), np.median(v_rounds, axis=0)


def check(plan, oracle, candidate: int, mu: float, eps: float, rng,
          cfg: OneSparseConfig = DEFAULT_CONFIG) -> tuple[bool, float]:
    """Decide whether the spike sits at ``candidate`` and estimate its value.

    Returns (True, v~) when the correlation median clears a tenth of the
    norm median; an all-zero signal yields (False, 0.0).
    """
    if not 0 <= candidate < plan.n:
        raise IndexError(f"candidate {candidate} out of range for N={plan.n}")
    got = _estimate(plan, oracle, np.array([candidate]), mu, eps, rng, cfg,
                    early_fail=False)
    u, v = got
    if u == 0.0:
        return False, 0.0
    value = float(v[0])
    return bool(abs(value) > u / 10.0), value


def _prune_over(plan, oracle, cand, mu, eps, rng, cfg) -> Optional[tuple[int, float]]:
    if len(cand) == 0:
        return None
    got = _estimate(plan, oracle, cand, mu / len(cand), eps, rng, cfg,
                    early_fail=True)
    if got is None:
        return None
    u, v = got
    if u == 0.0:
        return None
    hits = np.nonzero(np.abs(v) > u / 10.0)[0]
    if len(hits) == 0:
        return None
    first = int(hits[0])
    return int(cand[first]), float(v[first])


def prune(plan, oracle, lo: float, hi: float, mu: float, eps: float, rng,
          cfg: OneSparseConfig = DEFAULT_CONFIG) -> Optional[tuple[int, float]]:
    """Run the shared-sample check over every root with angle in [lo, hi].

    Returns (index, value estimate) for the first passing root in ascending
    angle order, or None when no candidate passes (zero queries if the
    interval holds no roots).
    """
    lo, hi = max(0.0, lo), min(math.pi, hi)
    i0 = int(np.searchsorted(plan.theta, lo, side="left"))
    i1 = int(np.searchsorted(plan.theta, hi, side="right"))
    return _prune_over(plan, oracle, np.arange(i0, i1), mu, eps, rng, cfg)


def prune_non_spread(plan, oracle, delta0: float, nu: float, mu: float,
                     eps: float, rng,
                     cfg: OneSparseConfig = DEFAULT_CONFIG) -> Optional[tuple[int, float]]:
    """Prune over the roots whose angle may defeat the cosine estimator.

    A root is a candidate when theta/pi lies within 1/N of a rational with
    denominator at most ceil(4 / (2 rho(delta0) / pi)); that interval cover
    majorizes the non-spread set for every blow-up fraction nu, so nu enters
    only through the caller's choice of delta0 budget.
    """
    rho = SpreadConstants.rho(delta0)
    cover = bad_intervals(plan.n, min(1.0, 2.0 * rho / math.pi))
    cand = np.nonzero(cover.contains(plan.theta / math.pi))[0]
    return _prune_over(plan, oracle, cand, mu, eps, rng, cfg)


def _side_weight(params, j: np.ndarray) -> np.ndarray:
    """sqrt(h_j * j) in log space; exactly zero at j = 0."""
    j = np.asarray(j, dtype=np.float64)
    out = np.zeros_like(j)
    pos = j > 0
    if np.any(pos):
        jp = j[pos]
        out[pos] = np.exp(0.5 * (log_norm_factor(params, jp) + np.log(jp)))
    return out


def query_cos(plan, oracle, w: int, nprime: int, rounds: int, rng,
              eps: float) -> float:
    """Median ratio estimate of cos(w * theta_ell) from 3 samples per round.

    Uses the three-term identity cos(A+B) + cos(A-B) = 2 cos A cos B on the
    oscillatory bulk of the coefficient sequence; the denominator sample is
    clamped away from zero, so the output is always finite.
    """
    if w == 0:
        return 1.0
    n = plan.n
    if not 1 <= w <= nprime <= n // 4:
        raise ValueError(f"need 1 <= w <= nprime <= N/4, got w={w} nprime={nprime}")
    lo = nprime
    hi = min(n - nprime, n - 1 - w)
    if hi < lo:
        raise ValueError("empty sampling window for the ratio estimator")
    deltas = rng.integers(lo, hi + 1, size=rounds)
    mid = oracle.query_many(deltas)
    upper = oracle.query_many(deltas + w)
    lower = oracle.query_many(deltas - w)
    floor = eps / n**1.5
    denom = np.where(mid < 0, -1.0, 1.0) * np.maximum(np.abs(mid), floor)
    params = plan.params
    num = (_side_weight(params, deltas + w) * upper
           + _side_weight(params, deltas - w) * lower)
    vals = num / (2.0 * _side_weight(params, deltas) * denom)
    return float(np.median(vals))


def _family(r: float, w: int, lo: float, hi: float) -> Optional[float]:
    """The unique angle (r + 2 pi z) / w inside [lo, hi], if any.

    The window is always narrower than the period 2 pi / w, so at most one
    integer z qualifies.
    """
    zlo = math.ceil((w * lo - r) / (2.0 * math.pi))
    zhi = math.floor((w * hi - r) / (2.0 * math.pi))
    if zlo > zhi:
        return None
    return (r + 2.0 * math.pi * zlo) / w


def _refine(cos_query: Callable[[int], float], w: int, lo: float, hi: float,
            rho: float) -> tuple[Optional[float], Optional[float]]:
    """Candidates from both arccos branches of one blow-up query."""
    q = cos_query(w)
    r = math.acos(min(1.0, max(-1.0, q)))
    slo = max(0.0, lo - rho / w)
    shi = min(math.pi, hi + rho / w)
    return _family(r, w, slo, shi), _family(-r, w, slo, shi)


def approx_arccos(cos_query: Callable[[int], float], tau: int,
                  eps0: float) -> tuple[float, float]:
    """Dyadic search narrowing the angle to a width-2*rho/2^tau interval.

    ``cos_query(w)`` must return cos(w * theta) up to the noise level implied
    by eps0.  When a blow-up lands theta near a multiple of pi / 2^t both
    arccos branches produce candidates; the collision is resolved by one
    extra query at a co-prime-scaled blow-up, as the containment proof
    prescribes.  Raises ArcCosError when no branch is consistent.
    """
    rho = SpreadConstants.rho(eps0)
    if not 0.0 < rho < math.pi / 22.0:
        raise ValueError(f"rho={rho:.4f} outside (0, pi/22); eps0 too large")
    r = math.acos(min(1.0, max(-1.0, cos_query(1))))
    lo, hi = max(0.0, r - rho), min(math.pi, r + rho)
    for t in range(1, tau + 1):
        w = 1 << t
        a, b = _refine(cos_query, w, lo, hi, rho)
        if a is None and b is None:
            raise ArcCosError(f"both branches empty at blow-up {w}")
        if a is not None and b is not None:
            # theta is near h*pi/2^t: both branches collide.  Re-query at a
            # blow-up that puts the collision point a quarter period away.
            mid = 0.5 * (a + b)
            h = round(mid * w / math.pi)
            if not 1 <= h <= w - 1 or abs(h * math.pi / w - mid) > 4.0 * rho / w:
                raise ArcCosError(f"inconsistent branch collision at blow-up {w}")
            j = (h & -h).bit_length() - 1
            w2 = (1 << (t - j - 1)) * ((1 << (j + 1)) + 1)
            a2, b2 = _refine(cos_query, w2, lo, hi, rho)
            if (a2 is None) == (b2 is None):
                raise ArcCosError(f"collision unresolved at blow-up {w2}")
            center = a2 if a2 is not None else b2
            w_used = w2
        else:
            center = a if a is not None else b
            w_used = w
        lo = max(0.0, center - rho / w_used)
        hi = min(math.pi, center + rho / w_used)
    return lo, hi


def solve_one_sparse(plan, oracle, eps: float, mu: float, rng,
                     cfg: OneSparseConfig = DEFAULT_CONFIG) -> OneSparseResult:
    """Full staged recovery of the spike index and value.

    Raises RecoveryError when every stage fails (the k-sparse peeler treats
    that as a miss and moves on).
    """
    n = plan.n
    nu = SPREAD.nu
    d0 = SpreadConstants.delta0(eps)
    root_eps = math.sqrt(eps)
    c_prime = max(cfg.c_theta, 4.0 * nu * root_eps * d0)
    near_zero = min(c_prime / (nu * root_eps * d0 * n), math.pi)
    got = prune(plan, oracle, 0.0, near_zero, mu / 6.0, eps, rng, cfg)
    if got is not None:
        return OneSparseResult(*got)
    if near_zero < math.pi:
        got = prune(plan, oracle, math.pi - cfg.c_theta / (nu * n), math.pi,
                    mu / 6.0, eps, rng, cfg)
        if got is not None:
            return OneSparseResult(*got)
        rho0 = SpreadConstants.rho(d0)
        got = prune_non_spread(plan, oracle, d0, 2.0 * nu, rho0 * rho0 * mu,
                               eps, rng, cfg)
        if got is not None:
            return OneSparseResult(*got)
        tau = min(max(int(math.log2(nu * n)) - 1, 1), int(math.log2(2 * n / 3)))
        nprime = math.ceil(2.0 * nu * n)
        r_cos = math.ceil(cfg.c_r_cos
                          * (math.log(max(math.log(n), math.e)) + math.log(1.0 / mu)))
        try:
            lo, hi = approx_arccos(
                lambda w: query_cos(plan, oracle, w, nprime, r_cos, rng, eps),
                tau, root_eps)
        except ArcCosError as exc:
            raise RecoveryError("angle search failed") from exc
        got = prune(plan, oracle, lo, hi, mu / 6.0, eps, rng, cfg)
        if got is not None:
            _, value = check(plan, oracle, got[0], mu / 6.0, eps, rng, cfg)
            return OneSparseResult(got[0], value)
    raise RecoveryError("all pruning stages failed")
