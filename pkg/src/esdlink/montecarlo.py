"""Event-level Monte Carlo of the detection block and the message readout.

Used as an oracle for the closed forms in :mod:`esdlink.analytics`, so none of
those formulas are used to draw events; every auxiliary carrier goes through
source emission, gate deflection, filtering and a detector with dark counts.

Trials are cut into fixed-size shards. Shard ``i`` draws from its own
PCG64DXSM stream seeded by ``SeedSequence(seed, spawn_key=(stream_id, purpose, i))``,
and shard results are folded in index order, so estimates are bit-identical
for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from .analytics import (
    EsdDesign,
    LinkMetrics,
    ReportProbs,
    UndefinedRatioError,
    qber as qber_formula,
    report_probs,
)
from .params import LinkParams

DEFAULT_LEVEL = 0.9973
SHARD_SIZE = 1 << 17
RARE_EVENT_T = 1e-4
# biased per-stage probabilities used by importance sampling
TILT_SOURCE = 0.5
TILT_DEFLECT = 0.5
TILT_DARK = 0.05

_BRANCH_NONEMPTY, _BRANCH_VACUUM, _DIRECT = 0, 1, 2


class RareEventError(ValueError):
    """Direct sampling was requested in a regime it cannot resolve."""


@dataclass(frozen=True)
class RngSeed:
    seed: int = 0
    stream_id: int = 0

    def generator(self, purpose: int, shard: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, purpose, shard))
        return np.random.Generator(np.random.PCG64DXSM(ss))


@dataclass(frozen=True)
class EstimateWithCI:
    value: float
    low: float
    high: float
    trials: int
    level: float = DEFAULT_LEVEL

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)

    @property
    def z(self) -> float:
        return NormalDist().inv_cdf(0.5 + self.level / 2)

    def bounds(self, n_sigma: float) -> tuple[float, float]:
        """Interval widened to ``n_sigma`` standard errors on each side."""
        scale = n_sigma / self.z
        return (self.value - scale * (self.value - self.low),
                self.value + scale * (self.high - self.value))

    def contains(self, x: float, tol: float = 1e-12) -> bool:
        return self.low - tol <= x <= self.high + tol


def wilson(successes: int, trials: int, level: float = DEFAULT_LEVEL) -> EstimateWithCI:
    if trials == 0:
        return EstimateWithCI(0.0, 0.0, 1.0, 0, level)
    z = NormalDist().inv_cdf(0.5 + level / 2)
    p = successes / trials
    z2n = z * z / trials
    center = (p + z2n / 2) / (1 + z2n)
    half = z / (1 + z2n) * math.sqrt(p * (1 - p) / trials + z2n / (4 * trials))
    return EstimateWithCI(p, max(0.0, center - half), min(1.0, center + half), trials, level)


def _weighted_estimate(sum_w: float, sum_w2: float, trials: int, level: float) -> EstimateWithCI:
    z = NormalDist().inv_cdf(0.5 + level / 2)
    mean = sum_w / trials
    var = max(0.0, sum_w2 / trials - mean * mean)
    se = math.sqrt(var / max(trials - 1, 1))
    return EstimateWithCI(mean, max(0.0, mean - z * se), min(1.0, mean + z * se), trials, level)


def _tilt(p: float, target: float) -> float:
    return p if p == 0.0 or p >= target else target


def _log_ratio(p: float, b: float) -> tuple[float, float]:
    """Log likelihood ratios (event, non-event) for true prob p sampled at b."""
    if p == b:
        return 0.0, 0.0
    return math.log(p / b), math.log((1 - p) / (1 - b))


def _shards(trials: int) -> list[int]:
    full, rest = divmod(trials, SHARD_SIZE)
    return [SHARD_SIZE] * full + ([rest] if rest else [])


def _run_shards(fn: Callable[[int, int], np.ndarray], trials: int, workers: int) -> np.ndarray:
    sizes = _shards(trials)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    total = parts[0].copy()
    for part in parts[1:]:
        total += part
    return total


def _aux_stage_probs(params: LinkParams) -> tuple[float, float, float]:
    det = params.detector
    return 1.0 - params.source.y, det.eta + (1 - det.eta) * det.d, det.d


def simulate_aux_branch(
    control_nonempty: bool,
    design: EsdDesign,
    params: LinkParams,
    trials: int,
    seed: RngSeed = RngSeed(),
    *,
    importance: bool = False,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
) -> list[EstimateWithCI]:
    """Estimate P(at least k auxiliary clicks) for every k in 0..n.

    The control branch is fixed: non-empty signals deflect each auxiliary with
    probability P, vacuum ones only through the preparation error e_P.
    With ``importance`` the source, deflection and dark-count stages are
    sampled at inflated rates and every trial carries its likelihood ratio;
    intervals are then normal-theory rather than Wilson.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n = design.n
    p_src, p_hit, d = _aux_stage_probs(params)
    p_one = params.p if control_nonempty else params.source.e_p
    if importance:
        b_src, b_one, b_dark = (_tilt(p_src, TILT_SOURCE), _tilt(p_one, TILT_DEFLECT),
                                _tilt(d, TILT_DARK))
    else:
        b_src, b_one, b_dark = p_src, p_one, d
    l_src, l_one, l_dark = _log_ratio(p_src, b_src), _log_ratio(p_one, b_one), _log_ratio(d, b_dark)
    weighted = importance and (b_src, b_one, b_dark) != (p_src, p_one, d)
    purpose = _BRANCH_NONEMPTY if control_nonempty else _BRANCH_VACUUM

    def shard(index: int, m: int) -> np.ndarray:
        rng = seed.generator(purpose, index)
        src = rng.random((m, n)) < b_src
        one = src & (rng.random((m, n)) < b_one)
        u = rng.random((m, n))
        clicks = np.where(one, u < p_hit, u < b_dark)
        count = clicks.sum(axis=1)
        out = np.zeros((2, n + 1))
        if not weighted:
            out[0] = np.bincount(count, minlength=n + 1)
            return out
        a = src.sum(axis=1)
        b = one.sum(axis=1)
        dc = (clicks & ~one).sum(axis=1)
        logw = np.zeros(m)
        for hits, misses, (l1, l0) in ((a, n - a, l_src), (b, a - b, l_one), (dc, n - b - dc, l_dark)):
            if l1 or l0:
                logw += np.where(hits > 0, hits * l1, 0.0) + np.where(misses > 0, misses * l0, 0.0)
        w = np.exp(logw)
        out[0] = np.bincount(count, weights=w, minlength=n + 1)
        out[1] = np.bincount(count, weights=w * w, minlength=n + 1)
        return out

    total = _run_shards(shard, trials, workers)
    # tail sums over click counts >= k
    tail_w = np.cumsum(total[0][::-1])[::-1]
    tail_w2 = np.cumsum(total[1][::-1])[::-1]
    if not weighted:
        return [wilson(int(round(tail_w[k])), trials, level) for k in range(n + 1)]
    return [_weighted_estimate(float(tail_w[k]), float(tail_w2[k]), trials, level)
            for k in range(n + 1)]


@dataclass(frozen=True)
class SimulatedLink:
    t: float
    design: EsdDesign
    mode: str
    trials: int
    seed: RngSeed
    nesr: EstimateWithCI
    s_esd: EstimateWithCI
    qber: EstimateWithCI
    p_tail: EstimateWithCI
    q_tail: EstimateWithCI
    importance: bool = False

    def summary(self) -> str:
        lines = [
            f"mode={self.mode}",
            f"t={self.t!r}",
            f"n={self.design.n}",
            f"k={self.design.k}",
            f"trials={self.trials}",
            f"seed={self.seed.seed}",
            f"stream_id={self.seed.stream_id}",
            f"importance={str(self.importance).lower()}",
        ]
        for name in ("p_tail", "q_tail", "nesr", "s_esd", "qber"):
            est: EstimateWithCI = getattr(self, name)
            lines += [
                f"{name}={est.value:.17g}",
                f"{name}.low={est.low:.17g}",
                f"{name}.high={est.high:.17g}",
                f"{name}.trials={est.trials}",
            ]
        lines.append(f"level={self.nesr.level!r}")
        return "\n".join(lines) + "\n"


def simulate_link(
    t: float,
    design: EsdDesign,
    params: LinkParams,
    trials: int,
    seed: RngSeed = RngSeed(),
    mode: str = "direct",
    *,
    importance: bool = True,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
) -> SimulatedLink:
    """Empirical NESR, S_ESD and QBER for one (t, n, k) point.

    ``direct`` draws the signal itself (non-empty with probability t) and the
    full two-detector message readout. ``conditional`` estimates the two
    acceptance tails separately (``trials`` each) and combines them with t;
    it is the only mode allowed below t = 1e-4.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    if mode == "direct":
        if t < RARE_EVENT_T:
            raise RareEventError(
                f"t={t:g} is below {RARE_EVENT_T:g}; direct sampling cannot resolve the "
                "non-empty branch, use conditional mode")
        return _simulate_direct(t, design, params, trials, seed, workers, level)
    if mode == "conditional":
        return _simulate_conditional(t, design, params, trials, seed, importance, workers, level)
    raise ValueError(f"unknown mode {mode!r}")


def _simulate_direct(t, design, params, trials, seed, workers, level) -> SimulatedLink:
    n, k = design.n, design.k
    p_src, p_hit, d = _aux_stage_probs(params)
    p_nonempty, e_p = params.p, params.source.e_p
    e_c = params.protocol.e_c

    def shard(index: int, m: int) -> np.ndarray:
        rng = seed.generator(_DIRECT, index)
        signal = rng.random(m) < t
        p_one = np.where(signal, p_nonempty, e_p)[:, None]
        src = rng.random((m, n)) < p_src
        one = src & (rng.random((m, n)) < p_one)
        u = rng.random((m, n))
        accepted = np.where(one, u < p_hit, u < d).sum(axis=1) >= k
        # two-detector readout; the photon lands on the wrong detector with prob e_C
        wrong = rng.random(m) < e_c
        va, vb = rng.random(m), rng.random(m)
        click_right = np.where(signal & ~wrong, va < p_hit, va < d)
        click_wrong = np.where(signal & wrong, vb < p_hit, vb < d)
        effective = accepted & (click_right ^ click_wrong)
        error = effective & click_wrong
        return np.array([
            signal.sum(), (signal & accepted).sum(), (~signal & accepted).sum(),
            effective.sum(), error.sum(),
        ], dtype=np.int64)

    n_sig, sig_acc, vac_acc, n_eff, n_err = (int(v) for v in _run_shards(shard, trials, workers))
    n_acc = sig_acc + vac_acc
    if n_acc == 0:
        raise UndefinedRatioError("no trial passed the detection block")
    return SimulatedLink(
        t=t, design=design, mode="direct", trials=trials, seed=seed,
        nesr=wilson(sig_acc, n_acc, level),
        s_esd=wilson(n_acc, trials, level),
        qber=wilson(n_err, n_eff, level),
        p_tail=wilson(sig_acc, n_sig, level),
        q_tail=wilson(vac_acc, trials - n_sig, level),
    )


def _simulate_conditional(t, design, params, trials, seed, importance, workers, level) -> SimulatedLink:
    k = design.k
    p_est = simulate_aux_branch(True, design, params, trials, seed, importance=importance,
                                workers=workers, level=level)[k]
    q_est = simulate_aux_branch(False, design, params, trials, seed, importance=importance,
                                workers=workers, level=level)[k]
    probs = report_probs(params.protocol.e_c, params.detector)
    nesr_est, s_est, qber_est = combine_branches(t, p_est, q_est, probs)
    return SimulatedLink(t=t, design=design, mode="conditional", trials=trials, seed=seed,
                         nesr=nesr_est, s_esd=s_est, qber=qber_est, p_tail=p_est, q_tail=q_est,
                         importance=importance)


def combine_branches(
    t: float, p_est: EstimateWithCI, q_est: EstimateWithCI, probs: ReportProbs
) -> tuple[EstimateWithCI, EstimateWithCI, EstimateWithCI]:
    """Propagate branch tail intervals to NESR, S_ESD and QBER.

    All three are monotone in each tail, so interval endpoints map to
    endpoints.
    """
    level = p_est.level
    trials = min(p_est.trials, q_est.trials)

    def nesr_of(p: float, q: float, fallback: float) -> float:
        den = t * p + (1 - t) * q
        return t * p / den if den > 0 else fallback

    if t * p_est.value + (1 - t) * q_est.value == 0:
        raise UndefinedRatioError("no accepted trial in either branch")
    nesr_value = nesr_of(p_est.value, q_est.value, 0.0)
    nesr_lo = nesr_of(p_est.low, q_est.high, 0.0)
    nesr_hi = nesr_of(p_est.high, q_est.low, 1.0)
    nesr_est = EstimateWithCI(nesr_value, nesr_lo, nesr_hi, trials, level)

    s_est = EstimateWithCI(t * p_est.value + (1 - t) * q_est.value,
                           t * p_est.low + (1 - t) * q_est.low,
                           t * p_est.high + (1 - t) * q_est.high, trials, level)

    q_ends = sorted((qber_formula(nesr_lo, probs), qber_formula(nesr_hi, probs)))
    qber_est = EstimateWithCI(qber_formula(nesr_value, probs), q_ends[0], q_ends[1], trials, level)
    return nesr_est, s_est, qber_est


AGREE, DISAGREE, INCONCLUSIVE = "agree", "disagree", "inconclusive"


@dataclass(frozen=True)
class Agreement:
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return DISAGREE not in self.verdicts.values()

    def lines(self) -> list[str]:
        return [f"{name}={verdict}" for name, verdict in self.verdicts.items()]


def judge(estimate: EstimateWithCI, target: float | None, disagree_sigma: float = 4.0,
          tol: float = 1e-12) -> str:
    """agree if target is inside the interval, disagree beyond ``disagree_sigma``."""
    if target is None or estimate.trials == 0:
        return INCONCLUSIVE
    if estimate.contains(target, tol):
        return AGREE
    lo, hi = estimate.bounds(disagree_sigma)
    if lo - tol <= target <= hi + tol:
        return INCONCLUSIVE
    return DISAGREE


def compare_to_analytic(
    empirical: SimulatedLink, analytic: LinkMetrics,
    fields_: Sequence[str] = ("p_tail", "q_tail", "nesr", "s_esd", "qber"),
) -> Agreement:
    return Agreement({name: judge(getattr(empirical, name), getattr(analytic, name))
                      for name in fields_})
