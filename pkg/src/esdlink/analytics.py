"""Closed-form link quantities for a receiver with an empty-signal detection block.

The block fires ``n`` controlled gates on auxiliary carriers and accepts a
signal when at least ``k`` auxiliary detectors click. Everything here is a
pure function of scalar parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .binomial import binomial_tail, log_binomial_tail
from .params import (
    AuxSourceParams,
    DetectorParams,
    GateParams,
    LinkParams,
    ProtocolParams,
    effective_deflection,
)

N_CAP = 64


class UndefinedRatioError(ArithmeticError):
    """A ratio whose denominator is exactly zero (e.g. nothing is ever accepted)."""


@dataclass(frozen=True, order=True)
class EsdDesign:
    """Threshold design: ``n`` gated auxiliaries, accept on ``k`` or more clicks.

    ``EsdDesign(0, 0)`` means no block at all.
    """

    n: int
    k: int

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise TypeError("n and k must be integers")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got n={self.n}, k={self.k}")

    def __str__(self) -> str:
        return f"({self.n},{self.k})"


NO_BLOCK = EsdDesign(0, 0)


@dataclass(frozen=True)
class ReportProbs:
    """Correct/incorrect effective report probabilities on the message DOF.

    ``c_t``/``e_t`` apply to non-empty signals, ``c_l``/``e_l`` to vacuum.
    Two-detector readout: a report is effective only when exactly one fires.
    """

    c_t: float
    e_t: float
    c_l: float
    e_l: float


@dataclass(frozen=True)
class LinkMetrics:
    t: float
    design: EsdDesign
    p_s: float
    q_s: float
    p_tail: float
    q_tail: float
    s_esd: float
    nesr: float | None
    qber: float | None
    rate: float | None
    # log odds of NESR; does not saturate when NESR rounds to 1.0
    nesr_logit: float | None = None


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    bound: float
    nesr_threshold: float


def aux_report_prob_nonempty(p: float, det: DetectorParams, src: AuxSourceParams) -> float:
    """Click probability of one auxiliary detector when the signal carries a photon."""
    eta, d, y = det.eta, det.d, src.y
    return (1 - y) * (p * (eta + (1 - eta) * d) + (1 - p) * d) + y * d


def aux_report_prob_vacuum(det: DetectorParams, src: AuxSourceParams) -> float:
    """Click probability of one auxiliary detector when the signal is empty."""
    return aux_report_prob_nonempty(src.e_p, det, src)


def tails(design: EsdDesign, p_s: float, q_s: float) -> tuple[float, float]:
    return binomial_tail(design.n, design.k, p_s), binomial_tail(design.n, design.k, q_s)


def _nesr_from_tails(t: float, p_tail: float, q_tail: float) -> float:
    accepted_full = t * p_tail
    denom = accepted_full + (1 - t) * q_tail
    if denom == 0.0:
        raise UndefinedRatioError("no signal passes the block (both tails are zero)")
    return accepted_full / denom


def nesr(t: float, design: EsdDesign, p_s: float, q_s: float) -> float:
    """Fraction of accepted signals that actually carried a photon."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    return _nesr_from_tails(t, *tails(design, p_s, q_s))


def sifting_rate_esd(t: float, design: EsdDesign, p_s: float, q_s: float) -> float:
    """Fraction of all incoming signals that the block accepts."""
    p_tail, q_tail = tails(design, p_s, q_s)
    return t * p_tail + (1 - t) * q_tail


def report_probs(e_c: float, det: DetectorParams) -> ReportProbs:
    eta, d = det.eta, det.d
    hit = eta + (1 - eta) * d
    miss = (1 - eta) * d * (1 - d)
    c_t = (1 - e_c) * hit * (1 - d) + e_c * miss
    e_t = e_c * hit * (1 - d) + (1 - e_c) * miss
    dark = d * (1 - d)
    return ReportProbs(c_t=c_t, e_t=e_t, c_l=dark, e_l=dark)


def qber(nesr_value: float, probs: ReportProbs) -> float:
    num = nesr_value * probs.e_t + (1 - nesr_value) * probs.e_l
    den = nesr_value * (probs.e_t + probs.c_t) + (1 - nesr_value) * (probs.e_l + probs.c_l)
    if den == 0.0:
        raise UndefinedRatioError("no effective report is possible")
    return num / den


def esd_effective(gate: GateParams, src: AuxSourceParams) -> bool:
    """True when the gate deflects more than the auxiliary error rate.

    An always-empty auxiliary source (y = 1) never carries the deflection, so
    it is reported as ineffective regardless of the gate.
    """
    return src.y < 1.0 and effective_deflection(gate) > src.e_p


def feasibility(protocol: ProtocolParams, det: DetectorParams) -> Feasibility:
    """Whether QBER < e is reachable at any distance, with the NESR it takes.

    ``bound`` is the largest channel error e_C tolerated; ``nesr_threshold``
    is the NESR above which QBER < e (``inf`` when no NESR suffices).
    """
    e, e_c, eta, d = protocol.e, protocol.e_c, det.eta, det.d
    bound = e - (1 - 2 * e) * (1 - eta) * d / eta
    margin = (e - e_c) + d * (1 - 2 * e)
    threshold = (1 - 2 * e) * d / (eta * margin) if margin > 0 else math.inf
    return Feasibility(feasible=e_c < bound, bound=bound, nesr_threshold=threshold)


def bb84_effective_detection(nesr_value: float, det: DetectorParams) -> float:
    """Probability that a BB84 detection report is effective (exactly one click)."""
    eta, d = det.eta, det.d
    dark = d * (1 - d)
    return nesr_value * (eta * (1 - d) + 2 * (1 - eta) * dark) + (1 - nesr_value) * 2 * dark


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def default_postprocessing(q: float) -> float:
    """max(0, 1 - 2 H2(Q)); a stand-in for the protocol's post-processing yield."""
    return max(0.0, 1.0 - 2.0 * binary_entropy(q))


def key_rate(s: float, s_esd: float, e_o: float, g_value: float) -> float:
    return s * s_esd * e_o * g_value


def link_metrics(
    t: float,
    design: EsdDesign,
    params: LinkParams,
    effective_detection: Callable[[float, DetectorParams], float] = bb84_effective_detection,
    postprocessing: Callable[[float], float] = default_postprocessing,
) -> LinkMetrics:
    """Evaluate every closed-form quantity for one (t, n, k) point."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    det = params.detector
    p_s = aux_report_prob_nonempty(params.p, det, params.source)
    q_s = aux_report_prob_vacuum(det, params.source)
    p_tail, q_tail = tails(design, p_s, q_s)
    s_esd = t * p_tail + (1 - t) * q_tail

    nesr_value = qber_value = rate = logit = None
    try:
        nesr_value = _nesr_from_tails(t, p_tail, q_tail)
    except UndefinedRatioError:
        pass
    if nesr_value is not None:
        log_p = log_binomial_tail(design.n, design.k, p_s)
        log_q = log_binomial_tail(design.n, design.k, q_s)
        if t == 1.0 or log_q == -math.inf:
            logit = math.inf
        elif log_p == -math.inf:
            logit = -math.inf
        else:
            logit = math.log(t) + log_p - math.log1p(-t) - log_q
        try:
            qber_value = qber(nesr_value, report_probs(params.protocol.e_c, det))
        except UndefinedRatioError:
            pass
    if nesr_value is not None and qber_value is not None:
        rate = key_rate(params.protocol.s, s_esd, effective_detection(nesr_value, det),
                        postprocessing(qber_value))
    return LinkMetrics(t=t, design=design, p_s=p_s, q_s=q_s, p_tail=p_tail, q_tail=q_tail,
                       s_esd=s_esd, nesr=nesr_value, qber=qber_value, rate=rate,
                       nesr_logit=logit)
