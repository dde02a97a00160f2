import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from esdlink.analytics import (
    NO_BLOCK,
    EsdDesign,
    ReportProbs,
    UndefinedRatioError,
    aux_report_prob_nonempty,
    aux_report_prob_vacuum,
    bb84_effective_detection,
    binary_entropy,
    default_postprocessing,
    esd_effective,
    feasibility,
    key_rate,
    link_metrics,
    nesr,
    qber,
    report_probs,
    sifting_rate_esd,
)
from esdlink.binomial import binomial_tail
from esdlink.params import AuxSourceParams, DetectorParams, GateParams, ProtocolParams

# 50-digit evaluations from tests/oracle.py
P_S_099 = 5.2031421523895304e-03
Q_S = 1.0611196267453597e-05
P_TAIL_73 = 4.8537280124623728e-06
Q_TAIL_73 = 4.1816459701556832e-14
NESR_1E13 = 1.1607084170859573e-05
QBER_1E13 = 2.5482398214810322e-02
S_ESD_1E13 = 4.1816945074353897e-14
NESR_05_1E12 = 1.5070016682799659e-05
QBER_05_1E12 = 2.311392880519452e-02


def ref_ps(params):
    return (aux_report_prob_nonempty(params.p, params.detector, params.source),
            aux_report_prob_vacuum(params.detector, params.source))


def test_design_invariants():
    assert NO_BLOCK == EsdDesign(0, 0)
    with pytest.raises(ValueError):
        EsdDesign(2, 3)
    with pytest.raises(ValueError):
        EsdDesign(-1, 0)


def test_single_report_probs(ref):
    p_s, q_s = ref_ps(ref)
    assert p_s == pytest.approx(P_S_099, rel=1e-13)
    assert q_s == pytest.approx(Q_S, rel=1e-13)


def test_single_report_trivial():
    perfect = DetectorParams(eta=1.0, d=0.0)
    assert aux_report_prob_nonempty(1.0, perfect, AuxSourceParams(y=0.0)) == 1.0
    assert aux_report_prob_nonempty(0.7, perfect, AuxSourceParams(y=1.0)) == 0.0
    assert aux_report_prob_vacuum(DetectorParams(0.5, 0.0), AuxSourceParams(y=0.3, e_p=0.0)) == 0.0
    assert aux_report_prob_vacuum(DetectorParams(0.5, 0.0), AuxSourceParams(y=1.0, e_p=0.0)) == 0.0


def test_nesr_no_block_is_t():
    assert nesr(0.3, NO_BLOCK, 0.2, 0.1) == 0.3
    assert sifting_rate_esd(0.3, NO_BLOCK, 0.2, 0.1) == 1.0


def test_nesr_anchor_points(ref, ref_half):
    p_s, q_s = ref_ps(ref)
    assert nesr(1e-13, EsdDesign(7, 3), p_s, q_s) == pytest.approx(NESR_1E13, rel=1e-12)
    assert sifting_rate_esd(1e-13, EsdDesign(7, 3), p_s, q_s) == pytest.approx(S_ESD_1E13, rel=1e-12)
    p_s, q_s = ref_ps(ref_half)
    assert nesr(1e-12, EsdDesign(7, 3), p_s, q_s) == pytest.approx(NESR_05_1E12, rel=1e-12)


def test_sifting_all_k_equals_n():
    assert sifting_rate_esd(1.0, EsdDesign(5, 5), 0.5, 0.1) == 0.03125


def test_nesr_undefined_when_nothing_accepted():
    with pytest.raises(UndefinedRatioError):
        nesr(0.5, EsdDesign(3, 1), 0.0, 0.0)


def test_report_probs_reference():
    probs = report_probs(0.015, DetectorParams(0.78, 1e-7))
    assert probs.e_t == pytest.approx(0.0117000208299978, rel=1e-12)
    assert probs.c_t == pytest.approx(0.7682999451699978, rel=1e-12)
    assert probs.c_l == probs.e_l == pytest.approx(1e-7 * (1 - 1e-7), rel=1e-15)


def test_report_probs_trivial():
    probs = report_probs(0.0, DetectorParams(0.6, 0.0))
    assert probs == ReportProbs(c_t=0.6, e_t=0.0, c_l=0.0, e_l=0.0)
    half = report_probs(0.1, DetectorParams(0.6, 0.5))
    assert half.c_l == half.e_l == 0.25


def test_report_totals_below_one():
    rng = random.Random(3)
    for _ in range(1000):
        probs = report_probs(rng.uniform(0, 0.5), DetectorParams(rng.uniform(1e-3, 1), rng.uniform(0, 0.999)))
        assert probs.c_t + probs.e_t <= 1 + 1e-15
        assert probs.c_l + probs.e_l <= 1 + 1e-15


def test_qber_limits():
    probs = report_probs(0.015, DetectorParams(0.78, 1e-7))
    assert qber(0.0, probs) == 0.5
    assert qber(1.0, report_probs(0.015, DetectorParams(0.78, 0.0))) == pytest.approx(0.015, rel=1e-14)
    assert qber(NESR_1E13, probs) == pytest.approx(QBER_1E13, rel=1e-10)


def test_qber_undefined():
    with pytest.raises(UndefinedRatioError):
        qber(0.0, report_probs(0.0, DetectorParams(0.5, 0.0)))


def test_qber_symmetric_reports_give_half():
    probs = ReportProbs(c_t=0.3, e_t=0.3, c_l=0.01, e_l=0.01)
    for v in (0.0, 1e-9, 0.4, 1.0):
        assert qber(v, probs) == 0.5


def test_esd_effective():
    src = AuxSourceParams(e_p=0.002)
    assert esd_effective(GateParams(0.99, 0.0), src)
    assert not esd_effective(GateParams(0.001, 0.0), src)
    assert not esd_effective(GateParams(0.002, 0.0), src)
    assert not esd_effective(GateParams(0.99, 0.0), AuxSourceParams(y=1.0, e_p=0.002))


def test_feasibility_reference():
    f = feasibility(ProtocolParams(e=0.03, e_c=0.015), DetectorParams(0.78, 1e-7))
    assert f.feasible
    assert f.bound == pytest.approx(0.029999973487179487, rel=1e-14)
    assert f.nesr_threshold == pytest.approx(8.034137686925197e-06, rel=1e-12)


def test_feasibility_trivial():
    assert not feasibility(ProtocolParams(e=0.03, e_c=0.03), DetectorParams(0.78, 1e-7)).feasible
    f = feasibility(ProtocolParams(e=0.03, e_c=0.01), DetectorParams(0.78, 0.0))
    assert f.feasible and f.nesr_threshold == 0.0


def test_threshold_matches_qber_condition():
    """Above the NESR threshold QBER < e, below it QBER > e."""
    det = DetectorParams(0.78, 1e-7)
    proto = ProtocolParams(e=0.03, e_c=0.015)
    f = feasibility(proto, det)
    probs = report_probs(proto.e_c, det)
    assert qber(f.nesr_threshold * (1 + 1e-6), probs) < proto.e
    assert qber(f.nesr_threshold * (1 - 1e-6), probs) > proto.e


def test_key_rate():
    assert key_rate(0.5, 1.0, 1.0, 1.0) == 0.5
    assert key_rate(0.5, 0.3, 0.7, 0.0) == 0.0


def test_bb84_effective_detection():
    assert bb84_effective_detection(1.0, DetectorParams(0.78, 0.0)) == 0.78
    assert bb84_effective_detection(0.0, DetectorParams(0.78, 1e-7)) == pytest.approx(2e-7, rel=1e-6)
    e = bb84_effective_detection(1.1607e-5, DetectorParams(0.78, 1e-7))
    assert e == pytest.approx(9.253457263962181e-06, rel=1e-10)


def test_rate_composition(ref):
    m = link_metrics(1e-13, EsdDesign(7, 3), ref, postprocessing=lambda q: 1.0)
    e_o = bb84_effective_detection(m.nesr, ref.detector)
    assert m.rate == pytest.approx(0.5 * m.s_esd * e_o, rel=1e-15)
    assert m.rate == pytest.approx(0.5 * S_ESD_1E13 * 9.2535e-6, rel=1e-4)


def test_default_postprocessing():
    assert default_postprocessing(0.0) == 1.0
    assert default_postprocessing(0.5) == 0.0
    assert default_postprocessing(0.11) == pytest.approx(max(0.0, 1 - 2 * binary_entropy(0.11)))
    assert default_postprocessing(0.2) == 0.0


def test_link_metrics_reference(ref):
    m = link_metrics(1e-13, EsdDesign(7, 3), ref)
    assert m.p_tail == pytest.approx(P_TAIL_73, rel=1e-12)
    assert m.q_tail == pytest.approx(Q_TAIL_73, rel=1e-12)
    assert m.nesr == pytest.approx(NESR_1E13, rel=1e-12)
    assert m.qber == pytest.approx(QBER_1E13, rel=1e-10)
    assert m.nesr_logit == pytest.approx(math.log(NESR_1E13 / (1 - NESR_1E13)), rel=1e-12)


def test_link_metrics_half(ref_half):
    m = link_metrics(1e-12, EsdDesign(7, 3), ref_half)
    assert m.nesr == pytest.approx(NESR_05_1E12, rel=1e-12)
    assert m.qber == pytest.approx(QBER_05_1E12, rel=1e-10)


def test_link_metrics_undefined_is_explicit():
    from esdlink.params import LinkParams
    params = LinkParams(detector=DetectorParams(0.5, 0.0), source=AuxSourceParams(y=1.0, e_p=0.0))
    m = link_metrics(0.5, EsdDesign(3, 1), params)
    assert m.nesr is None and m.qber is None and m.rate is None
    assert m.s_esd == 0.0


# -- property checks -------------------------------------------------------

def random_set(rng):
    det = DetectorParams(eta=rng.uniform(1e-3, 1.0), d=rng.uniform(0, 0.2))
    src = AuxSourceParams(y=rng.uniform(0, 0.999), e_p=rng.uniform(0, 0.5))
    p = rng.uniform(0, 1)
    return p, det, src


def test_separation_equivalence_random():
    rng = random.Random(11)
    for _ in range(10_000):
        p, det, src = random_set(rng)
        p_s = aux_report_prob_nonempty(p, det, src)
        q_s = aux_report_prob_vacuum(det, src)
        assert (p_s > q_s) == (p > src.e_p)
        assert (p_s > q_s) == esd_effective(GateParams(p, 0.0), src)


def test_ratio_bound_and_equality():
    rng = random.Random(5)
    checked = 0
    while checked < 300:
        p, det, src = random_set(rng)
        p_s = aux_report_prob_nonempty(p, det, src)
        q_s = aux_report_prob_vacuum(det, src)
        if not p_s > q_s > 0:
            continue
        checked += 1
        n = rng.randint(1, 20)
        for k in range(1, n + 1):
            ratio = binomial_tail(n, k, q_s) / binomial_tail(n, k, p_s)
            floor = (q_s / p_s) ** k
            assert ratio >= floor * (1 - 1e-12)
            close = math.isclose(ratio, floor, rel_tol=1e-12)
            assert close == (k == n)


def test_no_separation_when_gate_too_weak():
    rng = random.Random(8)
    for _ in range(500):
        p, det, src = random_set(rng)
        p_s = aux_report_prob_nonempty(p, det, src)
        q_s = aux_report_prob_vacuum(det, src)
        if p_s > q_s:
            continue
        for n in range(0, 10):
            for k in range(n + 1):
                assert binomial_tail(n, k, q_s) >= binomial_tail(n, k, p_s) * (1 - 1e-12)


def test_nesr_to_one_with_k_equals_n(ref):
    p_s, q_s = ref_ps(ref)
    values = [nesr(1e-9, EsdDesign(n, n), p_s, q_s) for n in range(1, 30)]
    assert all(a < b or b == 1.0 for a, b in zip(values, values[1:]))
    assert values[-1] > 1 - 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-15, 0.5), st.floats(1.0001, 1e6), st.integers(1, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, n))))
def test_nesr_increasing_in_t(t, factor, nk):
    n, k = nk
    t2 = min(1.0, t * factor)
    design = EsdDesign(n, k)
    lo, hi = nesr(t, design, 5.2e-3, 1.06e-5), nesr(t2, design, 5.2e-3, 1.06e-5)
    assert lo <= hi
    if t2 > t and hi < 0.99:
        assert lo < hi
