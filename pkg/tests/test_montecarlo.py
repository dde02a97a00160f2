import random
import statistics

import pytest

from esdlink.analytics import EsdDesign, UndefinedRatioError, link_metrics
from esdlink.montecarlo import (
    AGREE,
    DISAGREE,
    INCONCLUSIVE,
    EstimateWithCI,
    RareEventError,
    RngSeed,
    SimulatedLink,
    compare_to_analytic,
    judge,
    simulate_aux_branch,
    simulate_link,
    wilson,
)
from randomsets import random_link
from esdlink.params import AuxSourceParams, DetectorParams, GateParams, LinkParams, ProtocolParams

IDEAL = LinkParams(detector=DetectorParams(1.0, 0.0), source=AuxSourceParams(y=0.0, e_p=0.0),
                   gate=GateParams(1.0, 0.0), protocol=ProtocolParams(e_c=0.0))


def test_wilson_basics():
    est = wilson(0, 100)
    assert est.value == 0.0 and est.low == 0.0 and est.high > 0
    est = wilson(50, 100)
    assert est.low < 0.5 < est.high
    assert est.half_width == pytest.approx(0.5 * (est.high - est.low))
    empty = wilson(0, 0)
    assert empty.trials == 0 and (empty.low, empty.high) == (0.0, 1.0)


def test_ideal_nonempty_branch():
    ests = simulate_aux_branch(True, EsdDesign(1, 1), IDEAL, 100_000, RngSeed(1))
    assert ests[0].value == 1.0
    assert ests[1].value == 1.0 and ests[1].high == 1.0
    assert ests[1].half_width < 1e-4


def test_ideal_vacuum_branch():
    ests = simulate_aux_branch(False, EsdDesign(1, 1), IDEAL, 100_000, RngSeed(1))
    assert ests[1].value == 0.0 and ests[1].low == 0.0
    assert ests[1].half_width < 1e-4


def test_branch_rejects_zero_trials(ref):
    with pytest.raises(ValueError):
        simulate_aux_branch(True, EsdDesign(1, 1), ref, 0)


def test_ideal_lossless_link():
    sim = simulate_link(1.0, EsdDesign(0, 0), IDEAL, 20_000, RngSeed(3))
    assert sim.nesr.value == 1.0
    assert sim.qber.value == 0.0
    assert sim.s_esd.value == 1.0


def test_no_block_half_transmission(ref):
    sim = simulate_link(0.5, EsdDesign(0, 0), ref, 1_000_000, RngSeed(4))
    assert sim.nesr.contains(0.5)
    assert sim.s_esd.value == 1.0


def test_rare_event_regime_needs_conditional(ref):
    with pytest.raises(RareEventError):
        simulate_link(1e-13, EsdDesign(7, 3), ref, 1000, RngSeed(0), "direct")


def test_unknown_mode(ref):
    with pytest.raises(ValueError):
        simulate_link(0.5, EsdDesign(1, 1), ref, 1000, RngSeed(0), "importance")


def test_no_acceptance_is_undefined():
    params = LinkParams(detector=DetectorParams(0.5, 0.0), source=AuxSourceParams(y=1.0, e_p=0.0))
    with pytest.raises(UndefinedRatioError):
        simulate_link(0.5, EsdDesign(2, 1), params, 1000, RngSeed(0))


def test_deterministic_across_workers(ref):
    design = EsdDesign(5, 2)
    params = ref.with_deflection(0.3)
    runs = [simulate_link(0.2, design, params, 300_000, RngSeed(9, 2), workers=w) for w in (1, 1, 3)]
    assert runs[0] == runs[1] == runs[2]
    assert runs[0].summary() == runs[2].summary()
    other = simulate_link(0.2, design, params, 300_000, RngSeed(9, 3))
    assert other != runs[0]


def test_conditional_deterministic_across_workers(ref):
    a = simulate_link(1e-9, EsdDesign(7, 3), ref, 300_000, RngSeed(5), "conditional", workers=1)
    b = simulate_link(1e-9, EsdDesign(7, 3), ref, 300_000, RngSeed(5), "conditional", workers=4)
    assert a == b


def test_half_width_shrinks_like_root_two():
    # mid-range NESR (~0.16), away from the boundary where Wilson widths scale like 1/N
    params = LinkParams(source=AuxSourceParams(y=0.2, e_p=0.1), gate=GateParams(0.4))
    design = EsdDesign(2, 1)
    base, doubled = [], []
    for s in range(8):
        base.append(simulate_link(0.05, design, params, 100_000, RngSeed(s)).nesr.half_width)
        doubled.append(simulate_link(0.05, design, params, 200_000, RngSeed(100 + s)).nesr.half_width)
    ratio = statistics.fmean(base) / statistics.fmean(doubled)
    assert 1.3 <= ratio <= 1.5


def test_direct_agrees_with_analytic():
    rng = random.Random(21)
    for i in range(5):
        t, design, params = random_link(rng, n_max=6)
        sim = simulate_link(t, design, params, 400_000, RngSeed(i))
        verdict = compare_to_analytic(sim, link_metrics(t, design, params))
        assert verdict.passed, (t, design, verdict)


def test_importance_sampling_matches_plain(ref):
    design = EsdDesign(6, 2)
    params = ref.with_deflection(0.6)
    for nonempty in (True, False):
        plain = simulate_aux_branch(nonempty, design, params, 1_000_000, RngSeed(1))
        tilted = simulate_aux_branch(nonempty, design, params, 200_000, RngSeed(2), importance=True)
        m = link_metrics(0.5, design, params)
        target = m.p_tail if nonempty else m.q_tail
        assert judge(tilted[2], target) == AGREE
        assert judge(plain[2], target) != DISAGREE


def test_conditional_tiny_t_hits_analytic(ref):
    design = EsdDesign(7, 3)
    sim = simulate_link(1e-13, design, ref, 1_000_000, RngSeed(7), "conditional")
    analytic = link_metrics(1e-13, design, ref)
    assert compare_to_analytic(sim, analytic).passed
    assert sim.qber.half_width < 0.002


def test_branch_consistency_with_direct(ref):
    design = EsdDesign(3, 2)
    params = ref.with_deflection(0.5)
    t = 0.05
    direct = simulate_link(t, design, params, 1_000_000, RngSeed(31))
    cond = simulate_link(t, design, params, 1_000_000, RngSeed(32), "conditional", importance=False)
    sigma = ((direct.nesr.half_width / direct.nesr.z) ** 2 + (cond.nesr.half_width / cond.nesr.z) ** 2) ** 0.5
    assert abs(direct.nesr.value - cond.nesr.value) <= 4 * sigma


def test_compare_flags_perturbation(ref):
    design = EsdDesign(3, 2)
    params = ref.with_deflection(0.5)
    sim = simulate_link(0.3, design, params, 500_000, RngSeed(12))
    analytic = link_metrics(0.3, design, params)
    assert compare_to_analytic(sim, analytic).passed
    from dataclasses import replace
    shifted = replace(analytic, nesr=analytic.nesr + 10 * sim.nesr.half_width)
    report = compare_to_analytic(sim, shifted)
    assert report.verdicts["nesr"] == DISAGREE and not report.passed


def test_compare_zero_trials_inconclusive(ref):
    empty = wilson(0, 0)
    sim = SimulatedLink(0.5, EsdDesign(0, 0), "direct", 0, RngSeed(), empty, empty, empty, empty, empty)
    report = compare_to_analytic(sim, link_metrics(0.5, EsdDesign(0, 0), ref))
    assert set(report.verdicts.values()) == {INCONCLUSIVE}
    assert report.passed


def test_judge_bands():
    est = EstimateWithCI(0.5, 0.47, 0.53, 1000)
    assert judge(est, 0.52) == AGREE
    assert judge(est, 0.535) == INCONCLUSIVE
    assert judge(est, 0.6) == DISAGREE
    assert judge(est, None) == INCONCLUSIVE


@pytest.mark.slow
def test_nonempty_branch_1e8_plain(ref):
    est = simulate_aux_branch(True, EsdDesign(7, 3), ref, 100_000_000, RngSeed(42))[3]
    assert est.contains(4.853728012462373e-06)
