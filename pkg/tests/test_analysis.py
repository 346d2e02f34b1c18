import math

import numpy as np
import pytest

from conftest import V, config, peaked, scripted, uniform
from lead import (InvalidInputError, LeadConfig, ToyTransformer, TruncatedDistributionError, decode,
                  entropy, entropy_from_top_k, entropy_summary, marker_entropy_report,
                  masking_ablation, segment_steps, select_steps)
from lead.analysis import reports_to_csv, reports_to_json
from lead.controller import Event, Mode
from lead.engine import StepRecord, top_k_pairs
from lead.tasks import ANSWER_A, ANSWER_NONE, BranchTaskModel, exact_match

NO_SWITCH = dict(window=math.inf)


def test_summary_constant_uniform():
    res = decode(scripted([uniform()] * 6 + [peaked(10)]), [], [0], config(max_reasoning_steps=6, **NO_SWITCH))
    stats = entropy_summary(res)
    assert stats.mean == pytest.approx(math.log(V), abs=1e-9)
    assert stats.p50 == pytest.approx(math.log(V), abs=1e-9)


def test_summary_two_values():
    rows = [peaked(1, height=1e3), np.r_[0.0, 0.0, np.full(V - 2, -1e4)]]
    res = decode(scripted(rows), [], [0], config(max_reasoning_steps=2, **NO_SWITCH))
    assert entropy_summary(res).mean == pytest.approx(math.log(2) / 2, abs=1e-9)


def test_summary_reasoning_only():
    rows = [uniform()] * 3 + [peaked(10)] + [peaked(1)] * 5
    res = decode(scripted(rows), [], [0], config(max_answer_steps=5, **NO_SWITCH))
    assert len(entropy_summary(res).entropies) == 4


def test_summary_matches_stored_probs():
    cfg = LeadConfig(max_reasoning_steps=100, max_answer_steps=1)
    res = decode(ToyTransformer(seed=5), [], [1, 2], cfg, keep_probs=True)
    n = len(res.reasoning_trace)
    direct = [-sum(q * math.log(q + 1e-12) for q in p) for p in res.probs[:n]]
    stats = entropy_summary(res)
    np.testing.assert_allclose(stats.entropies, direct, atol=1e-12)
    assert stats.mean == pytest.approx(sum(direct) / n, abs=1e-12)
    assert stats.max == pytest.approx(max(direct), abs=1e-12)
    assert stats.p50 <= stats.p90 <= stats.max
    assert stats.latent_steps == sum(r.mode.value == "LATENT" for r in res.reasoning_trace)


def test_summary_empty_trace():
    with pytest.raises(InvalidInputError):
        entropy_summary([])


def test_top_k_reconstruction_flags_truncation():
    res = decode(ToyTransformer(seed=5), [], [1], LeadConfig(max_reasoning_steps=3, max_answer_steps=1))
    with pytest.raises(TruncatedDistributionError):
        entropy_from_top_k(res.trace[0], vocab_size=64)


def test_top_k_reconstruction_exact_for_tiny_vocab():
    # with three tokens the stored top-3 is the whole distribution
    p = np.array([0.7, 0.2, 0.1])
    rec = StepRecord(0, "reasoning", 0, entropy(p), 0.0, Mode.DISCRETE, Event.NONE, False, 0, 0,
                     top_k_pairs(p))
    assert entropy_from_top_k(rec, vocab_size=3) == pytest.approx(0.801819, abs=1e-5)


def _marker_trace():
    # uniform rows sample token 0 (marker); one-hot rows elsewhere
    rows = [uniform(), peaked(1, height=1e3), uniform(), peaked(2, height=1e3), peaked(3, height=1e3)]
    return decode(scripted(rows), [], [0], config(max_reasoning_steps=5, **NO_SWITCH))


def test_marker_difference_is_log_v():
    rep = marker_entropy_report(_marker_trace(), {0})
    assert (rep.marker_count, rep.other_count) == (2, 3)
    assert rep.difference == pytest.approx(math.log(V), abs=1e-6)


def test_marker_empty_set():
    rep = marker_entropy_report(_marker_trace(), set())
    assert rep.marker_mean is None and rep.difference is None and rep.other_count == 5


def test_marker_all_tokens():
    rep = marker_entropy_report(_marker_trace(), set(range(V)))
    assert rep.other_mean is None and rep.marker_count == 5


def test_marker_partition_sums():
    res = decode(ToyTransformer(seed=9), [], [4], LeadConfig(max_reasoning_steps=80, max_answer_steps=1))
    toks = [r.token for r in res.reasoning_trace]
    rep = marker_entropy_report(res, set(toks[::3]))
    total = sum(r.entropy for r in res.reasoning_trace)
    assert rep.marker_count * rep.marker_mean + rep.other_count * rep.other_mean == pytest.approx(total, abs=1e-9)


def test_segments():
    assert [list(segment_steps(10, s)) for s in range(1, 6)] == [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]]
    assert list(segment_steps(3, "all")) == [0, 1, 2]
    assert sum(len(segment_steps(7, s)) for s in range(1, 6)) == 7
    for bad in (0, 6, "first"):
        with pytest.raises(InvalidInputError):
            segment_steps(10, bad)


def test_select_by_entropy_rank():
    res = decode(BranchTaskModel(), [], [0], LeadConfig(max_answer_steps=2))
    high = select_steps(res, "mask_high_entropy", 0.25)
    low = select_steps(res, "mask_low_entropy", 0.25)
    assert 0 in high and 0 not in low
    assert len(high) == len(low) == math.ceil(0.25 * len(res.reasoning_trace))


def test_random_selection_reproducible():
    res = decode(ToyTransformer(seed=1), [], [1], LeadConfig(max_reasoning_steps=40, max_answer_steps=1))
    a = select_steps(res, "mask_random", 0.25, np.random.default_rng(3))
    b = select_steps(res, "mask_random", 0.25, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


def _branch(segment, condition="mask_high_entropy", **kw):
    m = BranchTaskModel()
    return masking_ablation(m, [], [0], LeadConfig(max_answer_steps=3), condition, segment,
                            exact_match([ANSWER_A]), **kw)


def test_branch_task_baseline_is_correct():
    res = decode(BranchTaskModel(), [], [0], LeadConfig(max_answer_steps=3))
    assert res.answer_tokens[0] == ANSWER_A


def test_masking_early_segment_flips_answer():
    rep = _branch(1)
    assert 0 in rep.masked_steps
    assert (rep.score_before, rep.score_after, rep.delta) == (1.0, 0.0, -1.0)


def test_masking_late_segment_is_harmless():
    rep = _branch(5)
    assert rep.delta == 0.0 and rep.score_after == 1.0


def test_no_qualifying_tokens_is_noop():
    rep = _branch(5)
    assert rep.masked_steps == () and rep.delta == 0.0


def test_low_entropy_masking_is_harmless():
    assert all(_branch(s, "mask_low_entropy").delta == 0.0 for s in range(1, 6))


def test_full_masking_matches_no_reasoning():
    m = BranchTaskModel(n_filler=0)
    cfg = LeadConfig(max_answer_steps=3)
    score = exact_match([ANSWER_NONE])
    rep = masking_ablation(m, [], [0], cfg, "mask_high_entropy", "all", score, fraction=1.0)
    no_reasoning = score(decode(m, [], [0], cfg, skip_reasoning=True))
    assert rep.score_after == no_reasoning == 1.0
    assert len(rep.masked_steps) == 2


def test_masking_delta_invariant():
    for s in (1, 2, 3, "all"):
        rep = _branch(s, "mask_random", seed=2)
        assert rep.delta == rep.score_after - rep.score_before


def test_masking_bad_segment():
    with pytest.raises(InvalidInputError):
        _branch(6)


def test_report_exports():
    reps = [_branch(1), _branch(5)]
    csv_text = reports_to_csv(reps)
    assert csv_text.splitlines()[0] == "condition,segment,score_before,score_after,delta,masked_steps"
    assert len(csv_text.splitlines()) == 3
    assert '"delta": -1.0' in reports_to_json(reps)
