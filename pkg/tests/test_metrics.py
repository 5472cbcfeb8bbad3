import math

import pytest
from hypothesis import given, strategies as st

from fifolap.metrics import RunRecord, bound_suite, prediction_error, ratio, smoothness_bound
from fifolap.model import ArrivalSequence, Packet
from fifolap.offline import opt_dp
from fifolap.policies import SQRT3

from conftest import sequences


def test_eta_zero_for_identical(seq_of):
    seq = seq_of(2, [[(1, 3), (2, 8)], [(3, 4)]])
    err = prediction_error(seq, seq)
    assert (err.eta, err.false_positive_value, err.false_negative_value) == (0, 0, 0)


def test_eta_swapped_values(seq_of):
    sigma = seq_of(1, [[(1, 5), (2, 3)]])
    hat = seq_of(1, [[(1, 3), (2, 5)]])
    err = prediction_error(sigma, hat)
    assert err.false_positive_value == 5  # predicted value of packet 2
    assert err.false_negative_value == 5  # true value of packet 1
    assert err.eta == 10


def test_eta_empty_prediction_is_all_false_negatives(seq_of):
    sigma = seq_of(2, [[(1, 3), (2, 8)], [(3, 4)], []])
    err = prediction_error(sigma, ArrivalSequence(2, ((), (), ())))
    assert err.eta == err.false_negative_value == opt_dp(sigma).value
    assert err.false_positive_value == 0


def test_mispredicted_value_counts_on_both_sides(seq_of):
    sigma = seq_of(1, [[(1, 10)]])
    hat = seq_of(1, [[(1, 1)]])
    err = prediction_error(sigma, hat)
    assert err.eta == 11 and err.common_value == 0
    assert abs(opt_dp(sigma).value - opt_dp(hat).value) <= err.eta


@st.composite
def pairs(draw):
    sigma = draw(sequences(max_packets=10))
    steps = [tuple(Packet(p.id, draw(st.integers(1, 10))) if draw(st.booleans()) else p
                   for p in s if draw(st.integers(0, 3))) for s in sigma.steps]
    return sigma, ArrivalSequence(sigma.capacity, tuple(steps))


@given(pairs())
def test_error_decomposition(pair):
    sigma, hat = pair
    err = prediction_error(sigma, hat)
    assert err.eta == err.false_positive_value + err.false_negative_value
    assert opt_dp(hat).value == err.common_value + err.false_positive_value
    assert opt_dp(sigma).value == err.common_value + err.false_negative_value
    assert abs(opt_dp(sigma).value - opt_dp(hat).value) <= err.eta


@given(sequences())
def test_eta_self_is_zero(seq):
    assert prediction_error(seq, seq).eta == 0


@given(sequences(max_packets=10), st.data())
def test_eta_symmetric_when_values_agree(sigma, data):
    steps = [tuple(p for p in s if data.draw(st.booleans())) for s in sigma.steps]
    hat = ArrivalSequence(sigma.capacity, tuple(steps))
    assert prediction_error(sigma, hat).eta == prediction_error(hat, sigma).eta


def test_tie_break_sensitivity_is_reportable(seq_of):
    sigma = seq_of(1, [[(1, 5), (2, 5)]])
    hat = seq_of(1, [[(1, 5)]])
    assert prediction_error(sigma, hat).eta == 0
    assert prediction_error(sigma, hat, tie_break="alternate").eta == 10


def test_ratio_and_bound_helpers():
    assert ratio(11, 7) == pytest.approx(11 / 7)
    assert ratio(3, 0) == math.inf
    assert ratio(0, 0) == 1.0
    assert smoothness_bound(0, 10, 1.0, SQRT3) == 1.0
    assert smoothness_bound(100, 10, 1.0, SQRT3) == SQRT3
    assert smoothness_bound(5, 0, 1.0, SQRT3) == SQRT3


@given(st.integers(1, 1000), st.floats(1.0, SQRT3), st.lists(st.integers(0, 500), min_size=2, max_size=10))
def test_smoothness_bound_non_decreasing(alg, rho, etas):
    bounds = [smoothness_bound(e, alg, rho, SQRT3) for e in sorted(etas)]
    assert bounds == sorted(bounds)


def _suite(**kw):
    base = dict(v_opt_true=0, v_opt_pred=0, v_alg=0, v_pg=0, v_greedy=0, eta=0, switch_step=None,
                v_opt_buf_switch=0, rho=SQRT3, beta=SQRT3)
    base.update(kw)
    return bound_suite(**base)


def test_bound_suite_perfect_run():
    r = _suite(v_opt_true=20, v_opt_pred=20, v_alg=20, v_pg=18, v_greedy=15, rho=1.0)
    assert r.all_flags and r.ratio == 1.0 and r.f_eta == 1.0


def test_bound_suite_switched_example():
    r = _suite(v_opt_true=11, v_opt_pred=0, v_alg=7, v_pg=11, v_greedy=11, eta=11,
               switch_step=2, v_opt_buf_switch=4)
    assert r.flag_c and r.all_flags
    assert not _suite(v_opt_true=13, v_alg=7, eta=13, v_greedy=7, switch_step=2, v_opt_buf_switch=0).flag_c


def test_bound_suite_empty_input():
    assert _suite().all_flags


def test_bound_suite_integer_beta_is_exact():
    assert _suite(v_opt_true=14, v_alg=7, v_greedy=7, switch_step=3, beta=2.0).flag_c
    assert not _suite(v_opt_true=15, v_alg=7, v_greedy=8, switch_step=3, beta=2.0).flag_c


def test_flag_failures_are_data():
    r = _suite(v_opt_true=100, v_opt_pred=0, v_alg=1, v_greedy=1)
    assert not r.flag_a and not r.flag_b and not r.flag_d


def test_csv_row_shape():
    r = _suite(v_opt_true=3, v_alg=0, v_greedy=2, switch_step=2, v_opt_buf_switch=3, eta=3)
    row = r.csv_row()
    assert len(row) == len(RunRecord.CSV_COLUMNS)
    assert row[RunRecord.CSV_COLUMNS.index("ratio")] == "inf"
    assert row[RunRecord.CSV_COLUMNS.index("switch_step")] == "2"
