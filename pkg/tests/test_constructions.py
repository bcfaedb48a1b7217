import numpy as np
import pytest
from oracles import ref_eq, ref_saf, ref_usaf

from twoway import fast
from twoway.bits import int_to_bits
from twoway.constructions import (EQ_STATE_CAP, build_eq_shuffled, build_saf_2da, build_usaf_2dfa,
                                  usaf_state_bound)
from twoway.generators import random_inputs, random_usaf_inputs
from twoway.machine import Kind, apply_shuffle, validate_machine, validate_uniform
from twoway.simulate import Verdict, run_deterministic, run_uniform_2dfa
from twoway.witness import EqOracle, ParameterError, SafOracle, UsafOracle, usaf_params

WORKED = "011000" + "001000" + "111000" + "101000" + "0"


def check_report(report):
    assert report.within_bound
    assert report.actual_states <= report.declared_state_bound
    assert sum(k for _, k in report.phase_state_accounting) == report.actual_states
    assert report.machine.num_states == report.actual_states


# ---- SAF


@pytest.mark.parametrize("t,n,bound", [(2, 25, 30), (3, 55, 43), (4, 97, 56)])
def test_saf_state_bound(t, n, bound):
    m, report = build_saf_2da(t, n)
    assert report.declared_state_bound == bound == 13 * t + 4
    check_report(report)
    assert m.kind is Kind.DET
    assert validate_machine(m) == []
    assert [name for name, _ in report.phase_state_accounting] == ["phase 1", "phase 2", "phase 3", "phase 4"]


def test_saf_examples():
    m, _ = build_saf_2da(2, 25)
    assert run_deterministic(m, "0" * 25).verdict is Verdict.REJECT
    assert run_deterministic(m, WORKED).verdict is Verdict.ACCEPT
    zeroed = WORKED[:14] + "0000" + WORKED[18:]
    assert run_deterministic(m, zeroed).verdict is Verdict.REJECT


@pytest.mark.parametrize("t,n", [(2, 25), (2, 30), (3, 55)])
def test_saf_random_agreement(t, n):
    m, _ = build_saf_2da(t, n)
    xs = random_inputs(n, 50_000, seed=n)
    verdicts, steps = fast.run_batch(m, xs)
    assert (verdicts != 2).all()
    assert (verdicts == SafOracle(n, t).batch(xs)).all()
    assert steps.max() <= m.num_states * n
    for x in xs[:200]:
        assert verdicts[list(xs).index(x)] == ref_saf(int_to_bits(int(x), n), t)[0]


def test_saf_parameter_errors():
    with pytest.raises(ParameterError):
        build_saf_2da(2, 24)


# ---- USAF


def test_usaf_bound_formula():
    assert usaf_state_bound(2) == 66
    assert usaf_state_bound(4) == 23 * 4 + 2 * 13 * 2 + 6


@pytest.mark.parametrize("t", [2, 3, 4, 8])
def test_usaf_within_bound(t):
    m, report = build_usaf_2dfa(t)
    check_report(report)
    assert validate_uniform(m) == []


def test_usaf_t5_exceeds_bound_and_says_so():
    # 2t is not a power of two, so address candidate sets split and the count overshoots
    _, report = build_usaf_2dfa(5)
    assert report.actual_states == 251 > report.declared_state_bound == 217
    assert not report.within_bound
    assert any("exceeds the bound" in note for note in report.notes)


def test_usaf_examples():
    m, _ = build_usaf_2dfa(2)
    assert run_uniform_2dfa(m, "0" * 56).verdict is Verdict.REJECT


def test_usaf_t2_samples():
    m, _ = build_usaf_2dfa(2)
    oracle = UsafOracle(56, 2)
    xs = random_usaf_inputs(oracle.params, 100_000, seed=11)
    verdicts, _ = fast.run_batch(m, xs, n=56)
    assert (verdicts != 2).all()
    assert (verdicts == oracle.batch(xs)).all()


def usaf_sample(P, rng, full_chain):
    """Well-formed USAF bits; with ``full_chain`` every address occurs once so both rounds resolve."""
    adrs = rng.permutation(2 * P.t) if full_chain else rng.integers(0, 2 * P.t, size=2 * P.t)
    X = [0] * P.n
    for p in range(P.blocks):
        payload = [int(b) for b in format(int(adrs[p]), f"0{P.c}b")] + rng.integers(0, 2, size=P.b).tolist()
        for m, y in enumerate(payload):
            X[P.mark_index(p, m)] = 0 if m < P.c else 1
            X[P.mark_index(p, m) + 1] = y
    return tuple(X)


@pytest.mark.parametrize("t,n", [(3, 120), (4, 208), (5, 300)])
def test_usaf_larger_t(t, n):
    m, _ = build_usaf_2dfa(t)
    P = usaf_params(n, t)
    rng = np.random.default_rng(t)
    seen = set()
    for k in range(150):
        X = usaf_sample(P, rng, full_chain=k % 2 == 0)
        want = ref_usaf(X, t)[0]
        seen.add(want)
        out = run_uniform_2dfa(m, X)
        assert out.halted
        assert out.verdict is (Verdict.ACCEPT if want else Verdict.REJECT)
    assert seen == {0, 1}


# ---- EQ


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 12])
def test_eq_exhaustive(n):
    theta, m, report = build_eq_shuffled(n)
    assert report.actual_states <= EQ_STATE_CAP == report.declared_state_bound
    check_report(report)
    assert validate_machine(m) == []
    assert m.shuffle == theta
    verdicts, _ = fast.run_batch(m, list(range(1 << n)))
    assert verdicts.tolist() == EqOracle(n).truth_table().tolist()


def test_eq_examples():
    theta, m, report = build_eq_shuffled(4)
    assert theta == (1, 3, 2, 4)
    assert run_deterministic(m, "0110").verdict is Verdict.REJECT
    assert run_deterministic(m, "0000").verdict is Verdict.ACCEPT
    # the unshuffled machine reads adjacent pairs
    plain = m.with_shuffle(None)
    for x in range(16):
        X = int_to_bits(x, 4)
        assert run_deterministic(plain, apply_shuffle(theta, X)).verdict == run_deterministic(m, X).verdict
        assert (run_deterministic(m, X).verdict is Verdict.ACCEPT) == bool(ref_eq(X))
    assert report.actual_states == 5


def test_eq_odd_rejected():
    with pytest.raises(ParameterError):
        build_eq_shuffled(5)
