import math

import numpy as np
import pytest
from conftest import prob_machine, sweep
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway import fast, serialize
from twoway.bits import bits_to_int, int_to_bits
from twoway.generators import random_machine
from twoway.machine import (Kind, Move, NonuniformMachine, Transition, UniformMachine, apply_shuffle,
                            as_nondeterministic, as_probabilistic, det_machine, interleaving_permutation,
                            replace_transition, validate_machine, validate_uniform)
from twoway.simulate import (Verdict, acceptance_probability, decide_probabilistic, expected_running_time,
                             monte_carlo_acceptance, run_deterministic, run_nondeterministic, run_uniform_2dfa,
                             run_uniform_2nfa)


def all_inputs(n):
    return [int_to_bits(x, n) for x in range(1 << n)]


# ---- validator


def test_validator_flags_left_move_at_square_one():
    m = det_machine(3, 4, lambda pos, s, a: (1, Move.L) if (pos, s, a) == (0, 0, 0) else (0, Move.S),
                    accept=2, reject=3)
    problems = validate_machine(m)
    assert len(problems) == 1
    assert "Left move at position 1" in problems[0]


def test_validator_flags_early_halt():
    m = replace_transition(sweep(3), 0, 0, 1, [Transition(1, Move.S)])
    problems = validate_machine(m)
    assert len(problems) == 1
    assert "halting state entered before rightmost square" in problems[0]


def test_validator_flags_right_move_at_last_square():
    m = replace_transition(sweep(3), 2, 0, 0, [Transition(0, Move.R)])
    assert any("Right move at position n" in p for p in validate_machine(m))


def test_validator_accepts_sweep_and_reports_coordinates():
    assert validate_machine(sweep(4)) == []
    m = replace_transition(sweep(4), 1, 0, 1, [])
    (msg,) = validate_machine(m)
    assert "position 2" in msg and "state 1" in msg


def test_validator_probability_rows():
    m = prob_machine(1, [{(0, a): [(1, 0, 0.5), (2, 0, 0.4)] for a in (0, 1)}])
    assert any("sum to" in p for p in validate_machine(m))


# ---- shuffles


def test_apply_shuffle_examples():
    assert apply_shuffle((1, 2, 3, 4), "0110") == (0, 1, 1, 0)
    assert apply_shuffle((2, 1), "01") == (1, 0)
    theta = interleaving_permutation(4)
    assert theta == (1, 3, 2, 4)
    # symbols a b c d land as a c b d
    assert apply_shuffle(theta, "1000") == (1, 0, 0, 0)
    assert apply_shuffle(theta, "0100") == (0, 0, 1, 0)
    assert apply_shuffle(theta, "0010") == (0, 1, 0, 0)


def test_apply_shuffle_arity():
    with pytest.raises(ValueError, match="shuffle arity"):
        apply_shuffle((1, 2, 3), "01")


# ---- deterministic runs


def test_self_loop_diverges():
    m = det_machine(3, 3, lambda pos, s, a: (0, Move.S))
    out = run_deterministic(m, "010")
    assert out.verdict is Verdict.DIVERGE and out.steps is None


def test_sweep_accepts_in_n_steps():
    for n in (1, 2, 5):
        for w in all_inputs(n):
            out = run_deterministic(sweep(n), w)
            assert out.verdict is Verdict.ACCEPT and out.steps == n


def test_trace_records_configurations():
    out = run_deterministic(sweep(3), "000", trace=True)
    assert out.trace == ((0, 0), (0, 1), (0, 2), (1, 2))


def test_halting_steps_within_dn():
    for seed in range(30):
        m = random_machine(Kind.DET, 4, 4, seed)
        for w in all_inputs(4):
            out = run_deterministic(m, w)
            if out.halted:
                assert out.steps <= m.num_states * m.n


# ---- nondeterministic runs


def test_empty_nondet_rejects():
    m = NonuniformMachine(Kind.NONDET, 3, 3, tuple({} for _ in range(3)))
    assert validate_machine(m) == []
    assert all(run_nondeterministic(m, w) is Verdict.REJECT for w in all_inputs(3))


def test_guessing_machine_accepts_everything():
    # stay or move right everywhere, accept at square 3
    tables = []
    for pos in range(3):
        opts = (Transition(1, Move.S),) if pos == 2 else (Transition(0, Move.S), Transition(0, Move.R))
        tables.append({(0, a): opts for a in (0, 1)})
    m = NonuniformMachine(Kind.NONDET, 3, 3, tuple(tables))
    assert validate_machine(m) == []
    assert all(run_nondeterministic(m, w) is Verdict.ACCEPT for w in all_inputs(3))


def test_determinism_embeddings():
    for seed in range(40):
        m = random_machine(Kind.DET, 3, 4, seed)
        nd, pr = as_nondeterministic(m), as_probabilistic(m)
        for w in all_inputs(3):
            out = run_deterministic(m, w)
            if not out.halted:
                continue
            assert run_nondeterministic(nd, w) is out.verdict
            p = acceptance_probability(pr, w)
            assert p.accept == (1.0 if out.verdict is Verdict.ACCEPT else 0.0)


@pytest.mark.parametrize("kind", [Kind.DET, Kind.NONDET, Kind.PROB])
def test_shuffle_consistency(kind):
    rng = np.random.default_rng(3)
    for seed in range(15):
        m = random_machine(kind, 4, 4, seed)
        theta = tuple(int(v) + 1 for v in rng.permutation(4))
        ms = m.with_shuffle(theta)
        for w in all_inputs(4):
            plain = apply_shuffle(theta, w)
            if kind is Kind.DET:
                assert run_deterministic(ms, w) == run_deterministic(m, plain)
            elif kind is Kind.NONDET:
                assert run_nondeterministic(ms, w) is run_nondeterministic(m, plain)
            else:
                a, b = acceptance_probability(ms, w), acceptance_probability(m, plain)
                assert a.accept == pytest.approx(b.accept, abs=1e-12)


# ---- probabilistic runs


def test_point_mass_sweep():
    m = as_probabilistic(sweep(4))
    p = acceptance_probability(m, "0101")
    assert (p.accept, p.reject, p.nonhalting) == (1.0, 0.0, 0.0)
    assert expected_running_time(m, "0101") == pytest.approx(4.0)


def test_sweep_expected_time_n5():
    assert expected_running_time(as_probabilistic(sweep(5)), "00000") == pytest.approx(5.0)


def test_fair_coin(coin1):
    p = acceptance_probability(coin1, "1")
    assert p.accept == pytest.approx(0.5) and p.reject == pytest.approx(0.5)


def test_geometric_series(geometric1):
    p = acceptance_probability(geometric1, "0")
    assert p.accept == pytest.approx(0.3 / (1 - 0.5), abs=1e-12)
    assert p.reject == pytest.approx(0.4, abs=1e-12)
    assert expected_running_time(geometric1, "0") == pytest.approx(2.0)


def test_nonhalting_mass_gives_infinite_time():
    # at square 1: loop forever w.p. 0.1 (moving to a trap state), else walk right and accept
    rows = [{(0, a): [(0, 1, 0.9), (3, 0, 0.1)] for a in (0, 1)}, {(0, a): [(1, 0, 1.0)] for a in (0, 1)}]
    for pos in range(2):
        rows[pos].update({(3, a): [(3, 0, 1.0)] for a in (0, 1)})
    tables = tuple({k: tuple(Transition(t, Move(mv), p) for t, mv, p in v) for k, v in r.items()} for r in rows)
    m = NonuniformMachine(Kind.PROB, 2, 4, tables)
    assert validate_machine(m) == []
    p = acceptance_probability(m, "01")
    assert p.nonhalting == pytest.approx(0.1)
    assert p.accept + p.reject + p.nonhalting == pytest.approx(1.0, abs=1e-9)
    assert math.isinf(expected_running_time(m, "01"))


def test_decide_thresholds(geometric1, coin1):
    assert decide_probabilistic(as_probabilistic(sweep(2)), "00", 0.2) is Verdict.ACCEPT
    assert decide_probabilistic(coin1, "0", 0.2) is Verdict.UNDECIDED
    assert decide_probabilistic(geometric1, "0", 0.1) is Verdict.ACCEPT
    assert decide_probabilistic(geometric1, "0", 0.2) is Verdict.UNDECIDED
    with pytest.raises(ValueError):
        decide_probabilistic(coin1, "0", 0.6)
    with pytest.raises(ValueError):
        decide_probabilistic(coin1, "0", 0.0)


def test_probability_conservation():
    for seed in range(40):
        m = random_machine(Kind.PROB, 3, 4, seed)
        for w in all_inputs(3):
            p = acceptance_probability(m, w)
            assert p.accept + p.reject + p.nonhalting == pytest.approx(1.0, abs=1e-9)


def test_monte_carlo_agreement():
    checked = 0
    for seed in range(30):
        m = random_machine(Kind.PROB, 3, 4, seed)
        w = int_to_bits(seed % 8, 3)
        p = acceptance_probability(m, w)
        if p.nonhalting > 1e-9:
            continue
        a, r, rest = monte_carlo_acceptance(m, w, 100_000, seed)
        assert abs(a - p.accept) <= 0.02
        checked += 1
        if checked == 5:
            break
    assert checked == 5


# ---- uniform machines


def _uniform(table, d=3):
    return UniformMachine(Kind.DET, d, {k: (Transition(*v),) for k, v in table.items()})


def test_uniform_accept_at_right_end():
    m = _uniform({(0, 0): (0, Move.R), (0, 1): (0, Move.R), (0, 2): (0, Move.R), (0, 3): (1, Move.S)})
    assert validate_uniform(m) == []
    for w in all_inputs(3):
        out = run_uniform_2dfa(m, w)
        assert out.verdict is Verdict.ACCEPT and out.steps == 5


def test_uniform_loop_on_left_end_diverges():
    m = _uniform({(0, 0): (0, Move.R), (0, 1): (0, Move.R), (0, 2): (0, Move.S), (0, 3): (1, Move.S)})
    assert run_uniform_2dfa(m, "01").verdict is Verdict.DIVERGE


def test_uniform_validator():
    m = _uniform({(0, 0): (1, Move.R), (0, 1): (0, Move.R), (0, 2): (0, Move.L), (0, 3): (0, Move.R)})
    problems = validate_uniform(m)
    assert len(problems) == 3


def test_uniform_nondet():
    m = UniformMachine(Kind.NONDET, 3, {(0, 2): (Transition(0, Move.R),), (0, 0): (Transition(0, Move.R),),
                                        (0, 3): (Transition(1, Move.S),)})
    assert run_uniform_2nfa(m, "000") is Verdict.ACCEPT
    assert run_uniform_2nfa(m, "010") is Verdict.REJECT


# ---- compiled kernels and serialization


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 6), d=st.integers(3, 6))
def test_fast_kernel_matches_python(seed, n, d):
    m = random_machine(Kind.DET, n, d, seed)
    rng = np.random.default_rng(seed)
    if n > 1 and rng.random() < 0.5:
        m = m.with_shuffle(tuple(int(v) + 1 for v in rng.permutation(n)))
    xs = np.arange(1 << n, dtype=np.uint64)
    verdicts, steps = fast.run_batch(m, xs)
    for x in range(1 << n):
        out = run_deterministic(m, int_to_bits(x, n))
        code = {Verdict.ACCEPT: 1, Verdict.REJECT: 0, Verdict.DIVERGE: 2}[out.verdict]
        assert verdicts[x] == code
        assert steps[x] == (out.steps if out.halted else -1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(list(Kind)))
def test_serialization_round_trip(seed, kind):
    m = random_machine(kind, 3, 4, seed)
    if seed % 2:
        m = m.with_shuffle((2, 3, 1))
    back = serialize.loads(serialize.dumps(m))
    assert back == m


def test_serialized_layout():
    doc = serialize.machine_to_dict(sweep(2))
    assert doc["kind"] == "det" and doc["n"] == 2 and doc["initial"] == 1
    assert doc["accept"] == 2 and doc["reject"] == 3
    assert doc["transitions"][1][0] == {"state": 1, "symbol": "0", "to": [{"state": 2, "move": "S"}]}
    pm = as_probabilistic(sweep(1))
    assert serialize.machine_to_dict(pm)["transitions"][0][0]["to"][0]["prob"] == "1"


def test_bits_round_trip():
    for x in range(64):
        assert bits_to_int(int_to_bits(x, 6)) == x


def test_forward_bias_machines_are_valid_and_halt_more():
    halting = {0.0: 0, 0.6: 0}
    for bias in halting:
        for seed in range(200):
            m = random_machine(Kind.DET, 4, 4, seed, forward_bias=bias)
            assert validate_machine(m) == []
            verdicts, _ = fast.run_batch(m, np.arange(16, dtype=np.uint64))
            halting[bias] += int((verdicts != 2).all())
    assert halting[0.6] > halting[0.0]
