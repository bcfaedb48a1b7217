import sys
from pathlib import Path

import pytest

from twoway.machine import Kind, Move, NonuniformMachine, Transition, det_machine

sys.path.insert(0, str(Path(__file__).parent))

# lines recorded by the acceptance suite, echoed in the terminal summary
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[key])


def sweep(n, kind=Kind.DET, verdict="accept"):
    """One working state that walks right and halts at square n."""
    def table(pos, s, a):
        if pos == n - 1:
            return (1 if verdict == "accept" else 2), Move.S
        return 0, Move.R

    m = det_machine(n, 3, table)
    if kind is Kind.DET:
        return m
    tables = tuple({k: v for k, v in t.items()} for t in m.transitions)
    return NonuniformMachine(kind, n, 3, tables)


def prob_machine(n, rows):
    """Probabilistic machine from ``rows[pos][(state, symbol)] = [(target, move, prob), ...]``."""
    tables = []
    for pos in range(n):
        tables.append({k: tuple(Transition(t, Move(mv), p) for t, mv, p in v) for k, v in rows[pos].items()})
    return NonuniformMachine(Kind.PROB, n, 3, tuple(tables))


@pytest.fixture
def coin1():
    """n = 1: fair coin between accept and reject."""
    return prob_machine(1, [{(0, a): [(1, 0, 0.5), (2, 0, 0.5)] for a in (0, 1)}])


@pytest.fixture
def geometric1():
    """n = 1: stay w.p. 0.5, accept 0.3, reject 0.2."""
    return prob_machine(1, [{(0, a): [(0, 0, 0.5), (1, 0, 0.3), (2, 0, 0.2)] for a in (0, 1)}])
