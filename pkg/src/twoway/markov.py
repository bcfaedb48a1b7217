"""Absorbing chains, beta-closeness and boundary-crossing matrices of 2PAs.

Chains use 0-based indices: state 0 starts, ``m-2`` is the rejecting and
``m-1`` the accepting absorbing state.

Crossing matrices have ``2d+3`` rows indexed by boundary configurations
(``k`` is a 0-based machine state, ``u`` the 1-based split square):

* ``b_0``: the start configuration (initial state, square 1), left part;
* ``b_{1+k}``: state k entering square u (left part);
* ``b_{d+1}`` / ``b_{d+2}``: accept / reject at square n;
* ``b_{d+3+k}``: state k entering square u+1 (right part).

Rows of left configurations hold first-passage probabilities onto the right
boundary configurations and rows of right configurations onto the left
ones (or halting).  The halting rows are absorbing self-loops, so
``p0 M^t q`` is the probability of acceptance within t boundary crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bits import BitsLike
from .generators import make_rng
from .machine import Kind, NonuniformMachine
from .simulate import PROB_EQ_TOL, absorb, acceptance_probability

ROW_TOL = 1e-12


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class AbsorbingChain:
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        m = P.shape[0]
        if P.ndim != 2 or P.shape[1] != m or m < 3:
            raise ChainError("need a square matrix with at least 3 states")
        if (P < 0).any():
            raise ChainError("negative transition probability")
        bad = np.nonzero(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL)[0]
        if bad.size:
            raise ChainError(f"rows {[int(i) + 1 for i in bad]} do not sum to 1")
        for s in (m - 2, m - 1):
            if P[s, s] != 1.0:
                raise ChainError(f"state {s + 1} must be absorbing")

    @property
    def m(self) -> int:
        return self.P.shape[0]

    def _parts(self):
        m = self.m
        Q = self.P[: m - 2, : m - 2]
        R = self.P[: m - 2, m - 2:]  # columns: reject, accept
        return Q, R


def absorption_probability(chain: AbsorbingChain) -> float:
    """a(P): probability of absorption in the accepting state from state 0."""
    Q, R = chain._parts()
    if Q.shape[0] == 0:
        return 0.0
    X, _ = absorb(Q, R)
    return float(min(max(X[0, 1], 0.0), 1.0))


def expected_absorption_time(chain: AbsorbingChain) -> float:
    """T(P): expected steps to absorption from state 0, or ``math.inf`` if absorption is not certain."""
    Q, R = chain._parts()
    X, _ = absorb(Q, R)
    if 1.0 - X[0].sum() > PROB_EQ_TOL:
        return math.inf
    # restrict to states reachable from the start; all of them absorb surely
    reach = _reachable(Q, 0)
    idx = np.nonzero(reach)[0]
    T = np.linalg.solve(np.eye(len(idx)) - Q[np.ix_(idx, idx)], np.ones(len(idx)))
    return float(T[0])


def _reachable(Q: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(Q.shape[0], dtype=bool)
    seen[start] = True
    todo = [start]
    while todo:
        i = todo.pop()
        for j in np.nonzero(Q[i] > 0)[0]:
            if not seen[j]:
                seen[j] = True
                todo.append(int(j))
    return seen


def chain_from_rows(rows) -> AbsorbingChain:
    return AbsorbingChain(np.array(rows, dtype=float))


# ---------------------------------------------------------------------------
# beta-closeness


def beta_close(p: float, q: float, beta: float) -> bool:
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if p == 0 and q == 0:
        return True
    if p < 0 or q < 0 or q == 0 or p == 0:
        return False
    return 1 / beta <= p / q <= beta


def beta_close_mod_lambda(p: float, q: float, beta: float, lam: float) -> bool:
    if p <= lam and q <= lam:
        return True
    return p >= lam and q >= lam and beta_close(p, q, beta)


def chains_beta_close_mod_lambda(P, Q, beta: float, lam: float) -> bool:
    P = P.P if isinstance(P, AbsorbingChain) else np.asarray(P, dtype=float)
    Q = Q.P if isinstance(Q, AbsorbingChain) else np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        return False
    return all(beta_close_mod_lambda(float(a), float(b), beta, lam) for a, b in zip(P.ravel(), Q.ravel()))


@dataclass
class BetaCloseReport:
    m: int
    eps: float
    a_P: float
    a_P2: float
    T: float
    lam: float
    beta: float
    close: bool
    conclusion_holds: Optional[bool]
    margin: Optional[float]
    intermediate_bound: Optional[float]
    intermediate_holds: Optional[bool]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def lemma_parameters(m: int, T: float, eps: float):
    """(lambda, beta) of the closeness lemma."""
    lam = eps ** 2 / (256 * T ** 3)
    beta = ((1 + eps + eps ** 2) / (1 + eps)) ** (1 / (2 * m))
    return lam, beta


def check_betaclose_lemma(P: AbsorbingChain, P2: AbsorbingChain, eps: float) -> BetaCloseReport:
    """Evaluate the closeness lemma on a concrete pair of chains.

    The conclusion a(P') >= 1/2 + eps/4 is only asserted when the chains are
    beta-close mod lambda; otherwise the lemma does not apply and the report
    says so with ``conclusion_holds = None``.
    """
    if P.m != P2.m:
        raise ChainError("chains have different sizes")
    aP = absorption_probability(P)
    if aP < 0.5 + eps - PROB_EQ_TOL:
        raise ChainError(f"precondition a(P) >= 1/2 + eps fails (a(P) = {aP:.12g})")
    m = P.m
    T = max(expected_absorption_time(P), expected_absorption_time(P2), m)
    aP2 = absorption_probability(P2)
    if math.isinf(T):
        return BetaCloseReport(m, eps, aP, aP2, T, 0.0, 1.0, False, None, None, None, None)
    lam, beta = lemma_parameters(m, T, eps)
    close = chains_beta_close_mod_lambda(P, P2, beta, lam)
    if not close:
        return BetaCloseReport(m, eps, aP, aP2, T, lam, beta, False, None, None, None, None)
    bound = (1 - 2 * lam * m ** 3) * beta ** (-2 * m) * aP - 4 * math.sqrt(lam * m * T)
    margin = aP2 - (0.5 + eps / 4)
    return BetaCloseReport(m, eps, aP, aP2, T, lam, beta, True, margin >= 0, margin, bound,
                           aP2 >= bound - PROB_EQ_TOL)


def perturb_chain(P: AbsorbingChain, beta: float, seed) -> AbsorbingChain:
    """Scale every entry by a factor in [beta^-1/2, beta^1/2] and renormalize.

    Renormalizing changes each ratio by at most another beta^1/2, so the result
    stays beta-close to P (zero entries stay zero).
    """
    rng = make_rng(seed)
    h = math.sqrt(beta)
    factors = np.exp(rng.uniform(-math.log(h), math.log(h), size=P.P.shape))
    M = P.P * factors
    M /= M.sum(axis=1, keepdims=True)
    m = P.m
    M[m - 2:] = P.P[m - 2:]
    return AbsorbingChain(M)


def random_absorbing_chain(m: int, seed, min_accept: float = 0.0, density: float = 0.6,
                           floor: float = 0.02) -> AbsorbingChain:
    """Random chain whose nonzero entries are at least ``floor``; retries until a(P) >= min_accept."""
    rng = make_rng(seed)
    for _ in range(10_000):
        P = np.zeros((m, m))
        for i in range(m - 2):
            mask = rng.random(m) < density
            mask[rng.integers(m - 2, m)] = True  # every state can absorb directly
            w = np.where(mask, floor + rng.random(m), 0.0)
            w[m - 1] *= 2  # lean towards acceptance
            P[i] = w / w.sum()
        P[m - 2, m - 2] = P[m - 1, m - 1] = 1.0
        chain = AbsorbingChain(P)
        if absorption_probability(chain) >= min_accept:
            return chain
    raise RuntimeError("could not draw a chain with the requested acceptance probability")


# ---------------------------------------------------------------------------
# crossing matrices


@dataclass
class CrossingMatrix:
    d: int
    u: int
    M: np.ndarray
    p0: np.ndarray
    q: np.ndarray
    lost: np.ndarray = field(default=None)  # per-row mass never reaching the opposite boundary

    @property
    def size(self) -> int:
        return 2 * self.d + 3

    def left_rows(self) -> list:
        return list(range(0, self.d + 1))

    def right_rows(self) -> list:
        return list(range(self.d + 3, 2 * self.d + 3))

    def halting_rows(self) -> list:
        return [self.d + 1, self.d + 2]


def _first_passage(m: NonuniformMachine, tape, lo: int, hi: int, starts):
    """First-passage distribution for runs confined to squares lo..hi (0-based, inclusive).

    ``starts`` are (state, square) configurations inside the region.  Returns
    a dict mapping each start to ``{exit_key: prob}``, where exit keys are
    ``("cross", state, square)`` for the first configuration outside the
    region, or ``("accept",)`` / ``("reject",)``.
    """
    index, configs, rows = {}, [], []
    exit_index = {}

    def add(c):
        if c not in index:
            index[c] = len(configs)
            configs.append(c)
        return index[c]

    for s in starts:
        add(s)
    k = 0
    while k < len(configs):
        state, pos = configs[k]
        row = {}
        for tr in m.step_options(pos, state, tape[pos]):
            if tr.prob == 0:
                continue
            if tr.target == m.accept:
                key = ("accept",)
            elif tr.target == m.reject:
                key = ("reject",)
            else:
                nxt = pos + int(tr.move)
                if lo <= nxt <= hi:
                    j = add((tr.target, nxt))
                    row[("in", j)] = row.get(("in", j), 0.0) + tr.prob
                    continue
                key = ("cross", tr.target, nxt)
            exit_index.setdefault(key, len(exit_index))
            row[key] = row.get(key, 0.0) + tr.prob
        rows.append(row)
        k += 1
    size = len(configs)
    Q = np.zeros((size, size))
    R = np.zeros((size, max(len(exit_index), 1)))
    for i, row in enumerate(rows):
        for key, p in row.items():
            if key[0] == "in":
                Q[i, key[1]] += p
            else:
                R[i, exit_index[key]] += p
    X, _ = absorb(Q, R)
    keys = sorted(exit_index, key=exit_index.get)
    return {s: {key: float(X[index[s], exit_index[key]]) for key in keys} for s in starts}


def crossing_matrices(m: NonuniformMachine, w: BitsLike, u: int) -> CrossingMatrix:
    """The (2d+3)-square first-passage matrix for the split after square ``u`` (1-based)."""
    if m.kind is not Kind.PROB:
        raise TypeError("crossing matrices are defined for probabilistic machines")
    n, d = m.n, m.num_states
    if not 1 <= u <= n - 1:
        raise ValueError(f"split u={u} outside [1, {n - 1}]")
    tape = m.tape(w)
    size = 2 * d + 3
    M = np.zeros((size, size))
    acc, rej = d + 1, d + 2
    left_starts = {0: (m.initial, 0)}
    right_starts = {}
    for k in range(d):
        if not m.is_halting(k):
            left_starts[1 + k] = (k, u - 1)
            right_starts[d + 3 + k] = (k, u)
    for rows, lo, hi, cross_base, cross_sq in ((left_starts, 0, u - 1, d + 3, u),
                                               (right_starts, u, n - 1, 1, u - 1)):
        fp = _first_passage(m, tape, lo, hi, list(set(rows.values())))
        for r, start in rows.items():
            for key, p in fp[start].items():
                if key[0] == "accept":
                    M[r, acc] += p
                elif key[0] == "reject":
                    M[r, rej] += p
                else:
                    _, state, sq = key
                    assert sq == cross_sq
                    M[r, cross_base + state] += p
    M[acc, acc] = M[rej, rej] = 1.0
    p0 = np.zeros(size)
    p0[0] = 1.0
    q = np.zeros(size)
    q[acc] = 1.0
    lost = 1.0 - M.sum(axis=1)
    for k in range(d):
        if m.is_halting(k):
            lost[1 + k] = lost[d + 3 + k] = 0.0  # never entered
    return CrossingMatrix(d, u, M, p0, q, lost)


def crossing_limit(cm: CrossingMatrix) -> float:
    """lim_t p0 M^t q, from the absorbing chain on boundary configurations."""
    acc, rej = cm.d + 1, cm.d + 2
    trans = [i for i in range(cm.size) if i not in (acc, rej)]
    Q = cm.M[np.ix_(trans, trans)]
    R = cm.M[np.ix_(trans, [acc])]
    X, _ = absorb(Q, R)
    return float(X[trans.index(0), 0])


@dataclass
class CrossingReport:
    u: int
    limit: float
    accumulated: float
    steps: int
    converged: bool
    direct: float
    agree: bool
    tol: float
    monotone: bool
    threshold: Optional[str] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_crossing_identity(m: NonuniformMachine, w: BitsLike, u: int, tol: float = 1e-6,
                             t_max: Optional[int] = None, eps: Optional[float] = None) -> CrossingReport:
    """Compare acceptance through boundary crossings with the direct absorption solve.

    ``accumulated`` is sup_{t <= t_max} p0 M^t q; ``limit`` is its exact limit.
    Agreement is judged on the limit; a gap between ``accumulated`` and the
    limit is reported as non-convergence within t_max, not as failure.
    """
    cm = crossing_matrices(m, w, u)
    if t_max is None:
        t_max = 10 * m.num_states * m.n
    direct = acceptance_probability(m, w).accept
    limit = crossing_limit(cm)
    vec = cm.p0.copy()
    prev, best, monotone, steps = -1.0, 0.0, True, 0
    for steps in range(1, t_max + 1):
        vec = vec @ cm.M
        val = float(vec @ cm.q)
        if val < prev - 1e-12:
            monotone = False
        prev = val
        best = max(best, val)
        if abs(limit - best) <= tol * 1e-3:
            break
    threshold = None
    if eps is not None:
        want = 0.5 + eps
        threshold = "accept" if limit >= want - PROB_EQ_TOL else "below"
        if (direct >= want - PROB_EQ_TOL) != (limit >= want - PROB_EQ_TOL):
            threshold = "mismatch"
    return CrossingReport(u, limit, best, steps, abs(limit - best) <= tol, direct, abs(limit - direct) <= tol, tol,
                          monotone, threshold)
