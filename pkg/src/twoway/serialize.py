"""JSON reading and writing of machines.

States and shuffle entries are 1-based in the file.  Probabilities are written
as decimal strings with 17 significant digits so a round trip is exact.
"""

from __future__ import annotations

import json
from pathlib import Path

from .machine import SYMBOL_NAMES, Kind, Move, NonuniformMachine, Transition, UniformMachine

_MOVE_NAMES = {Move.L: "L", Move.S: "S", Move.R: "R"}
_MOVES = {v: k for k, v in _MOVE_NAMES.items()}
_SYMBOLS = {v: k for k, v in SYMBOL_NAMES.items()}


class FormatError(ValueError):
    pass


def _entry(kind, state, sym, opts) -> dict:
    to = []
    for tr in opts:
        item = {"state": tr.target + 1, "move": _MOVE_NAMES[tr.move]}
        if kind is Kind.PROB:
            item["prob"] = "%.17g" % tr.prob
        to.append(item)
    return {"state": state + 1, "symbol": SYMBOL_NAMES[sym], "to": to}


def _sorted_items(table):
    return sorted(table.items(), key=lambda kv: kv[0])


def machine_to_dict(m) -> dict:
    doc = {"kind": m.kind.value}
    if isinstance(m, NonuniformMachine):
        doc["n"] = m.n
    doc.update(num_states=m.num_states, initial=m.initial + 1, accept=m.accept + 1, reject=m.reject + 1)
    if isinstance(m, NonuniformMachine):
        if m.shuffle is not None:
            doc["shuffle"] = list(m.shuffle)
        doc["transitions"] = [[_entry(m.kind, s, a, opts) for (s, a), opts in _sorted_items(table)]
                              for table in m.transitions]
    else:
        doc["transitions"] = [_entry(m.kind, s, a, opts) for (s, a), opts in _sorted_items(m.transitions)]
    return doc


def dumps(m) -> str:
    return json.dumps(machine_to_dict(m), indent=1)


def save(m, path) -> None:
    Path(path).write_text(dumps(m) + "\n")


def _parse_entries(entries, kind, uniform):
    table = {}
    for e in entries:
        try:
            sym = _SYMBOLS[str(e["symbol"])]
            if not uniform and sym not in (0, 1):
                raise FormatError(f"endmarker symbol in a nonuniform machine: {e}")
            opts = []
            for item in e["to"]:
                prob = float(item["prob"]) if "prob" in item else 1.0
                if kind is not Kind.PROB and "prob" in item:
                    raise FormatError(f"prob given for a {kind.value} machine: {e}")
                opts.append(Transition(int(item["state"]) - 1, _MOVES[item["move"]], prob))
            key = (int(e["state"]) - 1, sym)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad transition entry {e!r}") from exc
        if key in table:
            raise FormatError(f"duplicate entry for state {key[0] + 1}, symbol {e['symbol']}")
        table[key] = tuple(opts)
    return table


def machine_from_dict(doc: dict):
    try:
        kind = Kind(doc["kind"])
        d = int(doc["num_states"])
        initial, accept, reject = (int(doc[k]) - 1 for k in ("initial", "accept", "reject"))
        transitions = doc["transitions"]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"missing or bad header field: {exc}") from exc
    if "n" not in doc:
        if kind is Kind.PROB:
            raise FormatError("uniform machines are det or nondet")
        return UniformMachine(kind, d, _parse_entries(transitions, kind, True), initial, accept, reject)
    n = int(doc["n"])
    if len(transitions) != n:
        raise FormatError(f"{len(transitions)} position tables for n = {n}")
    tables = tuple(_parse_entries(t, kind, False) for t in transitions)
    shuffle = tuple(int(x) for x in doc["shuffle"]) if doc.get("shuffle") is not None else None
    return NonuniformMachine(kind, n, d, tables, initial, accept, reject, shuffle)


def loads(text: str):
    return machine_from_dict(json.loads(text))


def load(path):
    return loads(Path(path).read_text())
