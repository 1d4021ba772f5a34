"""JSON protocol spec files.

Classical (``nofq.classical/1``)::

    {"format": "nofq.classical/1", "name": "...", "k": 2, "n": 2,
     "players": [{"width": 2, "table": ["00", "01", ...]}, ...],   # players 1..k
     "referee": "0110..."}                                          # 2^C chars

``table[key]`` is the answer on the view whose visible rows, concatenated in
ascending row order with column 1 leftmost, spell ``key`` in binary. The
referee string is indexed by the concatenated answers A_1 ... A_k.

Quantum (``nofq.quantum/1``) adds per-player input distributions and a tagged
referee; the only referee kind written by ``compile`` is ``pair-decoder``::

    {"format": "nofq.quantum/1", "name": "...", "k": 4, "n": 2,
     "players": [{"distribution": [{"view": 1, "p": "1/2"}, {"view": 2, "p": "1/2"}],
                  "width": 2}, ...],
     "views": [{"width": 2, "table": [...]}, ...],   # answer tables of the simulated players 1..k
     "referee": {"kind": "pair-decoder", "subsets": [1, 0, 3, 2], "negate": false}}
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .classical import SimultaneousProtocol, TableMap, tabulate, table_protocol
from .compiler import CompiledProtocol, compile_protocol
from .errors import ProtocolError, SpecFormatError
from .fourier import ParityReferee

CLASSICAL_FORMAT = "nofq.classical/1"
QUANTUM_FORMAT = "nofq.quantum/1"


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def _parse_bits(text: Any, width: int, where: str) -> int:
    if not isinstance(text, str) or len(text) != width or set(text) - {"0", "1"}:
        raise SpecFormatError(f"{where}: expected a {width}-bit string, got {text!r}")
    return int(text, 2) if width else 0


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SpecFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise SpecFormatError(f"{where}: field {key!r} has the wrong type")
    return value


def _tables_json(p: SimultaneousProtocol) -> list[dict]:
    p = p if all(isinstance(m, TableMap) for m in p.answer_maps) else tabulate(p)
    return [{"width": w, "table": [_bits(v, w) for v in amap.table]}
            for amap, w in zip(p.answer_maps, p.widths)]


def classical_to_json(p: SimultaneousProtocol) -> dict:
    return {
        "format": CLASSICAL_FORMAT, "name": p.name, "k": p.k, "n": p.n,
        "players": _tables_json(p),
        "referee": "".join(str(int(b)) for b in p.referee_table()),
    }


def _parse_tables(entries: Any, k: int, n: int, where: str) -> tuple[list[int], list[list[int]]]:
    if not isinstance(entries, list) or len(entries) != k:
        raise SpecFormatError(f"{where}: expected {k} player entries")
    size = 1 << ((k - 1) * n)
    widths, tables = [], []
    for i, entry in enumerate(entries, 1):
        loc = f"{where}[{i}]"
        if not isinstance(entry, dict):
            raise SpecFormatError(f"{loc}: expected an object")
        w = _require(entry, "width", int, loc)
        table = _require(entry, "table", list, loc)
        if w < 0 or len(table) != size:
            raise SpecFormatError(f"{loc}: table needs {size} entries of width {w} >= 0")
        widths.append(w)
        tables.append([_parse_bits(t, w, f"{loc}.table[{j}]") for j, t in enumerate(table)])
    return widths, tables


def classical_from_json(data: Any) -> SimultaneousProtocol:
    if not isinstance(data, dict) or data.get("format") != CLASSICAL_FORMAT:
        raise SpecFormatError(f"not a {CLASSICAL_FORMAT} document")
    k = _require(data, "k", int, "spec")
    n = _require(data, "n", int, "spec")
    if k < 1 or n < 1:
        raise SpecFormatError("k and n must be positive")
    widths, tables = _parse_tables(data.get("players"), k, n, "players")
    referee = _require(data, "referee", str, "spec")
    if len(referee) != 1 << sum(widths) or set(referee) - {"0", "1"}:
        raise SpecFormatError(f"referee must be a string of {1 << sum(widths)} bits")
    try:
        return table_protocol(k, n, widths, tables, [int(c) for c in referee], data.get("name", "spec"))
    except ProtocolError as exc:
        raise SpecFormatError(str(exc)) from exc


def compiled_to_json(c: CompiledProtocol) -> dict:
    players = []
    for group, player in zip(c.pairs, c.quantum.players):
        players.append({"distribution": [{"view": j, "p": str(p)} for j, p in player.distribution],
                        "width": player.answer_width})
    return {
        "format": QUANTUM_FORMAT, "name": c.source.name, "k": c.source.k, "n": c.source.n,
        "players": players,
        "views": _tables_json(c.source),
        "referee": {"kind": "pair-decoder", "subsets": list(c.parity.subsets), "negate": c.parity.negate},
    }


def compiled_from_json(data: Any) -> CompiledProtocol:
    if not isinstance(data, dict) or data.get("format") != QUANTUM_FORMAT:
        raise SpecFormatError(f"not a {QUANTUM_FORMAT} document")
    k = _require(data, "k", int, "spec")
    n = _require(data, "n", int, "spec")
    widths, tables = _parse_tables(data.get("views"), k, n, "views")
    ref = _require(data, "referee", dict, "spec")
    if ref.get("kind") != "pair-decoder":
        raise SpecFormatError(f"unsupported referee kind {ref.get('kind')!r}")
    subsets = _require(ref, "subsets", list, "referee")
    if len(subsets) != k or not all(isinstance(s, int) for s in subsets):
        raise SpecFormatError("referee.subsets needs one integer mask per simulated player")
    src = table_protocol(k, n, widths, tables, [0] * (1 << sum(widths)), data.get("name", "spec"))
    try:
        compiled = compile_protocol(src, ParityReferee(tuple(subsets), bool(ref.get("negate", False))))
    except ProtocolError as exc:
        raise SpecFormatError(str(exc)) from exc
    declared = data.get("players")
    if not isinstance(declared, list) or len(declared) != len(compiled.quantum.players):
        raise SpecFormatError("players do not match the pairing of the simulated players")
    for entry, player in zip(declared, compiled.quantum.players):
        try:
            dist = tuple((int(d["view"]), Fraction(d["p"])) for d in entry["distribution"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"bad distribution entry: {exc}") from exc
        if dist != player.distribution or entry.get("width") != player.answer_width:
            raise SpecFormatError("player distribution or width differs from the pair-decoder layout")
    return compiled


def load_json(path: Union[str, Path]) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: invalid JSON: {exc}") from exc


def load_classical(path: Union[str, Path]) -> SimultaneousProtocol:
    return classical_from_json(load_json(path))


def load_compiled(path: Union[str, Path]) -> CompiledProtocol:
    return compiled_from_json(load_json(path))


def dump(data: dict, path: Union[str, Path, None] = None) -> str:
    text = json.dumps(data, indent=1, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
