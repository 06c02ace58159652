"""Binary and JSON-lines trace formats.

Binary layout (all integers little-endian)::

    magic  b"AMCT"  | version u8 | record count u64
    record: tag u8, payload
      tag & 0x3f == 0/1  load/store; payload vaddr u64, then pc u64 if tag & 0x80
                         (tag & 0x40 marks a flagged miss hint)
      tag 2 Init, 5 Update, 6 End, 7 Reset         no payload
      tag 3 AddrTBase, 4 AddrFBase                 base u64, element_count u64, element_size u8
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path
from typing import Iterable, Iterator, Union

from .core import (
    Access,
    AddrFBase,
    AddrTBase,
    End,
    Init,
    RegionDescriptor,
    Reset,
    TraceError,
    TraceEvent,
    Update,
)

MAGIC = b"AMCT"
VERSION = 1
PC_FLAG = 0x80
MISS_FLAG = 0x40

_SIMPLE_TAGS = {Init: 2, Update: 5, End: 6, Reset: 7}
_SIMPLE_BY_TAG = {v: k for k, v in _SIMPLE_TAGS.items()}
_REGION_TAGS = {AddrTBase: 3, AddrFBase: 4}
_REGION_BY_TAG = {v: k for k, v in _REGION_TAGS.items()}

_U64 = struct.Struct("<Q")
_REGION = struct.Struct("<QQB")


def encode(events: Iterable[TraceEvent]) -> bytes:
    body = io.BytesIO()
    n = 0
    for ev in events:
        n += 1
        if isinstance(ev, Access):
            tag = 0 if ev.kind == "load" else 1
            if ev.pc is not None:
                tag |= PC_FLAG
            if ev.miss:
                tag |= MISS_FLAG
            body.write(bytes((tag,)))
            body.write(_U64.pack(ev.vaddr))
            if ev.pc is not None:
                body.write(_U64.pack(ev.pc))
        elif type(ev) in _SIMPLE_TAGS:
            body.write(bytes((_SIMPLE_TAGS[type(ev)],)))
        elif type(ev) in _REGION_TAGS:
            r = ev.region
            body.write(bytes((_REGION_TAGS[type(ev)],)))
            body.write(_REGION.pack(r.base, r.element_count, r.element_size))
        else:
            raise TypeError(f"not a trace event: {ev!r}")
    return MAGIC + bytes((VERSION,)) + _U64.pack(n) + body.getvalue()


def decode(data: bytes) -> list[TraceEvent]:
    if len(data) < 13:
        raise TraceError("truncated header", len(data))
    if data[:4] != MAGIC:
        raise TraceError("bad magic", 0)
    if data[4] != VERSION:
        raise TraceError(f"unsupported version {data[4]}", 4)
    (count,) = _U64.unpack_from(data, 5)
    pos = 13
    events: list[TraceEvent] = []

    def need(n: int, start: int) -> None:
        if pos + n > len(data):
            raise TraceError("truncated record", start)

    for _ in range(count):
        start = pos
        need(1, start)
        tag = data[pos]
        pos += 1
        base_tag = tag & 0x3F
        if base_tag in (0, 1):
            if tag & ~(PC_FLAG | MISS_FLAG | 1):
                raise TraceError(f"bad access tag 0x{tag:02x}", start)
            need(8, start)
            (vaddr,) = _U64.unpack_from(data, pos)
            pos += 8
            pc = None
            if tag & PC_FLAG:
                need(8, start)
                (pc,) = _U64.unpack_from(data, pos)
                pos += 8
            events.append(Access(vaddr, "store" if base_tag else "load", pc, bool(tag & MISS_FLAG)))
        elif tag in _SIMPLE_BY_TAG:
            events.append(_SIMPLE_BY_TAG[tag]())
        elif tag in _REGION_BY_TAG:
            need(_REGION.size, start)
            base, cnt, esize = _REGION.unpack_from(data, pos)
            pos += _REGION.size
            try:
                region = RegionDescriptor(base, cnt, esize)
            except ValueError as exc:
                raise TraceError(f"bad region: {exc}", start) from None
            events.append(_REGION_BY_TAG[tag](region))
        else:
            raise TraceError(f"unknown tag 0x{tag:02x}", start)
    if pos != len(data):
        raise TraceError("trailing bytes after last record", pos)
    return events


# --- JSON lines ---------------------------------------------------------------

_JSON_SIMPLE = {Init: "init", Update: "update", End: "end", Reset: "reset"}
_JSON_SIMPLE_BY_NAME = {v: k for k, v in _JSON_SIMPLE.items()}
_JSON_REGION = {AddrTBase: "addr_tbase", AddrFBase: "addr_fbase"}
_JSON_REGION_BY_NAME = {v: k for k, v in _JSON_REGION.items()}


def event_to_json(ev: TraceEvent) -> dict:
    if isinstance(ev, Access):
        d = {"kind": ev.kind, "vaddr": hex(ev.vaddr)}
        if ev.pc is not None:
            d["pc"] = hex(ev.pc)
        if ev.miss:
            d["miss"] = True
        return d
    if type(ev) in _JSON_SIMPLE:
        return {"kind": _JSON_SIMPLE[type(ev)]}
    r = ev.region
    return {
        "kind": _JSON_REGION[type(ev)],
        "base": hex(r.base),
        "element_count": r.element_count,
        "element_size": r.element_size,
    }


def _int(v) -> int:
    return int(v, 0) if isinstance(v, str) else int(v)


def event_from_json(d: dict) -> TraceEvent:
    kind = d.get("kind")
    if kind in ("load", "store"):
        pc = d.get("pc")
        return Access(_int(d["vaddr"]), kind, None if pc is None else _int(pc), bool(d.get("miss", False)))
    if kind in _JSON_SIMPLE_BY_NAME:
        return _JSON_SIMPLE_BY_NAME[kind]()
    if kind in _JSON_REGION_BY_NAME:
        region = RegionDescriptor(_int(d["base"]), _int(d["element_count"]), _int(d["element_size"]))
        return _JSON_REGION_BY_NAME[kind](region)
    raise ValueError(f"unknown event kind {kind!r}")


def to_jsonl(events: Iterable[TraceEvent]) -> str:
    return "".join(json.dumps(event_to_json(ev)) + "\n" for ev in events)


def from_jsonl(text: str) -> list[TraceEvent]:
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            events.append(event_from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
    return events


def save_trace(events: Iterable[TraceEvent], path: Union[str, Path]) -> None:
    path = Path(path)
    if path.suffix in (".jsonl", ".json"):
        path.write_text(to_jsonl(events))
    else:
        path.write_bytes(encode(events))


def load_trace(path: Union[str, Path]) -> list[TraceEvent]:
    """Load either format; binary is recognised by its magic bytes."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return decode(data)
    return from_jsonl(data.decode())


def iter_jsonl(path: Union[str, Path]) -> Iterator[TraceEvent]:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                yield event_from_json(json.loads(line))
