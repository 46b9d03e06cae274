"""Datapath functions used by the cycle-accurate simulator."""

from __future__ import annotations

import operator

_BINARY = {
    "ADD": operator.add,
    "SUB": operator.sub,
    "MUL": operator.mul,
    "AND": operator.and_,
    "OR": operator.or_,
    "XOR": operator.xor,
}


def execute(opcode: str, a: int, b: int, width: int) -> int:
    """Two's-complement result of ``opcode`` truncated to ``width`` bits."""
    mask = (1 << width) - 1
    fn = _BINARY.get(opcode)
    if fn is not None:
        return fn(a, b) & mask
    if opcode == "SHL":
        return (a << (b % width)) & mask
    if opcode == "SHR":
        return (a & mask) >> (b % width)
    if opcode == "CMP":
        sign = 1 << (width - 1)
        return int(((a & mask) ^ sign) < ((b & mask) ^ sign))
    if opcode == "NOP":
        return a & mask
    raise ValueError(f"unsupported ALU opcode {opcode!r}")
