"""Byte-level mutation operators with a deterministic driver.

``mutate`` picks one operator uniformly at random from those applicable to
the candidate (an empty input only supports insertion; an input at the size
cap excludes insertion) and draws the operator's arguments from the same
generator, so the output is a pure function of the rng state.
"""

from __future__ import annotations

import random

from .types import DEFAULT_MAX_INPUT_SIZE

OPERATORS = ("bit-flip", "byte-replace", "byte-insert", "byte-delete", "truncate")


def flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def replace_byte(data: bytes, index: int, value: int) -> bytes:
    out = bytearray(data)
    out[index] = value
    return bytes(out)


def insert_byte(data: bytes, index: int, value: int) -> bytes:
    return data[:index] + bytes([value]) + data[index:]


def delete_byte(data: bytes, index: int) -> bytes:
    return data[:index] + data[index + 1:]


def truncate(data: bytes, length: int) -> bytes:
    return data[:length]


def mutate(candidate: bytes, rng: random.Random,
           max_size: int = DEFAULT_MAX_INPUT_SIZE) -> bytes:
    """Produce one mutant of ``candidate``, never longer than ``max_size``."""
    if not candidate:
        ops = ("byte-insert",)
    elif len(candidate) >= max_size:
        ops = tuple(op for op in OPERATORS if op != "byte-insert")
    else:
        ops = OPERATORS
    op = ops[rng.randrange(len(ops))]
    if op == "bit-flip":
        return flip_bit(candidate, rng.randrange(len(candidate) * 8))
    if op == "byte-replace":
        return replace_byte(candidate, rng.randrange(len(candidate)), rng.randrange(256))
    if op == "byte-insert":
        return insert_byte(candidate, rng.randrange(len(candidate) + 1), rng.randrange(256))
    if op == "byte-delete":
        return delete_byte(candidate, rng.randrange(len(candidate)))
    return truncate(candidate, rng.randrange(len(candidate)))
