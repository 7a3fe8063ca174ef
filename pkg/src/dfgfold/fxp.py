"""32-bit two's-complement fixed-point arithmetic.

All datapath words are 32 bits wide with a configurable number of
fractional bits (Q(32-f).f).  Overflow wraps, it never saturates, so
every operator here is a pure function of the raw integer inputs and
the format.  The simulator and the equivalence checker both build on
these primitives, which is what makes "bit-exact" a meaningful claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1
SIGN_BIT = 1 << (WORD_BITS - 1)
INT_MIN = -SIGN_BIT
INT_MAX = SIGN_BIT - 1

SINE_TABLE_BITS = 10
SINE_TABLE_SIZE = 1 << SINE_TABLE_BITS


def wrap(value: int) -> int:
    """Reduce an arbitrary integer to signed 32-bit two's complement."""
    return ((value & WORD_MASK) ^ SIGN_BIT) - SIGN_BIT


@dataclass(frozen=True)
class FixedPointFormat:
    """Number format shared by every wire in a design."""

    frac_bits: int = 16

    def __post_init__(self) -> None:
        if not 0 <= self.frac_bits < WORD_BITS:
            raise ValueError(f"frac_bits must be in [0, {WORD_BITS}), got {self.frac_bits}")

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    def encode(self, value: float) -> int:
        """Real number to raw word, rounding half away from zero, wrapping."""
        scaled = value * self.scale
        raw = math.floor(scaled + 0.5) if scaled >= 0 else math.ceil(scaled - 0.5)
        return wrap(int(raw))

    def decode(self, raw: int) -> float:
        return wrap(raw) / self.scale

    def sine_table(self) -> list[int]:
        """1024-entry full-turn sine table in this format.

        Entry i holds sin(2*pi*i/1024) rounded to the nearest representable
        value and clamped into the 32-bit range (only relevant for very
        large frac_bits where +1.0 would overflow).
        """
        table = []
        for i in range(SINE_TABLE_SIZE):
            raw = math.floor(math.sin(2.0 * math.pi * i / SINE_TABLE_SIZE) * self.scale + 0.5)
            table.append(min(max(raw, INT_MIN), INT_MAX))
        return table

    def sine_index(self, raw: int) -> int:
        """Map a raw phase word (1.0 == one turn) to a table index.

        The top ten bits of the fractional part select the entry, so the
        phase is truncated, not rounded, and whole turns alias away.
        """
        raw = wrap(raw)
        if self.frac_bits >= SINE_TABLE_BITS:
            return (raw >> (self.frac_bits - SINE_TABLE_BITS)) & (SINE_TABLE_SIZE - 1)
        return (raw << (SINE_TABLE_BITS - self.frac_bits)) & (SINE_TABLE_SIZE - 1)


def fx_add(a: int, b: int) -> int:
    return wrap(a + b)


def fx_sub(a: int, b: int) -> int:
    return wrap(a - b)


def fx_negate(a: int) -> int:
    return wrap(-a)


def fx_mult(a: int, b: int, fmt: FixedPointFormat) -> int:
    # Full product, then an arithmetic shift right: truncation toward
    # negative infinity, same as a hardware shifter on the wide product.
    return wrap((wrap(a) * wrap(b)) >> fmt.frac_bits)


def fx_sine(a: int, fmt: FixedPointFormat, table: list[int] | None = None) -> int:
    if table is None:
        table = fmt.sine_table()
    return table[fmt.sine_index(a)]


def fx_apply(kind: str, operands: list[int], fmt: FixedPointFormat) -> int:
    """Evaluate one combinational operator on raw words."""
    if kind == "add":
        return fx_add(operands[0], operands[1])
    if kind == "sub":
        return fx_sub(operands[0], operands[1])
    if kind == "mult":
        return fx_mult(operands[0], operands[1], fmt)
    if kind == "negate":
        return fx_negate(operands[0])
    if kind == "sine-lut":
        return fx_sine(operands[0], fmt)
    raise ValueError(f"not a combinational operator kind: {kind!r}")
