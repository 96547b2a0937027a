"""Byte-oriented range coder over 16-bit quantized CDF tables.

The coder keeps a 48-bit range and renormalizes one byte at a time whenever
the range drops below 2^40; carries ripple directly into the buffered
output.  The wide range makes the per-symbol subdivision loss ~2^-24 bits,
so the payload length is a function of the multiset of coded (symbol, CDF)
pairs alone: reordering symbols (as the decoding schedules do) does not
change the compressed size.

finish() appends exactly three bytes, enough to pin a 48-bit value inside
the final interval; the decoder's 6-byte window covers the missing tail
with up to three virtual zero bytes, so a well-formed stream never reads
past its end by more than that.
"""

from __future__ import annotations

import numpy as np

from .errors import CorruptStreamError

RANGE_BITS = 48
_TOP = 1 << RANGE_BITS
_BOTTOM = 1 << (RANGE_BITS - 8)   # renormalize below this
_TOTAL_BITS = 16
_FLUSH_BYTES = 3
_WINDOW_BYTES = RANGE_BITS // 8


class RangeEncoder:
    def __init__(self):
        self._low = 0
        self._range = _TOP - 1
        self._out = bytearray()
        self._finished = False

    def encode(self, symbol: int, cdf) -> None:
        """Narrow the interval to [cdf[symbol], cdf[symbol+1]) / 65536."""
        start = int(cdf[symbol])
        width = int(cdf[symbol + 1]) - start
        r = self._range >> _TOTAL_BITS
        self._low += r * start
        self._range = r * width
        if self._low >= _TOP:
            self._low -= _TOP
            self._propagate_carry()
        while self._range < _BOTTOM:
            self._out.append((self._low >> (RANGE_BITS - 8)) & 0xFF)
            self._low = (self._low << 8) & (_TOP - 1)
            self._range <<= 8

    def _propagate_carry(self) -> None:
        i = len(self._out) - 1
        while self._out[i] == 0xFF:
            self._out[i] = 0
            i -= 1
        self._out[i] += 1

    def finish(self) -> bytes:
        """Flush the coder; afterwards the encoder must not be reused."""
        if self._finished:
            raise RuntimeError("encoder already finished")
        self._finished = True
        # Round low up to a multiple of 2^24 inside [low, low + range); the
        # three emitted bytes plus zero padding then identify the interval.
        tail_bits = RANGE_BITS - 8 * _FLUSH_BYTES
        value = ((self._low + (1 << tail_bits) - 1) >> tail_bits) << tail_bits
        if value >= _TOP:
            value -= _TOP
            self._propagate_carry()
        for k in range(_FLUSH_BYTES):
            self._out.append((value >> (RANGE_BITS - 8 * (k + 1))) & 0xFF)
        return bytes(self._out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._virtual = 0
        self._range = _TOP - 1
        self._code = 0
        for _ in range(_WINDOW_BYTES):
            self._code = (self._code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self._pos < len(self._data):
            b = self._data[self._pos]
            self._pos += 1
            return b
        # The encoder's flush is _FLUSH_BYTES wide while the code window is
        # _WINDOW_BYTES; the difference is legitimate zero padding.
        self._virtual += 1
        if self._virtual > _WINDOW_BYTES - _FLUSH_BYTES:
            raise CorruptStreamError("compressed stream exhausted prematurely")
        return 0

    def decode(self, cdf) -> int:
        """Return the next symbol coded with this CDF table."""
        r = self._range >> _TOTAL_BITS
        target = self._code // r
        if target > 65535:
            target = 65535
        symbol = int(np.searchsorted(cdf, target, side="right")) - 1
        start = int(cdf[symbol])
        width = int(cdf[symbol + 1]) - start
        self._code -= r * start
        self._range = r * width
        while self._range < _BOTTOM:
            self._code = ((self._code << 8) & (_TOP - 1)) | self._next_byte()
            self._range <<= 8
        return symbol


def rate_of(probabilities, symbol: int) -> float:
    """Ideal code length -log2(pmf[symbol]) in bits, for rate accounting."""
    return float(-np.log2(probabilities[symbol]))
