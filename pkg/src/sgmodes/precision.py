"""Precision contexts and the multiprecision backend handle."""
from __future__ import annotations

import threading
from dataclasses import dataclass

import mpmath

HARDWARE_BITS = 53

_local = threading.local()


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for one call.

    ``mantissa_bits == 53`` selects IEEE double arithmetic (numpy/scipy and the
    compiled kernels); anything wider routes through mpmath at that many bits.
    """

    mantissa_bits: int = HARDWARE_BITS
    residual_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        if int(self.mantissa_bits) != self.mantissa_bits or self.mantissa_bits < HARDWARE_BITS:
            raise ValueError(f"mantissa_bits must be an integer >= {HARDWARE_BITS}")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")

    @property
    def hardware(self) -> bool:
        return self.mantissa_bits == HARDWARE_BITS

    def with_bits(self, bits: int) -> "PrecisionContext":
        return PrecisionContext(bits, self.residual_tol, self.max_iter)


DEFAULT_CONTEXT = PrecisionContext()


def mp_context(bits: int) -> mpmath.ctx_mp.MPContext:
    """Return a thread-private mpmath context fixed at ``bits`` of precision.

    mpmath functions adjust ``ctx.prec`` internally, so contexts are never
    shared across threads.
    """
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    ctx = cache.get(bits)
    if ctx is None:
        ctx = mpmath.MPContext()
        ctx.prec = bits
        cache[bits] = ctx
    return ctx
