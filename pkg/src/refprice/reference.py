"""Reference-price dynamics: running average (ARM) and exponential smoothing (ESM).

Under the averaging mechanism the reference after t observations is the plain
average of the starting reference and all posted prices.  The state keeps the
exact running sum together with the count so that long horizons do not drift
and resets can hit targets exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

ARM = "arm"
ESM = "esm"


@dataclass(slots=True)
class ReferenceState:
    """Reference price after ``t`` observations (the start counts as one)."""

    mode: str
    zeta: float
    t: int
    total: float  # ARM only: r1 + sum of posted prices, t summands
    r_current: float
    p_max: float

    @classmethod
    def start(cls, mode: str, r1: float, p_max: float, zeta: float = 0.0) -> "ReferenceState":
        if mode not in (ARM, ESM):
            raise ValueError(f"unknown reference mode {mode!r}")
        if not (0.0 <= r1 <= p_max):
            raise ValueError(f"starting reference {r1} outside [0, {p_max}]")
        if mode == ESM and not (0.0 <= zeta < 1.0):
            raise ValueError("ESM smoothing factor must lie in [0, 1)")
        return cls(mode=mode, zeta=zeta, t=1, total=r1, r_current=r1, p_max=p_max)

    def update(self, p: float) -> "ReferenceState":
        """Advance one round after posting price ``p``."""
        if not (0.0 <= p <= self.p_max):
            raise ValueError(f"posted price {p} outside [0, {self.p_max}]")
        if self.mode == ARM:
            total = self.total + p
            t = self.t + 1
            return replace(self, t=t, total=total, r_current=total / t)
        r = self.zeta * self.r_current + (1.0 - self.zeta) * p
        return replace(self, t=self.t + 1, total=self.total + p, r_current=r)


def new_state(mode: str, r1: float, p_max: float, zeta: float = 0.0) -> ReferenceState:
    return ReferenceState.start(mode, r1, p_max, zeta=zeta)


def update(state: ReferenceState, p: float) -> ReferenceState:
    return state.update(p)
