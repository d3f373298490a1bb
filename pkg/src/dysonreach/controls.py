"""Piecewise-constant L1 controls and seeded control families."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["PiecewiseConstantControl", "control_family", "zero_control", "constant_control"]


@dataclass(frozen=True)
class PiecewiseConstantControl:
    """Control equal to ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])`` and 0 after.

    Breakpoints start at 0 and are strictly increasing; ``len(values) ==
    len(breakpoints) - 1``. The single-breakpoint control ``([0], [])`` is
    the zero control.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if not bps or bps[0] != 0.0:
            raise InvalidInputError("breakpoints must start at 0")
        if not all(math.isfinite(b) for b in bps):
            raise InvalidInputError("breakpoints must be finite")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise InvalidInputError("breakpoints must be strictly increasing")
        if len(vals) != len(bps) - 1:
            raise InvalidInputError(
                f"expected {len(bps) - 1} values for {len(bps)} breakpoints, got {len(vals)}"
            )
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInputError("control values must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @property
    def end(self) -> float:
        """Last breakpoint; the control vanishes from here on."""
        return self.breakpoints[-1]

    def eval(self, t: float) -> float:
        if not t >= 0:
            raise InvalidInputError(f"control evaluated at negative or NaN time {t}")
        i = bisect.bisect_right(self.breakpoints, t) - 1
        if i >= len(self.values):
            return 0.0
        return self.values[i]

    __call__ = eval

    def l1_norm(self, upto: float | None = None) -> float:
        """``int_0^upto |u|``; the whole support when ``upto`` is None."""
        return sum(abs(v) * length for v, length in self._pieces(upto))

    def integral(self, upto: float | None = None) -> float:
        """Signed integral ``int_0^upto u``."""
        return sum(v * length for v, length in self._pieces(upto))

    def _pieces(self, upto):
        bps = self.breakpoints
        for i, v in enumerate(self.values):
            lo, hi = bps[i], bps[i + 1]
            if upto is not None:
                if lo >= upto:
                    break
                hi = min(hi, upto)
            yield v, hi - lo

    def segments(self, t: float) -> list[tuple[float, float, float]]:
        """Cover ``[0, t]`` by ``(start, stop, value)`` intervals on which u is constant.

        The trailing interval past the support carries value 0.
        """
        out = []
        for i, v in enumerate(self.values):
            lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
            if lo >= t:
                break
            out.append((lo, min(hi, t), v))
        if t > self.end:
            out.append((self.end, t, 0.0))
        return out

    def shifted(self, t0: float) -> "PiecewiseConstantControl":
        """The control ``s -> u(s + t0)``, restarted at time 0."""
        if t0 < 0:
            raise InvalidInputError("shift must be non-negative")
        if t0 >= self.end:
            return zero_control()
        bps = [0.0]
        vals = []
        for i, v in enumerate(self.values):
            hi = self.breakpoints[i + 1]
            if hi <= t0:
                continue
            bps.append(hi - t0)
            vals.append(v)
        return PiecewiseConstantControl(tuple(bps), tuple(vals))

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseConstantControl":
        try:
            return cls(tuple(d["breakpoints"]), tuple(d["values"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed control: {exc}") from exc


def zero_control() -> PiecewiseConstantControl:
    return PiecewiseConstantControl((0.0,), ())


def constant_control(value: float, T: float) -> PiecewiseConstantControl:
    return PiecewiseConstantControl((0.0, float(T)), (float(value),))


def control_family(T: float, K: float, n_pieces: int, count: int, seed: int) -> list[PiecewiseConstantControl]:
    """Seeded controls on ``[0, T]`` with ``n_pieces`` uniform pieces and L1 norm at most ``K``.

    Entry 0 is the zero control and entry 1 (if ``count >= 2``) sits on the
    boundary ``||u||_1 = K``. Remaining entries draw piece values uniformly in
    ``[-1, 1]``, rescale them to unit L1 norm, then multiply by ``K`` times a
    uniform factor in ``[0, 1]``.
    """
    if not (math.isfinite(T) and T > 0):
        raise InvalidInputError("T must be positive")
    if not (math.isfinite(K) and K >= 0):
        raise InvalidInputError("K must be non-negative")
    if int(n_pieces) != n_pieces or n_pieces < 1:
        raise InvalidInputError("n_pieces must be a positive integer")
    if int(count) != count or count < 1:
        raise InvalidInputError("count must be a positive integer")
    rng = np.random.default_rng(seed)
    bps = tuple(np.linspace(0.0, T, int(n_pieces) + 1).tolist())
    widths = np.diff(bps)
    family = [PiecewiseConstantControl(bps, (0.0,) * int(n_pieces))]
    for k in range(1, int(count)):
        raw = rng.uniform(-1.0, 1.0, int(n_pieces))
        norm = float(np.sum(np.abs(raw) * widths))
        if norm == 0.0:
            raw = np.ones(int(n_pieces))
            norm = float(T)
        scale = K if k == 1 else K * rng.uniform(0.0, 1.0)
        vals = raw * (scale / norm) + 0.0  # no negative zeros
        family.append(PiecewiseConstantControl(bps, tuple(vals.tolist())))
    return family
