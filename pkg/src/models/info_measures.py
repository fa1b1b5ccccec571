"""
Exact Shannon quantities over finite joint pmfs with named axes.

All logarithms are base 2. Marginals are formed by summing the highest
remaining axis first so repeated runs produce bit-identical floats.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.stats import entropy as _scipy_entropy

from .channel import ChannelSpec, InputPair, joint_law
from .errors import DimensionMismatch, InputError, NegativeProbability, NonStochastic, \
    OverlappingAxes, UnknownAxis

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
CLAMP_TOL = 1e-9

AxisSpec = Sequence[str]


@dataclass(frozen=True)
class JointPmf:
    """
    A probability tensor whose axes carry unique names.
    """
    axes: Tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        mass = np.array(self.mass, dtype=float)
        if len(set(axes)) != len(axes):
            raise InputError(f"axis names must be unique, got {axes}")
        if mass.ndim != len(axes):
            raise DimensionMismatch(f"{len(axes)} axis names for a {mass.ndim}-D tensor")
        if not np.all(np.isfinite(mass)):
            raise NonStochastic("joint pmf has a non-finite entry")
        if np.any(mass < 0):
            raise NegativeProbability("joint pmf has a negative entry")
        if abs(mass.sum() - 1.0) > NORMALIZATION_TOL:
            raise NonStochastic(f"joint pmf sums to {mass.sum()!r}")
        mass.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_channel(cls, spec: ChannelSpec, inputs: InputPair) -> "JointPmf":
        return cls(("x1", "x2", "y", "z"), joint_law(spec, inputs))

    def size(self, axis: str) -> int:
        return self.mass.shape[self._index(axis)]

    def _index(self, axis: str) -> int:
        try:
            return self.axes.index(axis)
        except ValueError:
            raise UnknownAxis(f"unknown axis {axis!r}; pmf has {self.axes}")

    def marginal(self, axes: AxisSpec) -> np.ndarray:
        """
        Marginal tensor on `axes`, returned in the pmf's own axis order.
        """
        keep = sorted(self._index(a) for a in _as_tuple(axes))
        mass = self.mass
        for position in reversed(range(mass.ndim)):
            if position not in keep:
                mass = mass.sum(axis=position)
        return mass


def _as_tuple(axes) -> Tuple[str, ...]:
    if isinstance(axes, str):
        return (axes,)
    return tuple(axes)


def _disjoint(*groups: Iterable[str]) -> None:
    seen = set()
    for group in groups:
        group = set(group)
        if seen & group:
            raise OverlappingAxes(f"axes {sorted(seen & group)} appear in more than one group")
        seen |= group


def entropy(p: JointPmf, axes: AxisSpec) -> float:
    """
    H of the marginal of `p` on `axes`, in bits.
    """
    axes = _as_tuple(axes)
    if not axes:
        raise UnknownAxis("entropy needs at least one axis")
    marginal = p.marginal(axes).ravel()
    return float(_scipy_entropy(marginal, base=2)) if marginal.size > 1 else 0.0


def _clamp(value: float, upper: float) -> float:
    if -CLAMP_TOL < value < 0.0:
        return 0.0
    if upper < value < upper + CLAMP_TOL:
        return upper
    if value < 0.0 or value > upper:
        logger.warning("information value %.3e outside [0, %.3e] beyond tolerance", value, upper)
    return value


def mutual_information(p: JointPmf, a: AxisSpec, b: AxisSpec) -> float:
    """
    I(A;B) = H(A) + H(B) - H(A,B).
    """
    a, b = _as_tuple(a), _as_tuple(b)
    _disjoint(a, b)
    h_a = entropy(p, a)
    h_b = entropy(p, b)
    value = h_a + h_b - entropy(p, a + b)
    return _clamp(value, min(h_a, h_b))


def conditional_mutual_information(p: JointPmf, a: AxisSpec, b: AxisSpec,
                                   c: AxisSpec) -> float:
    """
    I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C).
    """
    a, b, c = _as_tuple(a), _as_tuple(b), _as_tuple(c)
    _disjoint(a, b, c)
    if not c:
        return mutual_information(p, a, b)
    h_c = entropy(p, c)
    h_ac = entropy(p, a + c)
    h_bc = entropy(p, b + c)
    value = h_ac + h_bc - entropy(p, a + b + c) - h_c
    return _clamp(value, min(h_ac, h_bc) - h_c)
