"""
Discrete memoryless two-user wiretap channels p(y,z|x1,x2) and independent
input distributions.

Alphabets are 0-based integer ranges. Composite symbols such as Y=(X1,X2)
are flattened row-major, so Y = x1 * |X2| + x2.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyAlphabet,
    IndexOutOfRange,
    InputError,
    NegativeProbability,
    NonStochastic,
)

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-12
DERIVED_TOL = 1e-10


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChannelSpec:
    """
    Conditional law p(y,z|x1,x2) stored as a tensor indexed (x1, x2, y, z).
    """
    alphabet_sizes: Tuple[int, int, int, int]
    transitions: np.ndarray
    name: str = ""

    @property
    def x1_size(self) -> int:
        return self.alphabet_sizes[0]

    @property
    def x2_size(self) -> int:
        return self.alphabet_sizes[1]

    @property
    def y_size(self) -> int:
        return self.alphabet_sizes[2]

    @property
    def z_size(self) -> int:
        return self.alphabet_sizes[3]

    def bob_law(self) -> np.ndarray:
        """p(y|x1,x2) with Eve's output summed out, shape (X1, X2, Y)."""
        return self.transitions.sum(axis=3)

    def eve_law(self) -> np.ndarray:
        """p(z|x1,x2) with Bob's output summed out, shape (X1, X2, Z)."""
        return self.transitions.sum(axis=2)


@dataclass(frozen=True)
class InputPair:
    """
    Independent input laws p1 over X1 and p2 over X2.
    """
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        for label in ("p1", "p2"):
            p = _frozen(getattr(self, label))
            if p.ndim != 1 or p.size == 0:
                raise DimensionMismatch(f"{label} must be a non-empty 1-D array")
            if not np.all(np.isfinite(p)):
                raise NonStochastic(f"{label} has a non-finite entry")
            if np.any(p < 0):
                raise NegativeProbability(f"{label} has a negative entry")
            if abs(p.sum() - 1.0) > STOCHASTIC_TOL:
                raise NonStochastic(f"{label} sums to {p.sum()!r}, not 1")
            object.__setattr__(self, label, p)

    @classmethod
    def uniform(cls, x1_size: int, x2_size: int) -> "InputPair":
        return cls(np.full(x1_size, 1.0 / x1_size), np.full(x2_size, 1.0 / x2_size))

    def product(self) -> np.ndarray:
        """Joint input law p1 ⊗ p2, shape (X1, X2)."""
        return np.outer(self.p1, self.p2)


def make_channel(transitions, name: str = "") -> ChannelSpec:
    """
    Build and validate a ChannelSpec from a nested (x1, x2, y, z) array.
    """
    tensor = np.asarray(transitions, dtype=float)
    if tensor.ndim != 4:
        raise DimensionMismatch(
            f"transitions must be 4-dimensional (x1, x2, y, z), got {tensor.ndim} axes")
    sizes = tuple(int(s) for s in tensor.shape)
    return validate(ChannelSpec(alphabet_sizes=sizes, transitions=_frozen(tensor), name=name))


def validate(spec: ChannelSpec) -> ChannelSpec:
    """
    Return the channel unchanged if every invariant holds, otherwise raise.

    Raises:
        EmptyAlphabet: an alphabet has size < 1.
        NegativeProbability: a tensor entry is negative.
        NonStochastic: an entry is NaN or infinite, or some row p(.,.|x1,x2) does not sum to 1 within 1e-12.
    """
    sizes = tuple(spec.alphabet_sizes)
    if len(sizes) != 4:
        raise DimensionMismatch(f"expected four alphabet sizes, got {len(sizes)}")
    if any(int(s) < 1 for s in sizes):
        raise EmptyAlphabet(f"alphabet sizes must be >= 1, got {sizes}")

    tensor = np.asarray(spec.transitions, dtype=float)
    if tensor.shape != sizes:
        raise DimensionMismatch(
            f"transition tensor shape {tensor.shape} does not match alphabets {sizes}")
    if not np.all(np.isfinite(tensor)):
        x1, x2, y, z = np.argwhere(~np.isfinite(tensor))[0]
        raise NonStochastic(
            f"p(y={y},z={z}|x1={x1},x2={x2}) = {tensor[x1, x2, y, z]!r} is not finite")
    if np.any(tensor < 0):
        x1, x2, y, z = np.argwhere(tensor < 0)[0]
        raise NegativeProbability(
            f"p(y={y},z={z}|x1={x1},x2={x2}) = {tensor[x1, x2, y, z]!r} is negative")

    row_sums = tensor.sum(axis=(2, 3))
    deviation = np.abs(row_sums - 1.0)
    if np.any(deviation > STOCHASTIC_TOL):
        x1, x2 = np.unravel_index(int(np.argmax(deviation)), row_sums.shape)
        raise NonStochastic(
            f"row (x1={x1}, x2={x2}) sums to {row_sums[x1, x2]!r}")

    if not isinstance(spec.transitions, np.ndarray) or spec.transitions.flags.writeable:
        spec = ChannelSpec(alphabet_sizes=sizes, transitions=_frozen(tensor), name=spec.name)
    return spec


def normalize_rows(tensor) -> np.ndarray:
    """
    Rescale every (x1, x2) row of a nonnegative tensor to sum to one.
    """
    tensor = np.asarray(tensor, dtype=float)
    sums = tensor.sum(axis=(2, 3), keepdims=True)
    if np.any(sums <= 0):
        raise NonStochastic("cannot normalize a row with zero total mass")
    return tensor / sums


def _check_inputs(spec: ChannelSpec, inputs: InputPair) -> None:
    if inputs.p1.size != spec.x1_size or inputs.p2.size != spec.x2_size:
        raise DimensionMismatch(
            f"input sizes ({inputs.p1.size}, {inputs.p2.size}) do not match "
            f"channel inputs ({spec.x1_size}, {spec.x2_size})")


def joint_law(spec: ChannelSpec, inputs: InputPair) -> np.ndarray:
    """
    Joint pmf over (X1, X2, Y, Z): p1(x1) p2(x2) p(y,z|x1,x2).
    """
    _check_inputs(spec, inputs)
    joint = inputs.product()[:, :, None, None] * spec.transitions
    if abs(joint.sum() - 1.0) > DERIVED_TOL:
        raise NonStochastic(f"joint law sums to {joint.sum()!r}")
    joint.setflags(write=False)
    return joint


def _check_symbols(spec: ChannelSpec, x1, x2) -> None:
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if x1.shape != x2.shape:
        raise DimensionMismatch(f"input blocks differ in shape: {x1.shape} vs {x2.shape}")
    if x1.size and (x1.min() < 0 or x1.max() >= spec.x1_size):
        raise IndexOutOfRange(f"x1 outside 0..{spec.x1_size - 1}")
    if x2.size and (x2.min() < 0 or x2.max() >= spec.x2_size):
        raise IndexOutOfRange(f"x2 outside 0..{spec.x2_size - 1}")


def sample(spec: ChannelSpec, x1: int, x2: int, rng: np.random.Generator) -> Tuple[int, int]:
    """
    One channel use: draw (y, z) from p(.,.|x1,x2).
    """
    _check_symbols(spec, [x1], [x2])
    row = spec.transitions[x1, x2].ravel()
    flat = int(rng.choice(row.size, p=row))
    y, z = divmod(flat, spec.z_size)
    return y, z


def _draw_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # rows: (..., K) probability rows; inverse-CDF draw per row
    cumulative = np.cumsum(rows, axis=-1)
    cumulative[..., -1] = 1.0
    u = rng.random(rows.shape[:-1] + (1,))
    return (u >= cumulative).sum(axis=-1)


def sample_block(spec: ChannelSpec, x1_block, x2_block,
                 rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    n memoryless channel uses at once; blocks may carry leading batch axes.
    """
    x1_block = np.asarray(x1_block, dtype=int)
    x2_block = np.asarray(x2_block, dtype=int)
    _check_symbols(spec, x1_block, x2_block)
    rows = spec.transitions[x1_block, x2_block].reshape(x1_block.shape + (-1,))
    flat = _draw_rows(rows, rng)
    y, z = np.divmod(flat, spec.z_size)
    return y, z


def sample_eve(spec: ChannelSpec, x1_block, x2_block, rng: np.random.Generator) -> np.ndarray:
    """
    Draw only Eve's outputs, from the Z-marginal of each channel row.
    """
    x1_block = np.asarray(x1_block, dtype=int)
    x2_block = np.asarray(x2_block, dtype=int)
    _check_symbols(spec, x1_block, x2_block)
    return _draw_rows(spec.eve_law()[x1_block, x2_block], rng)


def channel_to_dict(spec: ChannelSpec) -> dict:
    return {
        "name": spec.name,
        "alphabets": [int(s) for s in spec.alphabet_sizes],
        "transitions": spec.transitions.tolist(),
    }


def channel_from_dict(document: dict) -> ChannelSpec:
    try:
        alphabets = [int(a) for a in document["alphabets"]]
        transitions = np.asarray(document["transitions"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed channel document: {exc}") from exc
    if len(alphabets) != 4:
        raise DimensionMismatch(f"'alphabets' must list four sizes, got {alphabets}")
    if any(a < 1 for a in alphabets):
        raise EmptyAlphabet(f"alphabet sizes must be >= 1, got {alphabets}")
    if transitions.shape != tuple(alphabets):
        raise DimensionMismatch(
            f"transitions shape {transitions.shape} does not match alphabets {alphabets}")
    return make_channel(transitions, name=str(document.get("name", "")))


def load_channel(path) -> ChannelSpec:
    """
    Load and validate a channel-spec JSON file.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
    spec = channel_from_dict(document)
    logger.debug("loaded channel %r with alphabets %s", spec.name, spec.alphabet_sizes)
    return spec


def dump_channel(spec: ChannelSpec) -> str:
    # json writes floats with repr, so doubles round-trip exactly
    return json.dumps(channel_to_dict(spec), indent=2, sort_keys=True) + "\n"


def parse_inputs(text: Optional[str], spec: ChannelSpec) -> InputPair:
    """
    Input laws from the command line: None (uniform), a JSON file path, or the
    inline form "p1_0,p1_1,...;p2_0,p2_1,...".
    """
    if text is None:
        return InputPair.uniform(spec.x1_size, spec.x2_size)
    candidate = Path(text)
    if candidate.suffix == ".json" or candidate.is_file():
        with candidate.open("r", encoding="utf-8") as handle:
            document = json.load(handle)
        if not isinstance(document, dict):
            raise InputError(f"{candidate}: expected an object with p1 and p2, "
                             f"got {type(document).__name__}")
        try:
            inputs = InputPair(document["p1"], document["p2"])
        except KeyError as exc:
            raise InputError(f"{candidate}: missing field {exc}") from exc
        except InputError:
            raise
        except (TypeError, ValueError) as exc:
            raise InputError(f"{candidate}: cannot read input laws: {exc}") from exc
    else:
        parts = text.split(";")
        if len(parts) != 2:
            raise InputError(f"inline inputs must look like 'a,b;c,d', got {text!r}")
        try:
            inputs = InputPair(*[[float(v) for v in part.split(",")] for part in parts])
        except ValueError as exc:
            raise InputError(f"cannot parse inputs {text!r}: {exc}") from exc
    _check_inputs(spec, inputs)
    return inputs


def simplex_grid(size: int, steps: int) -> Sequence[np.ndarray]:
    """
    All probability vectors of length `size` with entries in multiples of 1/steps.
    """
    if size == 1:
        return [np.array([1.0])]
    points = []

    def compose(prefix, remaining, slots):
        if slots == 1:
            points.append(np.array(prefix + [remaining], dtype=float) / steps)
            return
        for part in range(remaining + 1):
            compose(prefix + [part], remaining - part, slots - 1)

    compose([], steps, size)
    return points
