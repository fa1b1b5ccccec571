"""
Reference channels whose rate regions can be checked by hand.

All four have binary inputs and Bob observing Y = (X1, X2), i.e. y = 2*x1 + x2.
"""

from typing import Callable, Dict, List

import numpy as np

from .channel import ChannelSpec, make_channel
from .errors import InputError

BSC_FLIP = 0.25


def _pair(x1: int, x2: int) -> int:
    return 2 * x1 + x2


def _deterministic(z_size: int, eve: Callable[[int, int], int], name: str) -> ChannelSpec:
    tensor = np.zeros((2, 2, 4, z_size))
    for x1 in range(2):
        for x2 in range(2):
            tensor[x1, x2, _pair(x1, x2), eve(x1, x2)] = 1.0
    return make_channel(tensor, name=name)


def identity_channel() -> ChannelSpec:
    """CH-ID: noiseless Y = (X1, X2), Eve sees the constant 0."""
    return _deterministic(1, lambda x1, x2: 0, "CH-ID")


def xor_eve_channel() -> ChannelSpec:
    """CH-XOR-EVE: noiseless Y = (X1, X2), Eve sees X1 xor X2."""
    return _deterministic(2, lambda x1, x2: x1 ^ x2, "CH-XOR-EVE")


def copy_eve_channel() -> ChannelSpec:
    """CH-COPY-EVE: Bob and Eve both see (X1, X2)."""
    return _deterministic(4, _pair, "CH-COPY-EVE")


def bsc_eve_channel(flip: float = BSC_FLIP) -> ChannelSpec:
    """
    CH-BSC-EVE: noiseless Y = (X1, X2); Eve sees (X1 xor N1, X2 xor N2) with
    N1, N2 independent Bernoulli(flip).
    """
    tensor = np.zeros((2, 2, 4, 4))
    for x1 in range(2):
        for x2 in range(2):
            for n1 in range(2):
                for n2 in range(2):
                    weight = (flip if n1 else 1 - flip) * (flip if n2 else 1 - flip)
                    tensor[x1, x2, _pair(x1, x2), _pair(x1 ^ n1, x2 ^ n2)] += weight
    return make_channel(tensor, name="CH-BSC-EVE")


FIXTURES: Dict[str, Callable[[], ChannelSpec]] = {
    "CH-ID": identity_channel,
    "CH-XOR-EVE": xor_eve_channel,
    "CH-COPY-EVE": copy_eve_channel,
    "CH-BSC-EVE": bsc_eve_channel,
}


def fixture_names() -> List[str]:
    return list(FIXTURES)


def get_fixture(name: str) -> ChannelSpec:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise InputError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
