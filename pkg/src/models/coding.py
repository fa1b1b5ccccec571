"""
Codes behind the two-part encoders.

A WiretapCodebook is a random binning code: message w owns a bin of
2^rand_bits codewords and the encoder sends a uniformly chosen member. A
MacCodebook is an ordinary deterministic random code. The keyed part of a
slot XORs its message with a previous message before MAC encoding. Bob
decodes both users jointly by exhaustive maximum likelihood.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .channel import ChannelSpec
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    InputError,
    KeyTooShort,
    SizeOverflow,
    WidthMismatch,
    default_budget,
)

logger = logging.getLogger(__name__)

WIDTH_TOL = 1e-9
# whole-table redraws allowed while looking for a collision-free codebook
MAX_REDRAWS = 256


@dataclass(frozen=True)
class Message:
    """
    Fixed-width bit string stored as an integer, most significant bit first.
    """
    value: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise WidthMismatch(f"message width must be >= 1, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise WidthMismatch(f"value {self.value} does not fit in {self.width} bits")

    @property
    def bits(self) -> str:
        return format(self.value, f"0{self.width}b")

    @classmethod
    def from_bits(cls, bits: str) -> "Message":
        return cls(int(bits, 2), len(bits))

    @classmethod
    def random(cls, width: int, rng: np.random.Generator) -> "Message":
        return cls(int(rng.integers(0, 1 << width)), width)

    def prefix(self, width: int) -> "Message":
        if width > self.width:
            raise KeyTooShort(f"cannot take {width} bits from a {self.width}-bit message")
        return Message(self.value >> (self.width - width), width)

    def concat(self, other: "Message") -> "Message":
        return Message((self.value << other.width) | other.value, self.width + other.width)


def xor_key(msg: Message, key: Message) -> Message:
    """
    One-time pad: msg XOR the first msg.width bits of key.
    """
    if key.width < msg.width:
        raise KeyTooShort(f"{key.width}-bit key cannot pad a {msg.width}-bit message")
    return Message(msg.value ^ key.prefix(msg.width).value, msg.width)


def realized_bits(n: int, rate: float) -> int:
    """Integer message width floor(n*R) for a real rate R."""
    return max(0, int(math.floor(n * rate + WIDTH_TOL)))


def randomization_bits(n1: int, eve_information: float) -> int:
    """Default bin size exponent ceil(n1 * I(X;Z))."""
    return max(0, int(math.ceil(n1 * eve_information - WIDTH_TOL)))


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise SizeOverflow(f"{what} needs {count} symbols, budget is {budget}")


def _draw_words(rng: np.random.Generator, p: np.ndarray, shape,
                expurgate: bool = False) -> np.ndarray:
    """
    I.i.d. codeword table. With expurgate set and a support of p that admits
    an injective table, the whole table is redrawn until no two words
    coincide, up to MAX_REDRAWS times.
    """
    p = np.asarray(p, dtype=float)
    count = int(np.prod(shape[:-1]))
    words = rng.choice(p.size, size=shape, p=p).astype(np.int64)
    if expurgate and count <= int(np.count_nonzero(p)) ** shape[-1]:
        redraws = 0
        while _count_collisions(words.reshape(count, shape[-1])) and redraws < MAX_REDRAWS:
            words = rng.choice(p.size, size=shape, p=p).astype(np.int64)
            redraws += 1
        if redraws:
            logger.debug("codebook %s expurgated after %d redraws", shape, redraws)
    words.setflags(write=False)
    return words


def _count_collisions(flat_words: np.ndarray) -> int:
    unique = np.unique(flat_words, axis=0)
    return int(flat_words.shape[0] - unique.shape[0])


@dataclass(frozen=True)
class WiretapCodebook:
    """
    words[bin, index] is a codeword of n1 input symbols.
    """
    user: int
    n1: int
    msg_bits: int
    rand_bits: int
    words: np.ndarray

    @property
    def num_bins(self) -> int:
        return 1 << self.msg_bits

    @property
    def bin_size(self) -> int:
        return 1 << self.rand_bits

    @property
    def block_length(self) -> int:
        return self.n1

    def flat_words(self) -> Tuple[np.ndarray, np.ndarray]:
        """Every codeword with the message (bin) it belongs to."""
        flat = self.words.reshape(self.num_bins * self.bin_size, self.n1)
        return flat, np.repeat(np.arange(self.num_bins), self.bin_size)

    def collisions(self) -> int:
        return _count_collisions(self.flat_words()[0])

    def to_dict(self) -> dict:
        return {"kind": "wiretap", "user": self.user, "n1": self.n1,
                "msg_bits": self.msg_bits, "rand_bits": self.rand_bits,
                "words": self.words.tolist()}


@dataclass(frozen=True)
class MacCodebook:
    """
    words[message] is a codeword of n2 input symbols.
    """
    user: int
    n2: int
    msg_bits: int
    words: np.ndarray

    @property
    def num_messages(self) -> int:
        return 1 << self.msg_bits

    @property
    def block_length(self) -> int:
        return self.n2

    def flat_words(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.words, np.arange(self.num_messages)

    def collisions(self) -> int:
        return _count_collisions(self.words)

    def to_dict(self) -> dict:
        return {"kind": "mac", "user": self.user, "n2": self.n2,
                "msg_bits": self.msg_bits, "words": self.words.tolist()}


Codebook = Union[WiretapCodebook, MacCodebook]


def codebook_from_dict(document: dict) -> Codebook:
    words = np.asarray(document["words"], dtype=np.int64)
    words.setflags(write=False)
    if document["kind"] == "wiretap":
        return WiretapCodebook(document["user"], document["n1"], document["msg_bits"],
                               document["rand_bits"], words)
    if document["kind"] == "mac":
        return MacCodebook(document["user"], document["n2"], document["msg_bits"], words)
    raise InputError(f"unknown codebook kind {document['kind']!r}")


def build_wiretap(rng: np.random.Generator, p_i, n1: int, msg_bits: int, rand_bits: int,
                  user: int = 1, budget: int = None, expurgate: bool = False) -> WiretapCodebook:
    """
    Random binning codebook with i.i.d. p_i symbols.

    Raises:
        SizeOverflow: the table would hold more symbols than the budget allows.
    """
    if n1 < 1 or msg_bits < 1 or rand_bits < 0:
        raise InputError(
            f"need n1 >= 1, msg_bits >= 1, rand_bits >= 0; got {n1}, {msg_bits}, {rand_bits}")
    budget = default_budget() if budget is None else budget
    shape = (1 << msg_bits, 1 << rand_bits, n1)
    _check_budget(shape[0] * shape[1] * n1, budget, "wiretap codebook")
    words = _draw_words(rng, p_i, shape, expurgate)
    book = WiretapCodebook(user, n1, msg_bits, rand_bits, words)
    collisions = book.collisions()
    if collisions:
        logger.debug("user %d wiretap codebook has %d colliding codewords", user, collisions)
    return book


def build_mac(rng: np.random.Generator, p_i, n2: int, msg_bits: int, user: int = 1,
              budget: int = None, expurgate: bool = False) -> MacCodebook:
    """
    Deterministic random codebook with i.i.d. p_i symbols.
    """
    if n2 < 1 or msg_bits < 1:
        raise InputError(f"need n2 >= 1 and msg_bits >= 1; got {n2}, {msg_bits}")
    budget = default_budget() if budget is None else budget
    shape = (1 << msg_bits, n2)
    _check_budget(shape[0] * n2, budget, "MAC codebook")
    book = MacCodebook(user, n2, msg_bits, _draw_words(rng, p_i, shape, expurgate))
    collisions = book.collisions()
    if collisions:
        logger.debug("user %d MAC codebook has %d colliding codewords", user, collisions)
    return book


def keyed_codebook(book: MacCodebook) -> WiretapCodebook:
    """
    The keyed part seen as a binning code under a uniform fresh key of the
    message's width: bin w holds book[w XOR k] for every key k.
    """
    messages = np.arange(book.num_messages)
    index = messages[:, None] ^ messages[None, :]
    words = book.words[index]
    words.setflags(write=False)
    return WiretapCodebook(book.user, book.n2, book.msg_bits, book.msg_bits, words)


def encode_wiretap(book: WiretapCodebook, msg: Message, rng: np.random.Generator) -> np.ndarray:
    """
    Stochastic encoder: a uniformly random member of bin msg.
    """
    if msg.width != book.msg_bits:
        raise WidthMismatch(f"{msg.width}-bit message for a {book.msg_bits}-bit codebook")
    index = int(rng.integers(0, book.bin_size))
    return book.words[msg.value, index]


def encode_mac(book: MacCodebook, msg: Message) -> np.ndarray:
    if msg.width != book.msg_bits:
        raise WidthMismatch(f"{msg.width}-bit message for a {book.msg_bits}-bit codebook")
    return book.words[msg.value]


def likelihood_table(spec: ChannelSpec, y_block, book1: Codebook, book2: Codebook,
                     budget: int = None) -> np.ndarray:
    """
    log2 p(y^n | x1^n, x2^n) for every codeword pair, shape (words1, words2).
    """
    y_block = np.asarray(y_block, dtype=np.int64)
    n = y_block.size
    if book1.block_length != n or book2.block_length != n:
        raise DimensionMismatch(
            f"block of {n} symbols for codebooks of length "
            f"{book1.block_length} and {book2.block_length}")
    words1, _ = book1.flat_words()
    words2, _ = book2.flat_words()
    budget = default_budget() if budget is None else budget
    size = words1.shape[0] * words2.shape[0] * n
    if size > budget:
        raise BudgetExceeded(f"ML search over {size} symbol comparisons exceeds budget {budget}")
    bob = spec.bob_law()
    probabilities = bob[words1[:, None, :], words2[None, :, :], y_block[None, None, :]]
    with np.errstate(divide="ignore"):
        return np.log2(probabilities).sum(axis=2)


def decode_ml(spec: ChannelSpec, y_block, book1: Codebook, book2: Codebook,
              budget: int = None) -> Tuple[int, int]:
    """
    Joint maximum-likelihood decoder over every codeword pair.

    Returns the message (bin) indices of the best pair. Ties, including the
    case where every pair has zero likelihood, go to the lowest (msg1, msg2).
    """
    table = likelihood_table(spec, y_block, book1, book2, budget)
    _, messages1 = book1.flat_words()
    _, messages2 = book2.flat_words()
    best = table.max()
    if np.isneginf(best):
        ties = np.ones(table.shape, dtype=bool)
    else:
        ties = table >= best - WIDTH_TOL
    rows, cols = np.nonzero(ties)
    m1 = messages1[rows]
    m2 = messages2[cols]
    pick = np.lexsort((m2, m1))[0]
    return int(m1[pick]), int(m2[pick])
