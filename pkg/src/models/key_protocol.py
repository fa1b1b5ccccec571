"""
The slotted key-recycling scheme.

Slot 1 sends a wiretap-coded message over n1 channel uses. Every later slot
adds a keyed part of n2 = l*n1 uses whose message is XORed with the full
message the same user sent in the previous slot, then MAC-encoded. Bob
decodes both users jointly and removes the pad with his own decoded copy of
the previous message.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from .channel import ChannelSpec, InputPair, sample_block
from .coding import (
    MacCodebook,
    Message,
    WiretapCodebook,
    build_mac,
    build_wiretap,
    decode_ml,
    encode_mac,
    encode_wiretap,
    randomization_bits,
    realized_bits,
    xor_key,
)
from .errors import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    EmptyInput,
    InvalidConfig,
    KeyDeficit,
    default_budget,
)
from .rate_regions import build_schedule, channel_terms, pentagons_from_terms, ramp_constants

logger = logging.getLogger(__name__)

# spawn-key tags for the independent random streams of a run
PART_TRAFFIC = 0
PART_WIRETAP = 1
PART_KEYED = 2

CONFIDENCE = 0.95

Pair = Tuple[int, int]


@dataclass(frozen=True)
class SlotWidths:
    """
    Integer message widths of one slot, per user.
    """
    slot: int
    wiretap: Pair
    rand: Pair
    keyed: Pair

    def total(self, user: int) -> int:
        return self.wiretap[user - 1] + self.keyed[user - 1]


@dataclass(frozen=True)
class KeyDeficitNote:
    slot: int
    user: int
    requested: int
    granted: int


@dataclass(frozen=True)
class SlotConfig:
    n1: int
    n2: int
    l: int
    num_slots: int
    seed: int
    slots: Tuple[SlotWidths, ...]
    deficits: Tuple[KeyDeficitNote, ...] = ()
    budget: int = DEFAULT_BUDGET
    expurgate: bool = True

    def __post_init__(self):
        if self.n1 < 1:
            raise InvalidConfig(f"n1 must be >= 1, got {self.n1}")
        if self.l < 1:
            raise InvalidConfig(f"l must be a positive integer, got {self.l}")
        if self.n2 != self.l * self.n1:
            raise InvalidConfig(f"n2 = {self.n2} is not l*n1 = {self.l * self.n1}")
        if self.num_slots < 1 or len(self.slots) != self.num_slots:
            raise InvalidConfig(f"{len(self.slots)} slot widths for {self.num_slots} slots")
        if self.slots[0].keyed != (0, 0):
            raise InvalidConfig("slot 1 has no keyed part")
        for previous, current in zip(self.slots, self.slots[1:]):
            for user in (1, 2):
                if current.keyed[user - 1] > previous.total(user):
                    raise KeyDeficit(
                        f"slot {current.slot} user {user}: keyed width "
                        f"{current.keyed[user - 1]} exceeds the {previous.total(user)}-bit key")

    def widths(self, slot: int) -> SlotWidths:
        return self.slots[slot - 1]

    def slot_length(self, slot: int) -> int:
        return self.n1 if slot == 1 else self.n1 + self.n2

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self, include_seed: bool = True) -> str:
        document = self.to_dict()
        if not include_seed:
            document.pop("seed")
        canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_seed(self, seed: int) -> "SlotConfig":
        return dataclasses.replace(self, seed=int(seed))


def _generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def trial_seeds(root_seed: int, trials: int) -> List[int]:
    """Distinct per-trial seeds derived from one root seed."""
    children = np.random.SeedSequence(root_seed).spawn(trials)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def plan(spec: ChannelSpec, inputs: InputPair, n1: int, l: int, num_slots: int, seed: int,
         budget: Optional[int] = None, max_width: Optional[int] = None,
         rand_bits: Optional[Pair] = None, strict: bool = False,
         expurgate: bool = True) -> SlotConfig:
    """
    Integer-bit realization of the ramp schedule.

    Wiretap widths are floor(n1 * R) at the secrecy operating point and keyed
    widths floor(n2 * R) at the scheduled keyed rate. A keyed width larger than
    the previous slot's message is lowered to the key length and reported.
    With expurgate set, every codebook of the run is drawn collision-free
    whenever its size allows.

    Raises:
        InvalidConfig: nonpositive n1, l or slot count, or a width that realizes to 0 bits.
        NoPositiveSecrecyRate: some user has no positive wiretap rate.
        KeyDeficit: key availability forced a lower width and strict is set.
        BudgetExceeded: Bob's exhaustive decoding would exceed the budget.
    """
    if n1 < 1 or l < 1 or num_slots < 1:
        raise InvalidConfig(f"need n1 >= 1, l >= 1, slots >= 1; got {n1}, {l}, {num_slots}")
    if max_width is not None and max_width < 1:
        raise InvalidConfig(f"max width must be >= 1, got {max_width}")
    budget = default_budget() if budget is None else budget
    ramp_constants(spec, inputs)
    terms = channel_terms(spec, inputs)
    schedule = build_schedule(*pentagons_from_terms(terms), num_slots, l)
    n2 = l * n1

    def cap(bits: int) -> int:
        return bits if max_width is None else min(bits, max_width)

    wiretap = tuple(cap(realized_bits(n1, rate)) for rate in schedule.wiretap)
    for user, width in enumerate(wiretap, start=1):
        if width < 1:
            raise InvalidConfig(
                f"user {user}: n1 = {n1} carries no whole wiretap bit at rate "
                f"{schedule.wiretap[user - 1]:.6g}; increase n1")
    if rand_bits is None:
        rand_bits = (randomization_bits(n1, terms.i1_eve), randomization_bits(n1, terms.i2_eve))
    rand_bits = tuple(int(r) for r in rand_bits)

    slots = [SlotWidths(1, wiretap, rand_bits, (0, 0))]
    deficits = []
    for k in range(2, num_slots + 1):
        keyed = []
        for user in (1, 2):
            requested = cap(realized_bits(n2, schedule.slot(k).keyed[user - 1]))
            available = slots[-1].total(user)
            granted = min(requested, available)
            if granted < requested:
                note = KeyDeficitNote(k, user, requested, granted)
                if strict:
                    raise KeyDeficit(
                        f"slot {k} user {user}: {requested} keyed bits requested, "
                        f"only {available} key bits available")
                logger.warning("key deficit in slot %d user %d: %d bits requested, %d granted",
                               k, user, requested, granted)
                deficits.append(note)
            if granted < 1:
                raise InvalidConfig(f"slot {k} user {user}: keyed part realizes to 0 bits; "
                                    "increase n1 or l")
            keyed.append(granted)
        slots.append(SlotWidths(k, wiretap, rand_bits, (keyed[0], keyed[1])))

    for widths in slots:
        wiretap_search = (1 << (widths.wiretap[0] + widths.rand[0])) * \
                         (1 << (widths.wiretap[1] + widths.rand[1])) * n1
        keyed_search = (1 << widths.keyed[0]) * (1 << widths.keyed[1]) * n2
        if max(wiretap_search, keyed_search) > budget:
            raise BudgetExceeded(
                f"slot {widths.slot}: decoding needs {max(wiretap_search, keyed_search)} "
                f"comparisons, budget is {budget}")

    config = SlotConfig(n1=n1, n2=n2, l=l, num_slots=num_slots, seed=int(seed),
                        slots=tuple(slots), deficits=tuple(deficits), budget=budget,
                        expurgate=expurgate)
    logger.debug("planned %d slots, fingerprint %s", num_slots, config.fingerprint())
    return config


@dataclass(frozen=True)
class SlotCodebooks:
    wiretap: Tuple[WiretapCodebook, WiretapCodebook]
    keyed: Optional[Tuple[MacCodebook, MacCodebook]]


def slot_codebooks(inputs: InputPair, config: SlotConfig, slot: int) -> SlotCodebooks:
    """
    Fresh codebooks of one slot, seeded by (root seed, slot, user, part).
    """
    widths = config.widths(slot)
    laws = (inputs.p1, inputs.p2)
    wiretap = tuple(
        build_wiretap(_generator(config.seed, slot, user, PART_WIRETAP), laws[user - 1],
                      config.n1, widths.wiretap[user - 1], widths.rand[user - 1], user=user,
                      budget=config.budget, expurgate=config.expurgate)
        for user in (1, 2))
    keyed = None
    if slot > 1:
        keyed = tuple(
            build_mac(_generator(config.seed, slot, user, PART_KEYED), laws[user - 1],
                      config.n2, widths.keyed[user - 1], user=user, budget=config.budget,
                      expurgate=config.expurgate)
            for user in (1, 2))
    return SlotCodebooks(wiretap=wiretap, keyed=keyed)


@dataclass(frozen=True)
class UserSlot:
    """
    One user's view of a slot. The keyed fields are None in slot 1.
    """
    part1: Message
    part2: Optional[Message]
    key: Optional[Message]
    padded: Optional[Message]
    codeword1: np.ndarray
    codeword2: Optional[np.ndarray]
    decoded_part1: Message
    decoded_padded: Optional[Message]
    bob_key: Optional[Message]
    decoded_part2: Optional[Message]

    @property
    def sent(self) -> Message:
        return self.part1 if self.part2 is None else self.part1.concat(self.part2)

    @property
    def decoded(self) -> Message:
        if self.decoded_part2 is None:
            return self.decoded_part1
        return self.decoded_part1.concat(self.decoded_part2)

    @property
    def channel_error(self) -> bool:
        return self.decoded_part1 != self.part1 or self.decoded_padded != self.padded

    def to_dict(self) -> dict:
        def bits(message):
            return None if message is None else message.bits

        def symbols(block):
            return None if block is None else [int(s) for s in block]

        return {
            "part1": bits(self.part1), "part2": bits(self.part2), "key": bits(self.key),
            "padded": bits(self.padded), "codeword1": symbols(self.codeword1),
            "codeword2": symbols(self.codeword2), "decoded_part1": bits(self.decoded_part1),
            "decoded_padded": bits(self.decoded_padded), "bob_key": bits(self.bob_key),
            "decoded_part2": bits(self.decoded_part2),
        }


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    users: Tuple[UserSlot, UserSlot]
    y1: np.ndarray
    z1: np.ndarray
    y2: Optional[np.ndarray]
    z2: Optional[np.ndarray]
    realized_rates: Tuple[float, float]

    @property
    def error(self) -> bool:
        return any(user.decoded != user.sent for user in self.users)

    @property
    def channel_error(self) -> bool:
        return any(user.channel_error for user in self.users)

    def to_dict(self) -> dict:
        def symbols(block):
            return None if block is None else [int(s) for s in block]

        return {
            "slot": self.slot, "error": self.error, "channel_error": self.channel_error,
            "realized_rates": list(self.realized_rates),
            "users": [user.to_dict() for user in self.users],
            "y1": symbols(self.y1), "z1": symbols(self.z1),
            "y2": symbols(self.y2), "z2": symbols(self.z2),
        }


@dataclass(frozen=True)
class ProtocolTrace:
    config: SlotConfig
    slots: Tuple[SlotRecord, ...]

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(),
                "fingerprint": self.config.fingerprint(),
                "slots": [record.to_dict() for record in self.slots]}


def realized_rates(config: SlotConfig, slot: int) -> Tuple[float, float]:
    widths = config.widths(slot)
    length = config.slot_length(slot)
    return widths.total(1) / length, widths.total(2) / length


def run(spec: ChannelSpec, inputs: InputPair, config: SlotConfig) -> ProtocolTrace:
    """
    Execute every slot of the scheme once. Deterministic given config.seed.
    """
    rng = _generator(config.seed, 0, 0, PART_TRAFFIC)
    previous_sent: List[Optional[Message]] = [None, None]
    previous_decoded: List[Optional[Message]] = [None, None]
    records = []

    for widths in config.slots:
        k = widths.slot
        books = slot_codebooks(inputs, config, k)
        part1 = [Message.random(widths.wiretap[i], rng) for i in (0, 1)]
        codeword1 = [encode_wiretap(books.wiretap[i], part1[i], rng) for i in (0, 1)]
        y1, z1 = sample_block(spec, codeword1[0], codeword1[1], rng)
        decoded1 = decode_ml(spec, y1, books.wiretap[0], books.wiretap[1], config.budget)
        decoded_part1 = [Message(decoded1[i], widths.wiretap[i]) for i in (0, 1)]

        part2 = key = padded = codeword2 = decoded_padded = bob_key = decoded_part2 = (None, None)
        y2 = z2 = None
        if books.keyed is not None:
            part2 = [Message.random(widths.keyed[i], rng) for i in (0, 1)]
            key = list(previous_sent)
            padded = [xor_key(part2[i], key[i]) for i in (0, 1)]
            codeword2 = [encode_mac(books.keyed[i], padded[i]) for i in (0, 1)]
            y2, z2 = sample_block(spec, codeword2[0], codeword2[1], rng)
            decoded2 = decode_ml(spec, y2, books.keyed[0], books.keyed[1], config.budget)
            decoded_padded = [Message(decoded2[i], widths.keyed[i]) for i in (0, 1)]
            bob_key = list(previous_decoded)
            decoded_part2 = [xor_key(decoded_padded[i], bob_key[i]) for i in (0, 1)]

        users = tuple(
            UserSlot(part1=part1[i], part2=part2[i], key=key[i], padded=padded[i],
                     codeword1=codeword1[i], codeword2=codeword2[i],
                     decoded_part1=decoded_part1[i], decoded_padded=decoded_padded[i],
                     bob_key=bob_key[i], decoded_part2=decoded_part2[i])
            for i in (0, 1))
        previous_sent = [user.sent for user in users]
        previous_decoded = [user.decoded for user in users]
        records.append(SlotRecord(slot=k, users=users, y1=y1, z1=z1, y2=y2, z2=z2,
                                  realized_rates=realized_rates(config, k)))

    return ProtocolTrace(config=config, slots=tuple(records))


@dataclass(frozen=True)
class SlotErrorRate:
    slot: int
    errors: int
    trials: int
    pe: float
    low: float
    high: float


def wilson_interval(errors: int, trials: int, confidence: float = CONFIDENCE):
    """
    Wilson score interval; a single trial yields the degenerate interval [p, p].
    """
    p = errors / trials
    if trials == 1:
        return p, p
    z = norm.ppf(1 - (1 - confidence) / 2)
    denominator = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denominator
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denominator
    low = 0.0 if errors == 0 else max(0.0, centre - half)
    high = 1.0 if errors == trials else min(1.0, centre + half)
    return low, high


def error_rate(traces: Sequence[ProtocolTrace]) -> List[SlotErrorRate]:
    """
    Per-slot fraction of trials in which Bob's message pair differs from the
    sent pair.

    Raises:
        EmptyInput: no traces.
        InvalidConfig: traces come from differently planned configurations.
    """
    if not traces:
        raise EmptyInput("error_rate needs at least one trace")
    layout = traces[0].config.fingerprint(include_seed=False)
    if any(trace.config.fingerprint(include_seed=False) != layout for trace in traces):
        raise InvalidConfig("traces were produced by different slot configurations")
    rates = []
    for index in range(traces[0].config.num_slots):
        errors = sum(trace.slots[index].error for trace in traces)
        low, high = wilson_interval(errors, len(traces))
        rates.append(SlotErrorRate(slot=index + 1, errors=errors, trials=len(traces),
                                   pe=errors / len(traces), low=low, high=high))
    return rates


def error_rate_vs_length(spec: ChannelSpec, inputs: InputPair, rates: Tuple[float, float],
                         lengths: Sequence[int], trials: int, seed: int,
                         budget: Optional[int] = None) -> List[Tuple[int, float]]:
    """
    Monte Carlo average error probability of one-shot joint MAC coding at fixed
    rates, for each block length. Every trial draws fresh codebooks.
    """
    if trials < 1:
        raise InvalidConfig(f"trials must be >= 1, got {trials}")
    budget = default_budget() if budget is None else budget
    results = []
    for n in lengths:
        widths = (max(1, realized_bits(n, rates[0])), max(1, realized_bits(n, rates[1])))
        errors = 0
        for trial in range(trials):
            rng = _generator(seed, n, trial)
            books = (build_mac(rng, inputs.p1, n, widths[0], user=1, budget=budget),
                     build_mac(rng, inputs.p2, n, widths[1], user=2, budget=budget))
            sent = [Message.random(widths[i], rng) for i in (0, 1)]
            y, _ = sample_block(spec, encode_mac(books[0], sent[0]),
                                encode_mac(books[1], sent[1]), rng)
            decoded = decode_ml(spec, y, books[0], books[1], budget)
            errors += decoded != (sent[0].value, sent[1].value)
        results.append((n, errors / trials))
        logger.debug("n=%d widths=%s Pe=%.4f", n, widths, errors / trials)
    return results
