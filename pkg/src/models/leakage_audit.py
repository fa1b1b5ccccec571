"""
Secrecy measurement for the key-recycling scheme.

Exact functions enumerate messages, bin randomization and Eve's outputs and
return mutual informations through info_measures; Bob's outputs never enter
a leakage quantity and are summed out up front. mc_leakage estimates the same
quantities from simulated Eve observations when enumeration is too large.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelSpec, InputPair, sample_eve
from .coding import Codebook, MacCodebook, WiretapCodebook
from .errors import BudgetExceeded, InputError, InvalidConfig, default_budget
from .info_measures import JointPmf, conditional_mutual_information, entropy, mutual_information
from .key_protocol import SlotConfig, slot_codebooks

logger = logging.getLogger(__name__)

EXACT = "exact"
MONTE_CARLO = "monte_carlo"
LEAKAGE_TOL = 1e-9
MIN_SAMPLES = 1000
JACKKNIFE_GROUPS = 20


@dataclass(frozen=True)
class LeakageReport:
    """
    One leakage value in bits, with how it was obtained.

    `bound` is the recycled-key bound for multi-slot values: the wiretap
    leakage of slot l plus that of every earlier slot whose message bits were
    recycled as key material into slot l.
    """
    quantity: str
    value: float
    method: str
    size: int
    fingerprint: str
    entropy_bound: float
    block_length: int
    n1: int
    l: Optional[int] = None
    k: Optional[int] = None
    plugin: Optional[float] = None
    bias_correction: Optional[float] = None
    spread: Optional[float] = None
    bound: Optional[float] = None

    def __post_init__(self):
        if self.method not in (EXACT, MONTE_CARLO):
            raise InputError(f"unknown leakage method {self.method!r}")
        if self.size < 1:
            raise InputError("a leakage report must record its enumeration size or sample count")
        if not -LEAKAGE_TOL <= self.value <= self.entropy_bound + LEAKAGE_TOL:
            raise InputError(
                f"{self.quantity} = {self.value} outside [0, H(W) = {self.entropy_bound}]")

    @property
    def epsilon_hat(self) -> float:
        return self.value / (2 * self.n1)

    @property
    def leakage_rate(self) -> float:
        return self.value / self.block_length

    @property
    def within_bound(self) -> Optional[bool]:
        if self.bound is None:
            return None
        return self.value <= self.bound + LEAKAGE_TOL


def _bins(book: Codebook) -> Tuple[int, int]:
    if isinstance(book, WiretapCodebook):
        return book.num_bins, book.bin_size
    return book.num_messages, 1


def eve_table(spec: ChannelSpec, words1: np.ndarray, words2: np.ndarray,
              budget: int) -> np.ndarray:
    """
    p(z^n | codeword pair) for every pair, shape (len(words1), len(words2), |Z|^n),
    with z^n flattened row-major.
    """
    count1, n = words1.shape
    count2 = words2.shape[0]
    size = count1 * count2 * spec.z_size ** n
    if size > budget:
        raise BudgetExceeded(f"Eve's table needs {size} joint states, budget is {budget}")
    law = spec.eve_law()
    table = np.ones((count1, count2, 1))
    for t in range(n):
        step = law[words1[:, None, t], words2[None, :, t]]
        table = (table[:, :, :, None] * step[:, :, None, :]).reshape(count1, count2, -1)
    return table


def _slot_joint(spec: ChannelSpec, book1: Codebook, book2: Codebook, budget: int) -> np.ndarray:
    """(W1, W2, Z^n) pmf under uniform messages and uniform bin members."""
    words1, _ = book1.flat_words()
    words2, _ = book2.flat_words()
    table = eve_table(spec, words1, words2, budget)
    m1, r1 = _bins(book1)
    m2, r2 = _bins(book2)
    joint = table.reshape(m1, r1, m2, r2, -1).sum(axis=3).sum(axis=1)
    return joint / (m1 * r1 * m2 * r2)


def exact_slot_leakage(spec: ChannelSpec, books: Tuple[Codebook, Codebook],
                       budget: Optional[int] = None, fingerprint: str = "",
                       n1: Optional[int] = None) -> LeakageReport:
    """
    I(W1, W2; Z^n) for one block sent with the given codebooks.

    Raises:
        BudgetExceeded: |W|·|randomization|·|Z|^n exceeds the budget.
    """
    budget = default_budget() if budget is None else budget
    book1, book2 = books
    joint = _slot_joint(spec, book1, book2, budget)
    pmf = JointPmf(("w1", "w2", "z"), joint)
    n = book1.block_length
    return LeakageReport(
        quantity="I(W1,W2; Z^n)",
        value=mutual_information(pmf, ("w1", "w2"), "z"),
        method=EXACT,
        size=book1.flat_words()[0].shape[0] * book2.flat_words()[0].shape[0] * spec.z_size ** n,
        fingerprint=fingerprint,
        entropy_bound=entropy(pmf, ("w1", "w2")),
        block_length=n,
        n1=n if n1 is None else n1,
    )


def exact_conditional_leakage(spec: ChannelSpec, books: Tuple[Codebook, Codebook], user: int,
                              budget: Optional[int] = None, fingerprint: str = "",
                              n1: Optional[int] = None) -> LeakageReport:
    """
    I(W_i; Z^n | X_j^n) where j is the other user. Conditioning is on the
    codeword value, so colliding codewords are merged.
    """
    if user not in (1, 2):
        raise InputError(f"user must be 1 or 2, got {user}")
    budget = default_budget() if budget is None else budget
    own, other = (books[0], books[1]) if user == 1 else (books[1], books[0])
    own_words, _ = own.flat_words()
    other_words, _ = other.flat_words()
    table = eve_table(spec, own_words, other_words, budget)
    messages, per_bin = _bins(own)
    total = own_words.shape[0] * other_words.shape[0]
    by_message = table.reshape(messages, per_bin, other_words.shape[0], -1).sum(axis=1) / total

    _, codeword_ids = np.unique(other_words, axis=0, return_inverse=True)
    codeword_ids = np.asarray(codeword_ids).reshape(-1)
    one_hot = np.zeros((other_words.shape[0], int(codeword_ids.max()) + 1))
    one_hot[np.arange(other_words.shape[0]), codeword_ids] = 1.0
    joint = np.einsum("mbz,bu->muz", by_message, one_hot)

    pmf = JointPmf(("w", "x", "z"), joint)
    n = own.block_length
    return LeakageReport(
        quantity=f"I(W{user}; Z^n | X{3 - user}^n)",
        value=conditional_mutual_information(pmf, "w", "z", "x"),
        method=EXACT,
        size=total * spec.z_size ** n,
        fingerprint=fingerprint,
        entropy_bound=entropy(pmf, "w"),
        block_length=n,
        n1=n if n1 is None else n1,
    )


def _observed_length(config: SlotConfig, k: int) -> int:
    return sum(config.slot_length(s) for s in range(1, k + 1))


def _key_width(config: SlotConfig, slot: int) -> Tuple[int, int]:
    """Key bits slot `slot` takes from the previous message, per user."""
    if slot > config.num_slots:
        return 0, 0
    return config.widths(slot).keyed


def _slot_kernel(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, slot: int,
                 budget: int) -> np.ndarray:
    """
    Slot transition K[key, full, next_key, z_s]: probability that the slot
    sends full-message pair `full`, hands `next_key` to the following slot
    and shows Eve z_s, given the current key pair.
    """
    widths = config.widths(slot)
    books = slot_codebooks(inputs, config, slot)
    wiretap = _slot_joint(spec, books.wiretap[0], books.wiretap[1], budget)   # (A1, A2, Zw)
    keyed_bits = widths.keyed
    if books.keyed is None:
        keyed = np.ones((1, 1, 1))
    else:
        keyed = eve_table(spec, books.keyed[0].words, books.keyed[1].words, budget)
    keyed = keyed / (keyed.shape[0] * keyed.shape[1])

    key_counts = (1 << keyed_bits[0], 1 << keyed_bits[1]) if slot > 1 else (1, 1)
    full_bits = (widths.total(1), widths.total(2))
    next_bits = _key_width(config, slot + 1)
    next_counts = (1 << next_bits[0], 1 << next_bits[1])
    zw, zk = wiretap.shape[2], keyed.shape[2]

    size = (key_counts[0] * key_counts[1] * (1 << sum(full_bits)) * next_counts[0]
            * next_counts[1] * zw * zk)
    if size > budget:
        raise BudgetExceeded(f"slot {slot} kernel needs {size} joint states, budget is {budget}")

    a1, a2 = wiretap.shape[0], wiretap.shape[1]
    b1, b2 = keyed.shape[0], keyed.shape[1]
    shifts = (full_bits[0] - next_bits[0], full_bits[1] - next_bits[1])
    full1 = np.arange(1 << full_bits[0])
    full2 = np.arange(1 << full_bits[1])
    next_of1 = np.zeros((full1.size, next_counts[0]))
    next_of1[full1, full1 >> shifts[0]] = 1.0
    next_of2 = np.zeros((full2.size, next_counts[1]))
    next_of2[full2, full2 >> shifts[1]] = 1.0

    kernel = np.zeros((key_counts[0], key_counts[1], full1.size, full2.size,
                       next_counts[0], next_counts[1], zw * zk))
    for key1 in range(key_counts[0]):
        for key2 in range(key_counts[1]):
            # part-2 message b is sent as b XOR key
            padded = keyed[np.arange(b1) ^ key1][:, np.arange(b2) ^ key2]
            block = (wiretap[:, None, :, None, :, None] * padded[None, :, None, :, None, :])
            block = block.reshape(a1 * b1, a2 * b2, zw * zk)
            kernel[key1, key2] = np.einsum("fgz,fp,gq->fgpqz", block, next_of1, next_of2)
    return kernel.reshape(key_counts[0] * key_counts[1], full1.size * full2.size,
                          next_counts[0] * next_counts[1], zw * zk)


def multislot_profile(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, l: int,
                      k_max: int, budget: Optional[int] = None) -> Tuple[List[float], float, int]:
    """
    Exact I(W_l; Z_1..Z_k) for k = l..k_max in one forward pass.

    Returns (values, H(W_l), peak number of joint states held).
    """
    if not 1 <= l <= k_max <= config.num_slots:
        raise InvalidConfig(f"need 1 <= l <= k <= {config.num_slots}, got l={l}, k={k_max}")
    budget = config.budget if budget is None else budget
    state = np.ones((1, 1, 1))      # (target, key, Eve history)
    values = []
    target_entropy = 0.0
    peak = 1
    for slot in range(1, k_max + 1):
        kernel = _slot_kernel(spec, inputs, config, slot, budget)
        keys, fulls, next_keys, outputs = kernel.shape
        targets = fulls if slot == l else state.shape[0]
        size = targets * next_keys * state.shape[2] * outputs
        if size > budget:
            raise BudgetExceeded(
                f"slot {slot}: multi-slot enumeration needs {size} joint states, "
                f"budget is {budget}")
        if slot == l:
            step = np.einsum("kh,kfnz->fnhz", state[0], kernel)
        else:
            step = np.einsum("tkh,knz->tnhz", state, kernel.sum(axis=1))
        state = step.reshape(targets, next_keys, -1)
        peak = max(peak, state.size)
        if slot >= l:
            pmf = JointPmf(("w", "z"), state.sum(axis=1))
            values.append(mutual_information(pmf, "w", "z"))
            target_entropy = entropy(pmf, "w")
    logger.debug("multi-slot profile l=%d up to k=%d peaked at %d states", l, k_max, peak)
    return values, target_entropy, peak


def wiretap_leakage(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, slot: int,
                    budget: Optional[int] = None) -> float:
    """I(A_s^(1), A_s^(2); Z_{s,1}) for the wiretap part of one slot."""
    books = slot_codebooks(inputs, config, slot)
    budget = config.budget if budget is None else budget
    return exact_slot_leakage(spec, books.wiretap, budget).value


def recycled_key_bound(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, l: int,
                       budget: Optional[int] = None) -> float:
    """
    Wiretap leakage of slot l plus the leakage of the chain of earlier
    messages that fed slot l's pad. A slot's pad reaches past the previous
    wiretap part only when its keyed width exceeds that wiretap width.
    """
    bound = wiretap_leakage(spec, inputs, config, l, budget)
    slot = l
    while slot > 1 and max(config.widths(slot).keyed) > 0:
        slot -= 1
        bound += wiretap_leakage(spec, inputs, config, slot, budget)
        keyed = config.widths(slot + 1).keyed
        wiretap = config.widths(slot).wiretap
        if keyed[0] <= wiretap[0] and keyed[1] <= wiretap[1]:
            break
    return bound


def exact_multislot_leakage(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, l: int,
                            k: int, budget: Optional[int] = None) -> LeakageReport:
    """
    Exact I(W_l^(1), W_l^(2); Z_1, ..., Z_k), marginalizing the full
    multi-slot law in which keys couple consecutive slots.

    Raises:
        BudgetExceeded: the enumeration would hold more joint states than the budget.
    """
    values, target_entropy, peak = multislot_profile(spec, inputs, config, l, k, budget)
    return LeakageReport(
        quantity=f"I(W_{l}; Z_1..Z_{k})",
        value=values[-1],
        method=EXACT,
        size=peak,
        fingerprint=config.fingerprint(),
        entropy_bound=target_entropy,
        block_length=_observed_length(config, k),
        n1=config.n1,
        l=l,
        k=k,
        bound=recycled_key_bound(spec, inputs, config, l, budget),
    )


def _entropy_from_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def plugin_mutual_information(targets: np.ndarray, observations: np.ndarray) -> Tuple[float, float]:
    """
    Plug-in I(T;O) from paired integer codes and its Miller-Madow correction,
    both in bits.
    """
    samples = targets.size
    _, t_counts = np.unique(targets, return_counts=True)
    _, o_counts = np.unique(observations, return_counts=True)
    pairs = np.stack([targets, observations], axis=1)
    _, joint_counts = np.unique(pairs, axis=0, return_counts=True)
    plugin = (_entropy_from_counts(t_counts) + _entropy_from_counts(o_counts)
              - _entropy_from_counts(joint_counts))
    correction = ((t_counts.size - 1) + (o_counts.size - 1) - (joint_counts.size - 1)) \
        / (2 * samples * math.log(2))
    return plugin, correction


def sample_eve_view(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, l: int, k: int,
                    samples: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Independent protocol runs reduced to (code of W_l pair, code of Z_1..Z_k).
    """
    keys = [np.zeros(samples, dtype=np.int64), np.zeros(samples, dtype=np.int64)]
    key_widths = [0, 0]
    target = None
    observed = []
    for slot in range(1, k + 1):
        widths = config.widths(slot)
        books = slot_codebooks(inputs, config, slot)
        codewords1, codewords2, fulls = [], [], []
        for i in (0, 1):
            book = books.wiretap[i]
            a = rng.integers(0, book.num_bins, samples)
            r = rng.integers(0, book.bin_size, samples)
            codewords1.append(book.words[a, r])
            b = np.zeros(samples, dtype=np.int64)
            if books.keyed is not None:
                b = rng.integers(0, books.keyed[i].num_messages, samples)
                pad = keys[i] >> (key_widths[i] - widths.keyed[i])
                codewords2.append(books.keyed[i].words[b ^ pad])
            fulls.append((a << widths.keyed[i]) | b)
        observed.append(sample_eve(spec, codewords1[0], codewords1[1], rng))
        if codewords2:
            observed.append(sample_eve(spec, codewords2[0], codewords2[1], rng))
        if slot == l:
            target = fulls[0] * (1 << widths.total(2)) + fulls[1]
        keys = fulls
        key_widths = [widths.total(1), widths.total(2)]
    history = np.concatenate(observed, axis=1)
    _, codes = np.unique(history, axis=0, return_inverse=True)
    return target, np.asarray(codes).reshape(-1)


def mc_leakage(spec: ChannelSpec, inputs: InputPair, config: SlotConfig, samples: int,
               seed: int, l: int = 1, k: int = 1) -> LeakageReport:
    """
    Monte Carlo estimate of I(W_l; Z_1..Z_k) from `samples` simulated runs.

    The reported value is the Miller-Madow corrected plug-in estimate clipped
    to [0, H(W_l)]; `spread` is a grouped jackknife standard error.
    """
    if samples < MIN_SAMPLES:
        raise InvalidConfig(f"mc_leakage needs at least {MIN_SAMPLES} samples, got {samples}")
    if not 1 <= l <= k <= config.num_slots:
        raise InvalidConfig(f"need 1 <= l <= k <= {config.num_slots}, got l={l}, k={k}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    targets, observations = sample_eve_view(spec, inputs, config, l, k, samples, rng)

    plugin, correction = plugin_mutual_information(targets, observations)
    groups = np.array_split(np.arange(samples), JACKKNIFE_GROUPS)
    leave_out = []
    for group in groups:
        mask = np.ones(samples, dtype=bool)
        mask[group] = False
        held_plugin, held_correction = plugin_mutual_information(targets[mask], observations[mask])
        leave_out.append(held_plugin + held_correction)
    leave_out = np.array(leave_out)
    spread = math.sqrt((len(groups) - 1) / len(groups)
                       * float(((leave_out - leave_out.mean()) ** 2).sum()))

    widths = config.widths(l)
    target_entropy = float(widths.total(1) + widths.total(2))
    value = min(max(plugin + correction, 0.0), target_entropy)
    return LeakageReport(
        quantity=f"I(W_{l}; Z_1..Z_{k})",
        value=value,
        method=MONTE_CARLO,
        size=samples,
        fingerprint=config.fingerprint(),
        entropy_bound=target_entropy,
        block_length=_observed_length(config, k),
        n1=config.n1,
        l=l,
        k=k,
        plugin=plugin,
        bias_correction=correction,
        spread=spread,
    )


def audit(spec: ChannelSpec, inputs: InputPair, config: SlotConfig,
          budget: Optional[int] = None, samples: int = 100_000,
          seed: Optional[int] = None) -> List[LeakageReport]:
    """
    I(W_l; Z_1..Z_k) for every l <= k <= K, exact where the enumeration fits
    the budget and Monte Carlo otherwise.
    """
    budget = config.budget if budget is None else budget
    seed = config.seed if seed is None else seed
    reports = []
    for l in range(1, config.num_slots + 1):
        try:
            values, target_entropy, peak = multislot_profile(
                spec, inputs, config, l, config.num_slots, budget)
        except BudgetExceeded as exc:
            logger.warning("exact enumeration for l=%d exceeds the budget (%s); "
                           "falling back to Monte Carlo with %d samples", l, exc, samples)
            reports.extend(mc_leakage(spec, inputs, config, samples, seed, l=l, k=k)
                           for k in range(l, config.num_slots + 1))
            continue
        bound = recycled_key_bound(spec, inputs, config, l, budget)
        for k, value in zip(range(l, config.num_slots + 1), values):
            reports.append(LeakageReport(
                quantity=f"I(W_{l}; Z_1..Z_{k})", value=value, method=EXACT, size=peak,
                fingerprint=config.fingerprint(), entropy_bound=target_entropy,
                block_length=_observed_length(config, k), n1=config.n1, l=l, k=k,
                bound=bound))
    return reports


def report_rows(reports: Sequence[LeakageReport]) -> List[dict]:
    """Flat rows for the leakage CSV."""
    return [{
        "l": report.l,
        "k": report.k,
        "bits": report.value,
        "method": report.method,
        "enumeration_or_samples": report.size,
        "epsilon_hat": report.epsilon_hat,
        "leakage_rate": report.leakage_rate,
        "entropy_bound": report.entropy_bound,
        "bound": report.bound,
        "spread": report.spread,
    } for report in reports]
