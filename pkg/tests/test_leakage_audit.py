import itertools
import logging
import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings

from models.channel import InputPair, make_channel
from models.coding import MacCodebook, build_mac, build_wiretap, keyed_codebook
from models.errors import BudgetExceeded, InputError, InvalidConfig
from models.fixtures import bsc_eve_channel, copy_eve_channel, identity_channel, xor_eve_channel
from models.key_protocol import plan, slot_codebooks
from models.leakage_audit import (
    EXACT,
    MONTE_CARLO,
    LeakageReport,
    audit,
    exact_conditional_leakage,
    exact_multislot_leakage,
    exact_slot_leakage,
    mc_leakage,
    multislot_profile,
    plugin_mutual_information,
    recycled_key_bound,
    wiretap_leakage,
)
from strategies import random_channel, seeds

UNIFORM = InputPair.uniform(2, 2)
HALF = [0.5, 0.5]


def noisy_xor_eve_channel(flip=0.2):
    """Bob sees (X1, X2); Eve sees X1 xor X2 through BSC(flip)."""
    tensor = np.zeros((2, 2, 4, 2))
    for x1 in range(2):
        for x2 in range(2):
            tensor[x1, x2, 2 * x1 + x2, x1 ^ x2] = 1 - flip
            tensor[x1, x2, 2 * x1 + x2, 1 - (x1 ^ x2)] = flip
    return make_channel(tensor, name="noisy-xor-eve")


def _eve_sequences(spec, x1, x2):
    law = spec.eve_law()
    for z in itertools.product(range(spec.z_size), repeat=len(x1)):
        p = 1.0
        for a, b, c in zip(x1, x2, z):
            p *= law[a, b, c]
        if p > 0:
            yield z, p


def _mi_from_cells(cells):
    """I(T;Z) from a {(t, z): probability} table."""
    pt, pz = defaultdict(float), defaultdict(float)
    for (t, z), p in cells.items():
        pt[t] += p
        pz[z] += p
    return sum(p * math.log2(p / (pt[t] * pz[z])) for (t, z), p in cells.items() if p > 0)


def _brute_force_slot(spec, book1, book2):
    cells = defaultdict(float)
    words1, bins1 = book1.flat_words()
    words2, bins2 = book2.flat_words()
    weight = 1.0 / (len(words1) * len(words2))
    for i, j in itertools.product(range(len(words1)), range(len(words2))):
        for z, p in _eve_sequences(spec, words1[i], words2[j]):
            cells[((bins1[i], bins2[j]), z)] += weight * p
    return _mi_from_cells(cells)


def _brute_force_two_slots(spec, inputs, config, l):
    one = slot_codebooks(inputs, config, 1)
    two = slot_codebooks(inputs, config, 2)
    first, second = config.widths(1), config.widths(2)

    def values(widths):
        return list(itertools.product(range(1 << widths[0]), range(1 << widths[1])))

    choices = [values(first.wiretap), values(first.rand), values(second.wiretap),
               values(second.rand), values(second.keyed)]
    weight = 1.0 / np.prod([len(c) for c in choices])
    cells = defaultdict(float)
    for a, r, a2, r2, b in itertools.product(*choices):
        pads = [b[i] ^ (a[i] >> (first.total(i + 1) - second.keyed[i])) for i in (0, 1)]
        x_first = [one.wiretap[i].words[a[i], r[i]] for i in (0, 1)]
        x_wiretap = [two.wiretap[i].words[a2[i], r2[i]] for i in (0, 1)]
        x_keyed = [two.keyed[i].words[pads[i]] for i in (0, 1)]
        full = tuple((a2[i] << second.keyed[i]) | b[i] for i in (0, 1))
        target = a if l == 1 else full
        for z1, p1 in _eve_sequences(spec, *x_first):
            for z2, p2 in _eve_sequences(spec, *x_wiretap):
                for z3, p3 in _eve_sequences(spec, *x_keyed):
                    cells[(target, z1 + z2 + z3)] += weight * p1 * p2 * p3
    return _mi_from_cells(cells)


def _books(seed, n=2, msg_bits=1, rand_bits=1):
    rng = np.random.default_rng(seed)
    return (build_wiretap(rng, HALF, n, msg_bits, rand_bits, user=1),
            build_wiretap(rng, HALF, n, msg_bits, rand_bits, user=2))


def test_constant_eve_learns_nothing():
    report = exact_slot_leakage(identity_channel(), _books(1))
    assert report.value == pytest.approx(0.0, abs=1e-12)
    assert report.method == EXACT
    assert report.entropy_bound == pytest.approx(2.0)


def test_noiseless_eve_reads_an_unbinned_message():
    single = MacCodebook(1, 1, 1, np.array([[0], [1]]))
    silent = MacCodebook(2, 1, 0, np.array([[0]]))
    report = exact_slot_leakage(copy_eve_channel(), (single, silent))
    assert report.value == pytest.approx(1.0, abs=1e-12)
    assert report.value == pytest.approx(report.entropy_bound, abs=1e-12)


@given(seed=seeds)
@settings(max_examples=20, deadline=None)
def test_slot_leakage_matches_full_enumeration(seed):
    spec = random_channel(seed, sizes=(2, 2, 2, 3))
    books = _books(seed)
    assert exact_slot_leakage(spec, books).value == pytest.approx(
        _brute_force_slot(spec, *books), abs=1e-9)


def test_slot_leakage_budget():
    with pytest.raises(BudgetExceeded):
        exact_slot_leakage(bsc_eve_channel(), _books(0, n=4), budget=100)


def test_keyed_part_with_fresh_key_leaks_nothing():
    rng = np.random.default_rng(17)
    mac1 = build_mac(rng, HALF, n2=3, msg_bits=2, user=1)
    mac2 = build_mac(rng, HALF, n2=3, msg_bits=1, user=2)
    padded = keyed_codebook(mac1)
    report = exact_conditional_leakage(copy_eve_channel(), (padded, mac2), user=1)
    assert report.value == pytest.approx(0.0, abs=1e-12)
    assert report.size <= 2 ** 16
    other = exact_conditional_leakage(copy_eve_channel(), (mac1, keyed_codebook(mac2)), user=2)
    assert other.value == pytest.approx(0.0, abs=1e-12)


def test_unpadded_keyed_part_does_leak():
    rng = np.random.default_rng(17)
    mac1 = build_mac(rng, HALF, n2=3, msg_bits=2, user=1, expurgate=True)
    mac2 = build_mac(rng, HALF, n2=3, msg_bits=1, user=2)
    report = exact_conditional_leakage(copy_eve_channel(), (mac1, mac2), user=1)
    assert report.value == pytest.approx(2.0, abs=1e-9)


def test_conditional_leakage_with_constant_eve():
    report = exact_conditional_leakage(identity_channel(), _books(3), user=2)
    assert report.value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InputError):
        exact_conditional_leakage(identity_channel(), _books(3), user=3)


@given(seed=seeds)
@settings(max_examples=50, deadline=None)
def test_joint_leakage_bounded_by_conditional_leakages(seed):
    spec = random_channel(seed, sizes=(2, 2, 2, 4))
    books = _books(seed)
    joint = exact_slot_leakage(spec, books).value
    bound = (exact_conditional_leakage(spec, books, user=1).value
             + exact_conditional_leakage(spec, books, user=2).value)
    assert joint <= bound + 1e-9


def test_first_slot_of_multislot_audit_is_the_slot_leakage():
    spec = bsc_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=4, max_width=1)
    report = exact_multislot_leakage(spec, UNIFORM, config, l=1, k=1)
    books = slot_codebooks(UNIFORM, config, 1)
    assert report.value == pytest.approx(exact_slot_leakage(spec, books.wiretap).value, abs=1e-9)
    assert report.value > 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("l", [1, 2])
def test_two_slot_leakage_matches_full_enumeration(seed, l):
    spec = noisy_xor_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=seed, max_width=1)
    report = exact_multislot_leakage(spec, UNIFORM, config, l=l, k=2)
    assert report.value == pytest.approx(_brute_force_two_slots(spec, UNIFORM, config, l),
                                         abs=1e-9)


@pytest.mark.parametrize("spec,slots", [
    (xor_eve_channel(), 3),
    (noisy_xor_eve_channel(), 3),
    (bsc_eve_channel(), 2),
])
def test_multislot_leakage_is_monotone_and_bounded(spec, slots):
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=slots, seed=8, max_width=1)
    for l in range(1, slots + 1):
        values, entropy_bound, peak = multislot_profile(spec, UNIFORM, config, l, slots)
        assert peak <= 2 ** 24
        assert all(later >= earlier - 1e-9 for earlier, later in zip(values, values[1:]))
        assert all(0.0 <= v <= entropy_bound + 1e-9 for v in values)
        bound = recycled_key_bound(spec, UNIFORM, config, l)
        expected_bound = wiretap_leakage(spec, UNIFORM, config, l)
        if l > 1:
            expected_bound += wiretap_leakage(spec, UNIFORM, config, l - 1)
        assert bound == pytest.approx(expected_bound, abs=1e-12)
        assert max(values) <= bound + 1e-9


def test_multislot_leakage_vanishes_for_constant_eve():
    spec = identity_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=3, seed=8, max_width=1)
    for l in (1, 2, 3):
        values, _, _ = multislot_profile(spec, UNIFORM, config, l, 3)
        assert values == pytest.approx([0.0] * len(values), abs=1e-12)


def test_multislot_rejects_bad_slot_pairs():
    spec = identity_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=8, max_width=1)
    with pytest.raises(InvalidConfig):
        exact_multislot_leakage(spec, UNIFORM, config, l=2, k=1)
    with pytest.raises(InvalidConfig):
        exact_multislot_leakage(spec, UNIFORM, config, l=1, k=3)


def test_plugin_estimator_on_known_samples():
    targets = np.array([0, 0, 1, 1] * 250)
    plugin, correction = plugin_mutual_information(targets, targets)
    assert plugin == pytest.approx(1.0)
    assert correction == pytest.approx(1 / (2 * 1000 * math.log(2)))
    plugin, correction = plugin_mutual_information(targets, np.zeros(1000, dtype=int))
    assert plugin == pytest.approx(0.0, abs=1e-12)
    assert correction == 0.0


def test_monte_carlo_agrees_with_exact_slot_leakage():
    spec = bsc_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=1, seed=6, max_width=1)
    exact = exact_multislot_leakage(spec, UNIFORM, config, l=1, k=1).value
    estimate = mc_leakage(spec, UNIFORM, config, samples=100_000, seed=2024)
    assert estimate.method == MONTE_CARLO
    assert estimate.spread > 0
    assert abs(estimate.value - exact) <= 3 * estimate.spread + 1e-12


def test_monte_carlo_band_tightens_with_more_samples():
    spec = bsc_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=1, seed=6, max_width=1)
    exact = exact_multislot_leakage(spec, UNIFORM, config, l=1, k=1).value
    estimates = [mc_leakage(spec, UNIFORM, config, samples=samples, seed=2024)
                 for samples in (1_000, 10_000, 100_000)]
    spreads = [estimate.spread for estimate in estimates]
    assert spreads[0] > spreads[1] > spreads[2] > 0
    assert spreads[2] < spreads[0] / 5
    assert abs(estimates[-1].value - exact) <= 3 * spreads[-1] + 1e-12


def test_monte_carlo_agrees_with_exact_multislot_leakage():
    spec = noisy_xor_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=6, max_width=1)
    exact = exact_multislot_leakage(spec, UNIFORM, config, l=1, k=2).value
    estimate = mc_leakage(spec, UNIFORM, config, samples=100_000, seed=99, l=1, k=2)
    assert abs(estimate.value - exact) <= 3 * estimate.spread + 1e-12


def test_monte_carlo_is_reproducible_and_quiet_for_constant_eve():
    spec = identity_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=6, max_width=1)
    first = mc_leakage(spec, UNIFORM, config, samples=2000, seed=5, l=1, k=2)
    second = mc_leakage(spec, UNIFORM, config, samples=2000, seed=5, l=1, k=2)
    assert first == second
    assert first.value <= abs(first.bias_correction) + 1e-12
    with pytest.raises(InvalidConfig):
        mc_leakage(spec, UNIFORM, config, samples=999, seed=5)


def test_audit_of_constant_eve_is_all_zero():
    spec = identity_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=3, seed=1, max_width=1)
    reports = audit(spec, UNIFORM, config)
    assert [(r.l, r.k) for r in reports] == [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
    assert all(r.value == pytest.approx(0.0, abs=1e-12) for r in reports)
    assert all(r.method == EXACT for r in reports)


def test_audit_matches_cell_by_cell_values():
    spec = noisy_xor_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=3, max_width=1)
    for report in audit(spec, UNIFORM, config):
        single = exact_multislot_leakage(spec, UNIFORM, config, report.l, report.k)
        assert report.value == pytest.approx(single.value, abs=1e-12)
        assert report.bound == pytest.approx(single.bound, abs=1e-12)
        assert report.within_bound
        assert report.epsilon_hat == pytest.approx(report.value / 4)
        assert report.leakage_rate == pytest.approx(
            report.value / (2 + 4 * (report.k - 1)))
        assert report.fingerprint == config.fingerprint()


def test_audit_falls_back_to_monte_carlo(caplog):
    spec = noisy_xor_eve_channel()
    config = plan(spec, UNIFORM, n1=2, l=1, num_slots=2, seed=3, max_width=1)
    with caplog.at_level(logging.WARNING):
        reports = audit(spec, UNIFORM, config, budget=100, samples=2000)
    assert [(r.l, r.k) for r in reports] == [(1, 1), (1, 2), (2, 2)]
    assert {r.method for r in reports} == {MONTE_CARLO}
    assert all(r.bound is None and r.size == 2000 for r in reports)
    assert "falling back to Monte Carlo" in caplog.text


def test_report_rejects_values_above_message_entropy():
    with pytest.raises(InputError):
        LeakageReport(quantity="I", value=1.5, method=EXACT, size=4, fingerprint="",
                      entropy_bound=1.0, block_length=2, n1=2)
    with pytest.raises(InputError):
        LeakageReport(quantity="I", value=0.5, method="guess", size=4, fingerprint="",
                      entropy_bound=1.0, block_length=2, n1=2)
