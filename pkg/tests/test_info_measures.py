import numpy as np
import pytest
from hypothesis import given, settings

from models.channel import InputPair
from models.errors import NonStochastic, OverlappingAxes, UnknownAxis
from models.fixtures import bsc_eve_channel, identity_channel
from models.info_measures import (
    JointPmf,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from strategies import random_channel, random_inputs, seeds

H_QUARTER = 0.8112781244591328


def _bits(p, q):
    """Joint pmf of two bits with P(A=1) = p and P(A != B) = q."""
    mass = np.array([[(1 - p) * (1 - q), (1 - p) * q],
                     [p * q, p * (1 - q)]])
    return JointPmf(("a", "b"), mass)


def test_entropy_examples():
    assert entropy(_bits(0.5, 0.5), "a") == pytest.approx(1.0, abs=1e-12)
    assert entropy(_bits(0.0, 0.0), "a") == 0.0
    assert entropy(_bits(0.25, 0.0), "a") == pytest.approx(H_QUARTER, abs=1e-6)


def test_mutual_information_examples():
    assert mutual_information(_bits(0.5, 0.5), "a", "b") == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(_bits(0.5, 0.0), "a", "b") == pytest.approx(1.0, abs=1e-12)
    assert mutual_information(_bits(0.5, 0.25), "a", "b") == pytest.approx(0.188722, abs=1e-6)


def test_bsc_eve_leaks_one_minus_h_per_user():
    pmf = JointPmf.from_channel(bsc_eve_channel(), InputPair.uniform(2, 2))
    assert mutual_information(pmf, "x1", "z") == pytest.approx(1 - H_QUARTER, abs=1e-9)
    assert mutual_information(pmf, "x2", "z") == pytest.approx(1 - H_QUARTER, abs=1e-9)


def test_identity_channel_conditional_information():
    pmf = JointPmf.from_channel(identity_channel(), InputPair.uniform(2, 2))
    assert conditional_mutual_information(pmf, "x1", "y", "x2") == pytest.approx(1.0)
    assert mutual_information(pmf, ("x1", "x2"), "y") == pytest.approx(2.0)
    assert mutual_information(pmf, ("x1", "x2"), "z") == pytest.approx(0.0, abs=1e-12)


def test_conditioning_on_independent_axis_changes_nothing():
    mass = np.einsum("ab,c->abc", _bits(0.3, 0.2).mass, np.array([0.4, 0.6]))
    pmf = JointPmf(("a", "b", "c"), mass)
    assert conditional_mutual_information(pmf, "a", "b", "c") == pytest.approx(
        mutual_information(pmf, "a", "b"), abs=1e-12)


def test_deterministic_given_condition_is_zero():
    # a = b = c
    mass = np.zeros((2, 2, 2))
    mass[0, 0, 0] = mass[1, 1, 1] = 0.5
    pmf = JointPmf(("a", "b", "c"), mass)
    assert conditional_mutual_information(pmf, "a", "b", "c") == pytest.approx(0.0, abs=1e-12)


def test_marginal_keeps_pmf_axis_order():
    pmf = JointPmf(("a", "b"), [[0.1, 0.2], [0.3, 0.4]])
    assert np.allclose(pmf.marginal("b"), [0.4, 0.6])
    assert np.allclose(pmf.marginal(("b", "a")), pmf.mass)


def test_axis_errors():
    pmf = _bits(0.5, 0.1)
    with pytest.raises(UnknownAxis):
        entropy(pmf, "q")
    with pytest.raises(OverlappingAxes):
        mutual_information(pmf, ("a", "b"), "b")
    with pytest.raises(NonStochastic):
        JointPmf(("a",), [0.5, 0.6])


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_mass_is_rejected(bad):
    with pytest.raises(NonStochastic):
        JointPmf(("a",), [bad, 0.5])
    with pytest.raises(NonStochastic):
        JointPmf(("a", "b"), [[0.5, 0.5], [bad, 0.0]])


@given(seed=seeds)
@settings(max_examples=50, deadline=None)
def test_chain_rule_and_bounds(seed):
    pmf = JointPmf.from_channel(random_channel(seed), random_inputs(seed))
    joint = mutual_information(pmf, ("x1", "x2"), "y")
    chain = mutual_information(pmf, "x1", "y") + conditional_mutual_information(
        pmf, "x2", "y", "x1")
    assert joint == pytest.approx(chain, abs=1e-9)
    assert mutual_information(pmf, "y", "z") == pytest.approx(
        mutual_information(pmf, "z", "y"), abs=1e-12)
    for axes in ("x1", "z", ("x2", "y")):
        info = mutual_information(pmf, axes, "z" if axes != "z" else "y")
        assert -1e-9 <= info <= entropy(pmf, axes) + 1e-9
    # independent inputs
    assert mutual_information(pmf, "x1", "x2") == pytest.approx(0.0, abs=1e-9)


@given(seed=seeds)
@settings(max_examples=50, deadline=None)
def test_processing_bob_output_cannot_add_information(seed):
    pmf = JointPmf.from_channel(random_channel(seed), random_inputs(seed))
    kernel = np.random.default_rng(seed + 2).dirichlet(np.ones(3), size=pmf.size("y"))
    chained = JointPmf(("x1", "x2", "y", "w"),
                       pmf.marginal(("x1", "x2", "y"))[..., None] * kernel[None, None])
    for source in ("x1", "x2", ("x1", "x2")):
        assert mutual_information(chained, source, "w") <= (
            mutual_information(chained, source, "y") + 1e-10)
