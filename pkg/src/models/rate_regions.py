"""
Rate regions of the two-user wiretap MAC.

The secrecy pentagon subtracts Eve's per-user information from the ordinary
MAC pentagon; the slotted key-recycling scheme ramps from the former to the
latter. Pentagons are stored as their three caps and vertices are derived on
demand.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .channel import ChannelSpec, InputPair, simplex_grid
from .errors import InputError, InvalidSlot, NoPositiveSecrecyRate, WeightMismatch
from .info_measures import JointPmf, conditional_mutual_information, mutual_information

logger = logging.getLogger(__name__)

RATE_TOL = 1e-9
# slack applied before taking a ceiling, so 1/1 computed as 1.0000000002 stays 1
CEIL_TOL = 1e-9

RatePair = Tuple[float, float]


@dataclass(frozen=True)
class ChannelTerms:
    """
    The five mutual informations (bits per channel use) behind both pentagons.
    """
    i1_given_2: float   # I(X1;Y|X2)
    i2_given_1: float   # I(X2;Y|X1)
    i_sum: float        # I(X1,X2;Y)
    i1_eve: float       # I(X1;Z)
    i2_eve: float       # I(X2;Z)


@dataclass(frozen=True)
class RatePentagon:
    """
    {(r1, r2) >= 0 : r1 <= cap1, r2 <= cap2, r1 + r2 <= cap_sum}.
    """
    cap1: float
    cap2: float
    cap_sum: float

    def __post_init__(self):
        if min(self.cap1, self.cap2, self.cap_sum) < 0:
            raise InputError(f"pentagon caps must be nonnegative: {self}")
        if self.cap_sum > self.cap1 + self.cap2 + RATE_TOL:
            raise InputError(f"sum cap {self.cap_sum} exceeds cap1 + cap2 in {self}")

    def contains(self, r1: float, r2: float, tol: float = RATE_TOL) -> bool:
        return (r1 >= -tol and r2 >= -tol and r1 <= self.cap1 + tol
                and r2 <= self.cap2 + tol and r1 + r2 <= self.cap_sum + tol)

    def vertices(self) -> List[RatePair]:
        """
        Corner points in counter-clockwise order starting at the origin.
        """
        a = min(self.cap1, self.cap_sum)
        b = min(self.cap2, self.cap_sum)
        corners = [
            (0.0, 0.0),
            (a, 0.0),
            (a, min(self.cap2, self.cap_sum - a)),
            (min(self.cap1, self.cap_sum - b), b),
            (0.0, b),
        ]
        unique: List[RatePair] = []
        for corner in corners:
            corner = (float(corner[0]), float(corner[1]))
            if not any(abs(corner[0] - u[0]) <= RATE_TOL and abs(corner[1] - u[1]) <= RATE_TOL
                       for u in unique):
                unique.append(corner)
        return unique

    def dominates(self, other: "RatePentagon", tol: float = RATE_TOL) -> bool:
        return (self.cap1 + tol >= other.cap1 and self.cap2 + tol >= other.cap2
                and self.cap_sum + tol >= other.cap_sum)

    def operating_point(self) -> RatePair:
        """
        Per-user caps, scaled by a common factor when the sum cap binds.
        """
        return _scale_to_sum(self.cap1, self.cap2, self.cap_sum)


@dataclass(frozen=True)
class RateHull:
    """
    Convex set of rate pairs given by its vertices.
    """
    vertices: np.ndarray

    def contains(self, r1: float, r2: float, tol: float = RATE_TOL) -> bool:
        points = self.vertices
        count = points.shape[0]
        if count == 1:
            return bool(np.all(np.abs(points[0] - (r1, r2)) <= tol))
        # feasibility: convex weights over vertices reproducing (r1, r2) within tol
        a_eq = np.vstack([np.ones(count)])
        a_ub = np.vstack([points.T, -points.T])
        b_ub = np.array([r1 + tol, r2 + tol, -(r1 - tol), -(r2 - tol)])
        result = linprog(np.zeros(count), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                         bounds=[(0, None)] * count, method="highs")
        return bool(result.status == 0)


@dataclass(frozen=True)
class RampConstants:
    lambda1: int
    lambda2: int
    lam: int


@dataclass(frozen=True)
class SlotRate:
    """
    Rates of one slot. `keyed_bound` is min(k*secrecy_cap_i, mac_cap_i) per
    user before the sum cap is applied; `keyed` is the jointly clipped pair.
    """
    slot: int
    keyed_bound: RatePair
    keyed: RatePair
    keyed_sum: float
    overall: RatePair


@dataclass(frozen=True)
class RampSchedule:
    lambda1: int
    lambda2: int
    lam: int
    lambda_star: int
    l: int
    secrecy: RatePentagon
    mac: RatePentagon
    wiretap: RatePair
    per_slot: Tuple[SlotRate, ...]

    def slot(self, k: int) -> SlotRate:
        if k < 1 or k > len(self.per_slot):
            raise InvalidSlot(f"slot {k} outside 1..{len(self.per_slot)}")
        return self.per_slot[k - 1]


def _scale_to_sum(r1: float, r2: float, cap_sum: float) -> RatePair:
    total = r1 + r2
    if total > cap_sum and total > 0:
        factor = cap_sum / total
        return r1 * factor, r2 * factor
    return r1, r2


def channel_terms(spec: ChannelSpec, inputs: InputPair) -> ChannelTerms:
    pmf = JointPmf.from_channel(spec, inputs)
    return ChannelTerms(
        i1_given_2=conditional_mutual_information(pmf, "x1", "y", "x2"),
        i2_given_1=conditional_mutual_information(pmf, "x2", "y", "x1"),
        i_sum=mutual_information(pmf, ("x1", "x2"), "y"),
        i1_eve=mutual_information(pmf, "x1", "z"),
        i2_eve=mutual_information(pmf, "x2", "z"),
    )


def mac_pentagon(spec: ChannelSpec, inputs: InputPair) -> RatePentagon:
    """
    Ordinary MAC capacity pentagon for the fixed product input law.
    """
    terms = channel_terms(spec, inputs)
    return _mac_from_terms(terms)


def _mac_from_terms(terms: ChannelTerms) -> RatePentagon:
    cap_sum = min(terms.i_sum, terms.i1_given_2 + terms.i2_given_1)
    return RatePentagon(terms.i1_given_2, terms.i2_given_1, cap_sum)


def secrecy_pentagon(spec: ChannelSpec, inputs: InputPair) -> RatePentagon:
    """
    Achievable secrecy pentagon; negative bounds are clamped to zero.
    """
    return _secrecy_from_terms(channel_terms(spec, inputs))


def pentagons_from_terms(terms: ChannelTerms) -> Tuple[RatePentagon, RatePentagon]:
    """(secrecy pentagon, MAC pentagon) from precomputed channel terms."""
    return _secrecy_from_terms(terms), _mac_from_terms(terms)


def _secrecy_from_terms(terms: ChannelTerms) -> RatePentagon:
    cap1 = max(0.0, terms.i1_given_2 - terms.i1_eve)
    cap2 = max(0.0, terms.i2_given_1 - terms.i2_eve)
    cap_sum = max(0.0, min(cap1 + cap2, terms.i_sum - terms.i1_eve - terms.i2_eve))
    return RatePentagon(cap1, cap2, cap_sum)


def _ceil(x: float) -> int:
    return int(math.ceil(x - CEIL_TOL))


def _ramp_from_terms(terms: ChannelTerms) -> RampConstants:
    lambdas = []
    for user, (capacity, leak) in enumerate(
            ((terms.i1_given_2, terms.i1_eve), (terms.i2_given_1, terms.i2_eve)), start=1):
        denominator = capacity - leak
        if denominator <= RATE_TOL:
            raise NoPositiveSecrecyRate(
                f"user {user}: I(X;Y|X') - I(X;Z) = {denominator:.6g} <= 0, "
                "the key chain cannot bootstrap")
        lambdas.append(max(1, _ceil(capacity / denominator)))
    return RampConstants(lambdas[0], lambdas[1], max(lambdas) + 1)


def ramp_constants(spec: ChannelSpec, inputs: InputPair) -> RampConstants:
    """
    Slots needed by each user before its keyed rate reaches its MAC cap.

    Raises:
        NoPositiveSecrecyRate: some user has no positive wiretap rate.
    """
    return _ramp_from_terms(channel_terms(spec, inputs))


def slot_schedule(spec: ChannelSpec, inputs: InputPair, k_max: int, l: int = 1) -> RampSchedule:
    """
    Per-slot keyed-part rates of the ramp-up, plus overall slot rates for n2 = l*n1.
    """
    terms = channel_terms(spec, inputs)
    _ramp_from_terms(terms)
    return build_schedule(_secrecy_from_terms(terms), _mac_from_terms(terms), k_max, l)


def build_schedule(secrecy: RatePentagon, mac: RatePentagon, k_max: int,
                   l: int = 1) -> RampSchedule:
    """
    Ramp-up schedule from a secrecy pentagon and the MAC pentagon containing it.

    With positive secrecy caps, ceil(mac_cap_i / secrecy_cap_i) is exactly
    ceil(I(Xi;Y|Xj) / (I(Xi;Y|Xj) - I(Xi;Z))).
    """
    if k_max < 1:
        raise InvalidSlot(f"k_max must be >= 1, got {k_max}")
    if l < 1:
        raise InputError(f"l must be a positive integer, got {l}")
    if min(secrecy.cap1, secrecy.cap2) <= RATE_TOL:
        raise NoPositiveSecrecyRate(
            f"secrecy caps ({secrecy.cap1:.6g}, {secrecy.cap2:.6g}) must both be positive")
    lambda1 = max(1, _ceil(mac.cap1 / secrecy.cap1))
    lambda2 = max(1, _ceil(mac.cap2 / secrecy.cap2))
    if secrecy.cap_sum <= RATE_TOL:
        raise NoPositiveSecrecyRate("secrecy sum cap is zero; the sum rate cannot ramp up")

    wiretap = secrecy.operating_point()
    saturated = mac.operating_point()

    def keyed_at(k: int):
        bound = (min(k * secrecy.cap1, mac.cap1), min(k * secrecy.cap2, mac.cap2))
        keyed_sum = min(k * secrecy.cap_sum, mac.cap_sum)
        return bound, _scale_to_sum(bound[0], bound[1], keyed_sum), keyed_sum

    # first slot at which the pair reaches its limit; every bound is a ceiling
    lambda_star = max(_ceil(mac.cap1 / secrecy.cap1), _ceil(mac.cap2 / secrecy.cap2),
                      _ceil(mac.cap_sum / secrecy.cap_sum), 1)
    while lambda_star > 1:
        _, pair, _ = keyed_at(lambda_star - 1)
        if abs(pair[0] - saturated[0]) > RATE_TOL or abs(pair[1] - saturated[1]) > RATE_TOL:
            break
        lambda_star -= 1

    rows = []
    for k in range(1, k_max + 1):
        bound, pair, keyed_sum = keyed_at(k)
        if k == 1:
            overall = wiretap
        else:
            overall = _blend(wiretap, pair, l)
        rows.append(SlotRate(slot=k, keyed_bound=bound, keyed=pair, keyed_sum=keyed_sum,
                             overall=overall))
    logger.debug("schedule: lambda1=%d lambda2=%d lambda*=%d", lambda1, lambda2,
                 lambda_star)
    return RampSchedule(lambda1=lambda1, lambda2=lambda2, lam=max(lambda1, lambda2) + 1,
                        lambda_star=lambda_star, l=l, secrecy=secrecy, mac=mac,
                        wiretap=wiretap, per_slot=tuple(rows))


def _blend(wiretap: RatePair, keyed: RatePair, l: int) -> RatePair:
    return ((wiretap[0] + l * keyed[0]) / (1 + l), (wiretap[1] + l * keyed[1]) / (1 + l))


def overall_rate(schedule: RampSchedule, k: int, l: int) -> RatePair:
    """
    Rate of slot k when its keyed part spans n2 = l*n1 channel uses.

    Raises:
        InvalidSlot: k < 2 (slot 1 carries no keyed part) or k beyond the schedule.
    """
    if k < 2:
        raise InvalidSlot(f"slot {k} has no keyed part; overall_rate needs k >= 2")
    if l < 1:
        raise InputError(f"l must be a positive integer, got {l}")
    return _blend(schedule.wiretap, schedule.slot(k).keyed, l)


def _hull(points: np.ndarray) -> np.ndarray:
    points = np.unique(np.round(points, 12), axis=0)
    if points.shape[0] <= 2:
        return points
    try:
        hull = ConvexHull(points)
    except QhullError:
        # collinear set: keep the two extreme points along the line
        direction = points[-1] - points[0]
        order = np.argsort(points @ direction)
        return points[[order[0], order[-1]]]
    return points[hull.vertices]


def time_share(pentagons: Sequence[RatePentagon], weights: Sequence[float]) -> RateHull:
    """
    Rates reachable by spending fraction weights[j] of the time in pentagon j:
    the weighted Minkowski sum of the pentagons.
    """
    if len(pentagons) != len(weights) or not pentagons:
        raise WeightMismatch(f"{len(pentagons)} pentagons but {len(weights)} weights")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > RATE_TOL:
        raise WeightMismatch(f"weights must be nonnegative and sum to 1, got {weights.tolist()}")
    acc = np.zeros((1, 2))
    for pentagon, weight in zip(pentagons, weights):
        scaled = weight * np.asarray(pentagon.vertices())
        acc = _hull(np.array([a + b for a, b in product(acc, scaled)]))
    return RateHull(vertices=acc)


def convex_closure(pentagons: Sequence[RatePentagon]) -> RateHull:
    """
    Convex hull of the union of pentagons (time sharing over input laws).
    """
    if not pentagons:
        raise WeightMismatch("convex_closure needs at least one pentagon")
    points = np.array([v for pentagon in pentagons for v in pentagon.vertices()])
    return RateHull(vertices=_hull(points))


def region_sweep(spec: ChannelSpec, steps: int,
                 ) -> List[Tuple[InputPair, RatePentagon, RatePentagon]]:
    """
    (inputs, secrecy pentagon, MAC pentagon) over a grid of product input laws.
    """
    if steps < 1:
        raise InputError(f"sweep resolution must be >= 1, got {steps}")
    results = []
    for p1 in simplex_grid(spec.x1_size, steps):
        for p2 in simplex_grid(spec.x2_size, steps):
            inputs = InputPair(p1, p2)
            terms = channel_terms(spec, inputs)
            results.append((inputs, _secrecy_from_terms(terms), _mac_from_terms(terms)))
    logger.debug("swept %d input pairs", len(results))
    return results
