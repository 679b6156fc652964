"""Canned constructions and exhaustive small-scale probability checks.

Each gallery instance packages a space, an event family, a price rule,
and the verdicts the engine is expected to reproduce.  The fair-coin
checks enumerate every assignment of the touched coordinates exactly, so
the reported probabilities are rationals, not estimates.

CLI-addressable names: ``example-2.4`` (the vanishing chain with inflated
prices), ``example-3.6`` (coordinate bets priced just under a half),
``example-4.3`` (the chain instance viewed through the absolute-balance
systems), ``example-4.4`` (the interleaved truncation-bounded book).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .coherence import BeamReport, beam_attack, extension_obstruction
from .families import ChainIntervals, CoordinateEvents, EventFamily
from .measures import PriceAssignment
from .series import GeometricRule, IndexRule, PowerRule
from .spaces import BinarySequenceSpace, Space, UnitIntervalSpace

__all__ = [
    "GalleryInstance",
    "example_2_4",
    "example_3_6",
    "example_4_3",
    "example_4_4",
    "p0_symmetry_check",
    "quarter_bound_check",
    "GALLERY_NAMES",
]

_MAX_COORDS = 20


@dataclass(frozen=True)
class GalleryInstance:
    name: str
    space: Space
    family: EventFamily
    prices: PriceAssignment
    expected: tuple[tuple[str, str], ...] = ()
    delta: Optional[Fraction] = None


def example_2_4(delta: Fraction) -> GalleryInstance:
    """The decreasing chain ``(0, 1/(i+1))`` priced at ``1/(i+1) + delta``.

    Coherent for pointwise-convergent countable books on the chain alone,
    yet no coherent extension to the generated field exists: the chain
    vanishes while its prices stay above delta.
    """
    delta = Fraction(delta)
    if not (0 < delta <= Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2]: the first price may not exceed 1")
    chain = ChainIntervals(PowerRule(Fraction(1), 1, 1, Fraction(0)))
    prices = PriceAssignment.of(
        family_rules={chain: PowerRule(Fraction(1), 1, 1, delta)}
    )
    return GalleryInstance(
        name="example-2.4",
        space=UnitIntervalSpace(),
        family=chain,
        prices=prices,
        expected=(
            ("extension_obstruction", f"price limit exactly {delta}"),
            ("finite_reduction", "no truncated regrouping is a sure loss"),
        ),
        delta=delta,
    )


def example_3_6() -> GalleryInstance:
    """Coordinate bets priced at ``1/2 - 4**-i``.

    Prices are strictly increasing toward one half and pairwise distinct,
    so every extension to the generated field has an infinite price image
    and cannot be coherent for fully-convergent countable books; the
    assignment itself survives because each truncated balance wins with
    probability at least a quarter under the fair coin.
    """
    family = CoordinateEvents()
    prices = PriceAssignment.of(
        family_rules={
            family: GeometricRule(Fraction(-1), Fraction(1, 4), Fraction(1, 2))
        }
    )
    return GalleryInstance(
        name="example-3.6",
        space=BinarySequenceSpace(),
        family=family,
        prices=prices,
        expected=(
            ("price_1", "1/4"),
            ("price_2", "7/16"),
            ("prices", "strictly increasing toward 1/2, pairwise distinct"),
            ("quarter_bound", "every truncated balance wins with probability >= 1/4"),
        ),
    )


def example_4_3(delta: Fraction) -> GalleryInstance:
    """The chain instance of ``example-2.4`` read through the
    absolute-balance systems: coherent there as well, with the same
    obstruction to any coherent extension."""
    base = example_2_4(delta)
    return GalleryInstance(
        name="example-4.3",
        space=base.space,
        family=base.family,
        prices=base.prices,
        expected=base.expected
        + (
            (
                "absolute_systems",
                "every absolutely-convergent book over the chain is also a "
                "pointwise book, so coherence transfers",
            ),
        ),
        delta=base.delta,
    )


def example_4_4(
    delta: Fraction,
    horizon: int = 1_000_000,
    sample_count: int = 100,
    truncation_limit: int = 100_000,
    seed: int = 0,
) -> BeamReport:
    """The interleaved book over ``example-2.4``: uniform sure loss with
    pointwise-convergent, uniformly bounded truncated balances."""
    return beam_attack(
        Fraction(delta),
        horizon=horizon,
        sample_count=sample_count,
        truncation_limit=truncation_limit,
        seed=seed,
    )


GALLERY_NAMES: dict[str, Callable] = {
    "example-2.4": example_2_4,
    "example-3.6": example_3_6,
    "example-4.3": example_4_3,
    "example-4.4": example_4_4,
}


# ---------------------------------------------------------------------------
# Exhaustive fair-coin checks
# ---------------------------------------------------------------------------


def _gray_count_nonnegative(
    coord_coeffs: Sequence[Fraction], constant: Fraction
) -> Fraction:
    """P(sum over set bits of coeffs + constant >= 0) under fair bits.

    Exhaustive over all ``2**m`` assignments via Gray-code increments on a
    common-denominator integer value.
    """
    m = len(coord_coeffs)
    den = 1
    for c in coord_coeffs:
        den = den * c.denominator // _gcd(den, c.denominator)
    den = den * constant.denominator // _gcd(den, constant.denominator)
    ints = [int(c * den) for c in coord_coeffs]
    value = int(constant * den)
    count = 1 if value >= 0 else 0
    state = 0
    for k in range(1, 1 << m):
        flip = (k & -k).bit_length() - 1
        bit = 1 << flip
        if state & bit:
            value -= ints[flip]
        else:
            value += ints[flip]
        state ^= bit
        if value >= 0:
            count += 1
    return Fraction(count, 1 << m)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _aggregate_by_coord(
    coeffs: Sequence[Fraction], coords: Sequence[int]
) -> tuple[list[int], list[Fraction]]:
    agg: dict[int, Fraction] = {}
    for c, coord in zip(coeffs, coords):
        if coord < 1:
            raise ValueError("coordinates are positive integers")
        agg[coord] = agg.get(coord, Fraction(0)) + Fraction(c)
    items = sorted(agg.items())
    return [k for k, _ in items], [v for _, v in items]


def p0_symmetry_check(
    n: int, coeffs: Sequence[Fraction], events: Sequence[int]
) -> Fraction:
    """Exact ``P(sum_i b_i (I_i - 1/2) >= 0)`` under independent fair bits.

    The win-or-tie probability of any finite coordinate book is at least
    one half: flipping every bit negates the centered sum, pairing each
    strictly losing assignment with a strictly winning one.
    """
    if n > _MAX_COORDS:
        raise ValueError(f"at most {_MAX_COORDS} bets (enumeration budget)")
    if len(coeffs) != n or len(events) != n:
        raise ValueError("need exactly n coefficients and n coordinates")
    _, agg = _aggregate_by_coord(coeffs, events)
    constant = -sum((Fraction(c) for c in coeffs), Fraction(0)) / 2
    return _gray_count_nonnegative(agg, constant)


def quarter_bound_check(
    n: int, coeffs: Sequence[Fraction], events: Sequence[int]
) -> Fraction:
    """Exact ``P(sum_i g_i (I_i - P_i) >= 0)`` with ``P_i = 1/2 - 4**-i``,
    evaluated under the fair coin.

    Every truncated balance of a coordinate book against these prices
    wins with probability at least a quarter: the price discount
    ``4**-i`` is too small to beat the fair-coin symmetry by more than
    one conditioning event.
    """
    if n > _MAX_COORDS:
        raise ValueError(f"at most {_MAX_COORDS} bets (enumeration budget)")
    if len(coeffs) != n or len(events) != n:
        raise ValueError("need exactly n coefficients and n coordinates")
    constant = Fraction(0)
    for c, coord in zip(coeffs, events):
        price = Fraction(1, 2) - Fraction(1, 4**coord)
        constant -= Fraction(c) * price
    _, agg = _aggregate_by_coord(coeffs, events)
    return _gray_count_nonnegative(agg, constant)
