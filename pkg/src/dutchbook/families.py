"""Index maps and closed-form indexed event families.

A betting portfolio bets on countably many events; the families here give
those events in closed form so that indicator profiles, prices, and
disjointness stay decidable:

* ``ChainIntervals``: a strictly decreasing chain ``(0, r(i))`` (endpoint
  flags configurable) over the unit interval;
* ``ChainDifferences``: the pairwise disjoint differences
  ``A_i minus A_{i+1}`` of such a chain;
* ``CoordinateEvents``: the i-th binary coordinate equals 1;
* ``FirstOneCylinders``: the first 1 appears exactly at coordinate i
  (pairwise disjoint, fair-coin weight ``2**-i``);
* ``ConstantFamily``: the same event at every index;
* ``ExplicitFamily``: a finite list;
* ``ReindexedFamily``: another family read through an index bijection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .series import (
    GeometricRule,
    IndexRule,
    rule_is_positive,
    rule_is_strictly_decreasing,
)
from .spaces import (
    BitPoint,
    Cylinder,
    CylinderEvent,
    Event,
    FinitePoint,
    Interval,
    IntervalEvent,
    Outcome,
    UnitPoint,
    eval_indicator,
)

__all__ = [
    "IdentityMap",
    "FiniteSwapMap",
    "BlockPatternMap",
    "PairInterleaveMap",
    "IndexMap",
    "map_apply",
    "map_inverse_apply",
    "verify_bijection_prefix",
    "ExplicitFamily",
    "ChainIntervals",
    "ChainDifferences",
    "CoordinateEvents",
    "FirstOneCylinders",
    "ConstantFamily",
    "ReindexedFamily",
    "EventFamily",
    "family_event",
    "family_is_finite",
    "family_length",
    "IndicatorProfile",
    "indicator_profile",
    "chain_exit_index",
    "family_stuck_possible",
]


# ---------------------------------------------------------------------------
# Index maps (bijections of the positive integers)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityMap:
    pass


@dataclass(frozen=True)
class FiniteSwapMap:
    """A finite product of transpositions."""

    transpositions: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for a, b in self.transpositions:
            if a < 1 or b < 1:
                raise ValueError("transpositions act on positive integers")

    def moved_indices(self) -> set[int]:
        out: set[int] = set()
        for a, b in self.transpositions:
            if a != b:
                out.update((a, b))
        return out


@dataclass(frozen=True)
class BlockPatternMap:
    """The block bijection (3k-2, 3k-1, 3k) -> (4k-3, 4k-1, 2k).

    Positions come in blocks of three: the first two read odd indices, the
    third reads an even index, so the image of any prefix holds twice as
    many odd as even indices.  Bijectivity: the odd slots enumerate
    4k-3, 4k-1 (every odd number exactly once as k runs) and the even
    slots enumerate 2k (every even number exactly once).
    """


@dataclass(frozen=True)
class PairInterleaveMap:
    """Swap each odd position with its even successor: (1 2)(3 4)(5 6)..."""


IndexMap = Union[IdentityMap, FiniteSwapMap, BlockPatternMap, PairInterleaveMap]


def map_apply(m: IndexMap, i: int) -> int:
    if i < 1:
        raise ValueError("index maps act on positive integers")
    if isinstance(m, IdentityMap):
        return i
    if isinstance(m, FiniteSwapMap):
        for a, b in m.transpositions:
            if i == a:
                i = b
            elif i == b:
                i = a
        return i
    if isinstance(m, BlockPatternMap):
        q, r = divmod(i + 2, 3)  # block number and slot (r: 0,1,2 for 3k-2,3k-1,3k)
        if r == 0:
            return 4 * q - 3
        if r == 1:
            return 4 * q - 1
        return 2 * q
    if isinstance(m, PairInterleaveMap):
        return i + 1 if i % 2 == 1 else i - 1
    raise TypeError(f"unknown index map {type(m).__name__}")


def map_inverse_apply(m: IndexMap, j: int) -> int:
    if j < 1:
        raise ValueError("index maps act on positive integers")
    if isinstance(m, IdentityMap):
        return j
    if isinstance(m, FiniteSwapMap):
        for a, b in reversed(m.transpositions):
            if j == a:
                j = b
            elif j == b:
                j = a
        return j
    if isinstance(m, BlockPatternMap):
        if j % 2 == 0:
            return 3 * (j // 2)
        if j % 4 == 1:
            return 3 * ((j + 3) // 4) - 2
        return 3 * ((j + 1) // 4) - 1
    if isinstance(m, PairInterleaveMap):
        return map_apply(m, j)
    raise TypeError(f"unknown index map {type(m).__name__}")


def verify_bijection_prefix(m: IndexMap, upto: int = 10_000) -> bool:
    """Check inverse consistency and injectivity on a prefix."""
    seen: set[int] = set()
    for i in range(1, upto + 1):
        j = map_apply(m, i)
        if j in seen or map_inverse_apply(m, j) != i:
            return False
        seen.add(j)
    return True


# ---------------------------------------------------------------------------
# Event families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitFamily:
    events: tuple[Event, ...]


@dataclass(frozen=True)
class ChainIntervals:
    """``A_i = (0, r(i))`` with configurable endpoint flags.

    The radius rule must be strictly positive and strictly decreasing so
    that every exit profile has a membership witness.
    """

    rule: IndexRule
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self) -> None:
        if rule_is_positive(self.rule) is not True:
            raise ValueError("chain radius rule must be provably positive")
        if rule_is_strictly_decreasing(self.rule) is not True:
            raise ValueError("chain radius rule must be provably strictly decreasing")
        if self.rule.value_at(1) > 1:
            raise ValueError("chain radii must stay inside the unit interval")

    def radius(self, i: int) -> Fraction:
        return self.rule.value_at(i)

    def limit_radius(self) -> Optional[Fraction]:
        return self.rule.limit()


@dataclass(frozen=True)
class ChainDifferences:
    """``A_i minus A_{i+1}`` for a chain: pairwise disjoint by construction."""

    chain: ChainIntervals


@dataclass(frozen=True)
class CoordinateEvents:
    """``A_i = { w : w_i = 1 }`` over binary sequences."""


@dataclass(frozen=True)
class FirstOneCylinders:
    """``A_i = { w : w_1 = ... = w_{i-1} = 0, w_i = 1 }``: disjoint."""


@dataclass(frozen=True)
class ConstantFamily:
    event: Event


@dataclass(frozen=True)
class ReindexedFamily:
    base: "EventFamily"
    index_map: IndexMap


EventFamily = Union[
    ExplicitFamily,
    ChainIntervals,
    ChainDifferences,
    CoordinateEvents,
    FirstOneCylinders,
    ConstantFamily,
    ReindexedFamily,
]


def family_is_finite(fam: EventFamily) -> bool:
    if isinstance(fam, ExplicitFamily):
        return True
    if isinstance(fam, ReindexedFamily):
        return family_is_finite(fam.base)
    return False


def family_length(fam: EventFamily) -> Optional[int]:
    if isinstance(fam, ExplicitFamily):
        return len(fam.events)
    if isinstance(fam, ReindexedFamily):
        return family_length(fam.base)
    return None


def family_event(fam: EventFamily, i: int) -> Event:
    if i < 1:
        raise IndexError("family indices start at 1")
    if isinstance(fam, ExplicitFamily):
        if i > len(fam.events):
            raise IndexError(f"family has {len(fam.events)} events; asked for {i}")
        return fam.events[i - 1]
    if isinstance(fam, ChainIntervals):
        return IntervalEvent(
            (Interval(Fraction(0), fam.lo_closed, fam.radius(i), fam.hi_closed),)
        )
    if isinstance(fam, ChainDifferences):
        ch = fam.chain
        # (0, r(i)) minus (0, r(i+1)) = [r(i+1), r(i)) with flags inherited
        return IntervalEvent(
            (
                Interval(
                    ch.radius(i + 1),
                    not ch.hi_closed,
                    ch.radius(i),
                    ch.hi_closed,
                ),
            )
        )
    if isinstance(fam, CoordinateEvents):
        return CylinderEvent((Cylinder(((i, 1),)),))
    if isinstance(fam, FirstOneCylinders):
        fixed = tuple((c, 0) for c in range(1, i)) + ((i, 1),)
        return CylinderEvent((Cylinder(fixed),))
    if isinstance(fam, ConstantFamily):
        return fam.event
    if isinstance(fam, ReindexedFamily):
        return family_event(fam.base, map_apply(fam.index_map, i))
    raise TypeError(f"unknown family {type(fam).__name__}")


# ---------------------------------------------------------------------------
# Indicator profiles: where does a fixed outcome sit along the family?
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndicatorProfile:
    """Indicator values of one outcome along a family.

    ``kind == "finite"``: the indicator is 1 exactly at ``indices``.
    ``kind == "cofinite"``: the indicator is 0 exactly at ``indices``.
    """

    kind: str
    indices: tuple[int, ...]


def chain_exit_index(chain: ChainIntervals, w: UnitPoint) -> Optional[int]:
    """Smallest i with w outside A_i; None when w lies in every A_i."""
    x = w.value
    if x == 0:
        return None if chain.lo_closed else 1
    if x < 0:
        return 1
    # w in A_i iff x < r(i) (or <= when hi_closed); the radius strictly
    # decreases, so search for the first failure.
    def inside(i: int) -> bool:
        r = chain.radius(i)
        return x <= r if chain.hi_closed else x < r

    if not inside(1):
        return 1
    lim = chain.limit_radius()
    if lim is not None and x <= lim:
        # radii strictly decrease toward lim, staying above x forever
        return None
    hi = 2
    while inside(hi):
        hi *= 2
        if hi > 1 << 64:
            raise RuntimeError("exit index search exceeded 2**64")
    lo = hi // 2  # inside(lo) holds
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return hi


def family_stuck_possible(fam: EventFamily) -> Optional[bool]:
    """Is there an outcome lying in every member (an all-ones profile)?"""
    if isinstance(fam, ChainIntervals):
        if fam.lo_closed:
            return True
        lim = fam.limit_radius()
        if lim is None:
            return None
        return lim > 0
    if isinstance(fam, (ChainDifferences, FirstOneCylinders)):
        return False  # pairwise disjoint
    if isinstance(fam, CoordinateEvents):
        return True  # the all-ones sequence
    if isinstance(fam, ConstantFamily):
        from .spaces import is_empty

        return not is_empty(fam.event)
    if isinstance(fam, ExplicitFamily):
        from .spaces import intersection, is_empty

        if not fam.events:
            return False
        acc = fam.events[0]
        for e in fam.events[1:]:
            acc = intersection(acc, e)
        return not is_empty(acc)
    if isinstance(fam, ReindexedFamily):
        return family_stuck_possible(fam.base)
    return None


def indicator_profile(fam: EventFamily, w: Outcome) -> IndicatorProfile:
    """The full indicator pattern of ``w`` along the family.

    Only patterns that are eventually constant arise for the supported
    outcome encodings, so the result is always finite or cofinite.
    """
    if isinstance(fam, ExplicitFamily):
        hits = tuple(
            i for i, e in enumerate(fam.events, start=1) if eval_indicator(e, w)
        )
        return IndicatorProfile("finite", hits)
    if isinstance(fam, ChainIntervals):
        if not isinstance(w, UnitPoint):
            raise TypeError("interval chain families score unit-interval outcomes")
        k0 = chain_exit_index(fam, w)
        if k0 is None:
            return IndicatorProfile("cofinite", ())
        return IndicatorProfile("finite", tuple(range(1, k0)))
    if isinstance(fam, ChainDifferences):
        if not isinstance(w, UnitPoint):
            raise TypeError("interval chain families score unit-interval outcomes")
        k0 = chain_exit_index(fam.chain, w)
        if k0 is None or k0 == 1:
            return IndicatorProfile("finite", ())
        return IndicatorProfile("finite", (k0 - 1,))
    if isinstance(fam, CoordinateEvents):
        if not isinstance(w, BitPoint):
            raise TypeError("coordinate families score binary-sequence outcomes")
        if w.tail == 0:
            return IndicatorProfile("finite", tuple(c for c, b in w.bits if b == 1))
        return IndicatorProfile("cofinite", tuple(c for c, b in w.bits if b == 0))
    if isinstance(fam, FirstOneCylinders):
        if not isinstance(w, BitPoint):
            raise TypeError("cylinder families score binary-sequence outcomes")
        explicit = dict(w.bits)
        coords = sorted(explicit)
        first_one: Optional[int] = None
        scan = 1
        for c in coords:
            # implicit coordinates between scan and c carry the tail bit
            if w.tail == 1 and scan < c:
                first_one = scan
                break
            if explicit[c] == 1:
                first_one = c
                break
            scan = c + 1
        if first_one is None and w.tail == 1:
            first_one = scan
        if first_one is None:
            return IndicatorProfile("finite", ())
        # all coordinates before first_one are 0 by construction of the scan
        return IndicatorProfile("finite", (first_one,))
    if isinstance(fam, ConstantFamily):
        if eval_indicator(fam.event, w):
            return IndicatorProfile("cofinite", ())
        return IndicatorProfile("finite", ())
    if isinstance(fam, ReindexedFamily):
        base = indicator_profile(fam.base, w)
        mapped = tuple(
            sorted(map_inverse_apply(fam.index_map, j) for j in base.indices)
        )
        return IndicatorProfile(base.kind, mapped)
    raise TypeError(f"unknown family {type(fam).__name__}")
