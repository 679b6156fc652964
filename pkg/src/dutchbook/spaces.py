"""Sample spaces, outcomes, and events with exact set algebra.

Three space kinds are supported: finite label spaces, the unit interval
with rational endpoints, and infinite binary sequences.  Events are kept
in a normalized form so that structural equality is meaningful and
indicator evaluation is decidable:

* finite spaces: an outcome subset (frozen label set);
* unit interval: a sorted union of pairwise disjoint, non-adjacent
  intervals with explicit open/closed endpoint flags;
* binary sequences: a finite union of cylinders, each fixing finitely
  many coordinates.

All arithmetic is exact (`fractions.Fraction`); nothing here ever touches
floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

__all__ = [
    "SpaceMismatchError",
    "FiniteSpace",
    "UnitIntervalSpace",
    "BinarySequenceSpace",
    "Space",
    "FinitePoint",
    "UnitPoint",
    "BitPoint",
    "Outcome",
    "FiniteEvent",
    "Interval",
    "IntervalEvent",
    "Cylinder",
    "CylinderEvent",
    "Event",
    "eval_indicator",
    "complement",
    "union",
    "intersection",
    "is_empty",
    "is_disjoint",
    "is_subset",
    "events_equal",
]


class SpaceMismatchError(TypeError):
    """An event and an outcome (or measure) live over different spaces."""


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSpace:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("finite space needs at least one outcome label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("outcome labels must be distinct")

    def outcomes(self) -> tuple["FinitePoint", ...]:
        return tuple(FinitePoint(lab) for lab in self.labels)

    def full_event(self) -> "FiniteEvent":
        return FiniteEvent(frozenset(self.labels))

    def empty_event(self) -> "FiniteEvent":
        return FiniteEvent(frozenset())


@dataclass(frozen=True)
class UnitIntervalSpace:
    """The unit interval [0, 1].

    Outcomes are rationals ``0 <= w <= 1``.  The closed endpoints are kept
    representable because left-closed events such as ``[0, r)`` need the
    point 0 as a membership witness; events that should exclude the
    endpoints simply carry open flags.
    """

    def full_event(self) -> "IntervalEvent":
        return IntervalEvent((Interval(Fraction(0), True, Fraction(1), True),))

    def empty_event(self) -> "IntervalEvent":
        return IntervalEvent(())


@dataclass(frozen=True)
class BinarySequenceSpace:
    """Infinite 0/1 sequences indexed by the positive integers."""

    def full_event(self) -> "CylinderEvent":
        return CylinderEvent((Cylinder(()),))

    def empty_event(self) -> "CylinderEvent":
        return CylinderEvent(())


Space = Union[FiniteSpace, UnitIntervalSpace, BinarySequenceSpace]


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinitePoint:
    label: str


@dataclass(frozen=True)
class UnitPoint:
    value: Fraction

    def __post_init__(self) -> None:
        v = Fraction(self.value)
        object.__setattr__(self, "value", v)
        if not (0 <= v <= 1):
            raise ValueError(f"unit-interval outcome {v} outside [0, 1]")


@dataclass(frozen=True)
class BitPoint:
    """A binary sequence given by finitely many explicit bits plus a tail bit.

    ``bits`` maps coordinate (>= 1) to 0/1; every unlisted coordinate has
    value ``tail``.
    """

    bits: tuple[tuple[int, int], ...]
    tail: int = 0

    def __post_init__(self) -> None:
        norm = tuple(sorted((int(c), int(b)) for c, b in dict(self.bits).items()))
        object.__setattr__(self, "bits", norm)
        if any(c < 1 or b not in (0, 1) for c, b in norm):
            raise ValueError("coordinates must be >= 1 with bits in {0, 1}")
        if self.tail not in (0, 1):
            raise ValueError("tail bit must be 0 or 1")

    @classmethod
    def from_mapping(cls, bits: Mapping[int, int], tail: int = 0) -> "BitPoint":
        return cls(tuple(bits.items()), tail)

    def bit(self, coord: int) -> int:
        for c, b in self.bits:
            if c == coord:
                return b
        return self.tail


Outcome = Union[FinitePoint, UnitPoint, BitPoint]


# ---------------------------------------------------------------------------
# Events: finite spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteEvent:
    members: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))

    def sort_key(self) -> tuple:
        return (len(self.members), tuple(sorted(self.members)))


# ---------------------------------------------------------------------------
# Events: unit interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    lo_closed: bool
    hi: Fraction
    hi_closed: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, x: Fraction) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def length(self) -> Fraction:
        return self.hi - self.lo if self.hi > self.lo else Fraction(0)


def _touches_or_overlaps(a: Interval, b: Interval) -> bool:
    # a.lo <= b.lo assumed; mergeable if they overlap or are adjacent with
    # the junction point covered by at least one side.
    if b.lo < a.hi:
        return True
    if b.lo == a.hi:
        return a.hi_closed or b.lo_closed
    return False


def _merge_two(a: Interval, b: Interval) -> Interval:
    # union of two touching intervals with a.lo <= b.lo
    if a.hi > b.hi:
        hi, hic = a.hi, a.hi_closed
    elif b.hi > a.hi:
        hi, hic = b.hi, b.hi_closed
    else:
        hi, hic = a.hi, a.hi_closed or b.hi_closed
    if a.lo < b.lo:
        lo, loc = a.lo, a.lo_closed
    else:
        lo, loc = a.lo, a.lo_closed or b.lo_closed
    return Interval(lo, loc, hi, hic)


@dataclass(frozen=True)
class IntervalEvent:
    pieces: tuple[Interval, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pieces", _normalize_pieces(self.pieces))


def _normalize_pieces(pieces: Iterable[Interval]) -> tuple[Interval, ...]:
    kept = [p for p in pieces if not p.is_empty()]
    kept.sort(key=lambda p: (p.lo, not p.lo_closed))
    out: list[Interval] = []
    for p in kept:
        if out and _touches_or_overlaps(out[-1], p):
            out[-1] = _merge_two(out[-1], p)
        else:
            out.append(p)
    return tuple(out)


def interval_complement(ev: IntervalEvent) -> IntervalEvent:
    """Complement within the unit interval [0, 1]."""
    pieces: list[Interval] = []
    cursor = Fraction(0)
    cursor_closed = True  # whether `cursor` itself is still available
    for p in ev.pieces:
        gap = Interval(cursor, cursor_closed, p.lo, not p.lo_closed)
        pieces.append(gap)
        cursor = p.hi
        cursor_closed = not p.hi_closed
    pieces.append(Interval(cursor, cursor_closed, Fraction(1), True))
    return IntervalEvent(tuple(pieces))


def _interval_intersection(a: Interval, b: Interval) -> Interval:
    if a.lo > b.lo or (a.lo == b.lo and not a.lo_closed):
        lo, loc = a.lo, a.lo_closed
    else:
        lo, loc = b.lo, b.lo_closed
    if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
        hi, hic = a.hi, a.hi_closed
    else:
        hi, hic = b.hi, b.hi_closed
    return Interval(lo, loc, hi, hic)


# ---------------------------------------------------------------------------
# Events: binary sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """The set of sequences agreeing with finitely many fixed coordinates."""

    fixed: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        fixed = dict(self.fixed)
        norm = tuple(sorted((int(c), int(b)) for c, b in fixed.items()))
        object.__setattr__(self, "fixed", norm)
        if any(c < 1 or b not in (0, 1) for c, b in norm):
            raise ValueError("coordinates must be >= 1 with bits in {0, 1}")

    def contains(self, w: BitPoint) -> bool:
        return all(w.bit(c) == b for c, b in self.fixed)

    def conflicts(self, other: "Cylinder") -> bool:
        mine = dict(self.fixed)
        return any(c in mine and mine[c] != b for c, b in other.fixed)

    def merge(self, other: "Cylinder") -> "Cylinder":
        if self.conflicts(other):
            raise ValueError("cannot merge conflicting cylinders")
        combined = dict(self.fixed)
        combined.update(other.fixed)
        return Cylinder(tuple(combined.items()))

    def implies(self, other: "Cylinder") -> bool:
        """True when self is a subset of other (other's constraints hold)."""
        mine = dict(self.fixed)
        return all(mine.get(c) == b for c, b in other.fixed)


@dataclass(frozen=True)
class CylinderEvent:
    cylinders: tuple[Cylinder, ...]

    def __post_init__(self) -> None:
        # drop duplicates and cylinders absorbed by a coarser one
        unique = list(dict.fromkeys(self.cylinders))
        kept = []
        for i, c in enumerate(unique):
            absorbed = any(j != i and c != o and c.implies(o) for j, o in enumerate(unique))
            if not absorbed:
                kept.append(c)
        kept.sort(key=lambda c: (len(c.fixed), c.fixed))
        object.__setattr__(self, "cylinders", tuple(kept))


Event = Union[FiniteEvent, IntervalEvent, CylinderEvent]


# ---------------------------------------------------------------------------
# Indicator evaluation and set algebra
# ---------------------------------------------------------------------------


def eval_indicator(event: Event, w: Outcome) -> int:
    """Indicator of the event at an outcome: 1 if the outcome lies in it.

    Raises :class:`SpaceMismatchError` when the event and outcome belong to
    different space kinds.
    """
    if isinstance(event, FiniteEvent):
        if not isinstance(w, FinitePoint):
            raise SpaceMismatchError(f"finite event cannot score {type(w).__name__}")
        return 1 if w.label in event.members else 0
    if isinstance(event, IntervalEvent):
        if not isinstance(w, UnitPoint):
            raise SpaceMismatchError(f"interval event cannot score {type(w).__name__}")
        return 1 if any(p.contains(w.value) for p in event.pieces) else 0
    if isinstance(event, CylinderEvent):
        if not isinstance(w, BitPoint):
            raise SpaceMismatchError(f"cylinder event cannot score {type(w).__name__}")
        return 1 if any(c.contains(w) for c in event.cylinders) else 0
    raise SpaceMismatchError(f"unknown event type {type(event).__name__}")


def _check_same_kind(a: Event, b: Event) -> None:
    if type(a) is not type(b):
        raise SpaceMismatchError(
            f"events over different spaces: {type(a).__name__} vs {type(b).__name__}"
        )


def complement(event: Event, space: Space | None = None) -> Event:
    if isinstance(event, FiniteEvent):
        if not isinstance(space, FiniteSpace):
            raise SpaceMismatchError("complement of a finite event needs its FiniteSpace")
        return FiniteEvent(frozenset(space.labels) - event.members)
    if isinstance(event, IntervalEvent):
        return interval_complement(event)
    if isinstance(event, CylinderEvent):
        # intersect the complements of each cylinder
        result = CylinderEvent((Cylinder(()),))
        for cyl in event.cylinders:
            pieces: list[Cylinder] = []
            prefix: list[tuple[int, int]] = []
            for c, b in cyl.fixed:
                pieces.append(Cylinder(tuple(prefix + [(c, 1 - b)])))
                prefix.append((c, b))
            if not cyl.fixed:
                result = CylinderEvent(())
                continue
            result = intersection(result, CylinderEvent(tuple(pieces)))
        return result
    raise SpaceMismatchError(f"unknown event type {type(event).__name__}")


def union(a: Event, b: Event) -> Event:
    _check_same_kind(a, b)
    if isinstance(a, FiniteEvent):
        return FiniteEvent(a.members | b.members)
    if isinstance(a, IntervalEvent):
        return IntervalEvent(a.pieces + b.pieces)
    return CylinderEvent(a.cylinders + b.cylinders)


def intersection(a: Event, b: Event) -> Event:
    _check_same_kind(a, b)
    if isinstance(a, FiniteEvent):
        return FiniteEvent(a.members & b.members)
    if isinstance(a, IntervalEvent):
        pieces = [
            _interval_intersection(p, q)
            for p in a.pieces
            for q in b.pieces
        ]
        return IntervalEvent(tuple(pieces))
    merged = []
    for p in a.cylinders:
        for q in b.cylinders:
            if not p.conflicts(q):
                merged.append(p.merge(q))
    return CylinderEvent(tuple(merged))


def is_empty(event: Event) -> bool:
    if isinstance(event, FiniteEvent):
        return not event.members
    if isinstance(event, IntervalEvent):
        return not event.pieces
    return not event.cylinders


def is_disjoint(a: Event, b: Event) -> bool:
    return is_empty(intersection(a, b))


def is_subset(a: Event, b: Event) -> bool:
    if isinstance(a, FiniteEvent) and isinstance(b, FiniteEvent):
        return a.members <= b.members
    if isinstance(a, IntervalEvent) and isinstance(b, IntervalEvent):
        return is_empty(intersection(a, interval_complement(b)))
    if isinstance(a, CylinderEvent) and isinstance(b, CylinderEvent):
        return is_empty(intersection(a, complement(b)))
    raise SpaceMismatchError("subset test over different spaces")


def events_equal(a: Event, b: Event) -> bool:
    """Set equality (normalized structural equality is not enough for
    cylinder unions, so fall back to two inclusions there)."""
    if isinstance(a, CylinderEvent) and isinstance(b, CylinderEvent):
        return is_subset(a, b) and is_subset(b, a)
    return a == b
