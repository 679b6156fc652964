"""Reference measures, price assignments, and additivity checks.

A :class:`CanonicalMeasure` is a genuine countably additive probability of
one of three kinds (finite atomic weights, Lebesgue length on the unit
interval, the fair-coin measure on binary sequences).  A price assignment
is just a rational-valued function on a collection of events; it carries
no additivity promises, so incoherent books are representable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .families import (
    ChainDifferences,
    ChainIntervals,
    ConstantFamily,
    CoordinateEvents,
    EventFamily,
    ExplicitFamily,
    FirstOneCylinders,
    ReindexedFamily,
    family_event,
)
from .series import (
    Certificate,
    ConstantRule,
    DifferenceRule,
    Enclosure,
    Exact,
    GeometricRule,
    IndexRule,
    SeriesValue,
    Undetermined,
    rule_is_strictly_decreasing,
    sv_add,
    sv_bounds,
    sv_neg,
)
from .spaces import (
    BinarySequenceSpace,
    CylinderEvent,
    Event,
    FiniteEvent,
    FiniteSpace,
    IntervalEvent,
    Space,
    SpaceMismatchError,
    UnitIntervalSpace,
    events_equal,
    intersection,
    is_disjoint,
    is_empty,
    union,
)

__all__ = [
    "FiniteAtomicMeasure",
    "LebesgueUnit",
    "FairCoin",
    "CanonicalMeasure",
    "measure_of",
    "PriceError",
    "PriceAssignment",
    "MeasurePrices",
    "Prices",
    "price_of_event",
    "price_rule_for_family",
    "AdditivityVerdict",
    "check_countable_additivity",
]


# ---------------------------------------------------------------------------
# Canonical measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteAtomicMeasure:
    space: FiniteSpace
    weights: tuple[tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        wmap = {lab: Fraction(w) for lab, w in self.weights}
        missing = set(self.space.labels) - set(wmap)
        if missing:
            raise ValueError(f"weights missing for outcomes {sorted(missing)}")
        if any(w < 0 for w in wmap.values()):
            raise ValueError("atomic weights must be nonnegative")
        if sum(wmap.values()) != 1:
            raise ValueError("atomic weights must sum to exactly 1")
        norm = tuple(sorted(wmap.items()))
        object.__setattr__(self, "weights", norm)

    def weight(self, label: str) -> Fraction:
        for lab, w in self.weights:
            if lab == label:
                return w
        raise KeyError(label)


@dataclass(frozen=True)
class LebesgueUnit:
    """Length measure on the unit interval."""


@dataclass(frozen=True)
class FairCoin:
    """Independent fair bits: each cylinder weighs ``2**-(#fixed coords)``."""


CanonicalMeasure = Union[FiniteAtomicMeasure, LebesgueUnit, FairCoin]


def _faircoin_union_weight(ev: CylinderEvent) -> Fraction:
    """Inclusion-exclusion over the (few) cylinders of a union."""
    cyls = ev.cylinders
    total = Fraction(0)
    n = len(cyls)
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            inter = cyls[subset[0]]
            dead = False
            for k in subset[1:]:
                if inter.conflicts(cyls[k]):
                    dead = True
                    break
                inter = inter.merge(cyls[k])
            if dead:
                continue
            w = Fraction(1, 2 ** len(inter.fixed))
            total += w if r % 2 == 1 else -w
    return total


def measure_of(m: CanonicalMeasure, event: Event) -> Fraction:
    """Exact weight of an event under a canonical measure."""
    if isinstance(m, FiniteAtomicMeasure):
        if not isinstance(event, FiniteEvent):
            raise SpaceMismatchError("finite atomic measure weighs finite events")
        unknown = event.members - set(m.space.labels)
        if unknown:
            raise SpaceMismatchError(f"labels {sorted(unknown)} outside the space")
        return sum((m.weight(lab) for lab in event.members), Fraction(0))
    if isinstance(m, LebesgueUnit):
        if not isinstance(event, IntervalEvent):
            raise SpaceMismatchError("Lebesgue measure weighs interval events")
        return sum((p.length() for p in event.pieces), Fraction(0))
    if isinstance(m, FairCoin):
        if not isinstance(event, CylinderEvent):
            raise SpaceMismatchError("fair-coin measure weighs cylinder events")
        return _faircoin_union_weight(event)
    raise SpaceMismatchError(f"unknown measure {type(m).__name__}")


# ---------------------------------------------------------------------------
# Price assignments
# ---------------------------------------------------------------------------


class PriceError(KeyError):
    """A portfolio referenced an event with no assigned price."""


@dataclass(frozen=True)
class PriceAssignment:
    """Explicit event prices plus closed-form rules for indexed families.

    Prices are arbitrary finite rationals; nothing restricts them to
    [0, 1], so incoherent assignments are first-class inputs.
    """

    explicit: tuple[tuple[Event, Fraction], ...] = ()
    family_rules: tuple[tuple[EventFamily, IndexRule], ...] = ()

    @classmethod
    def of(
        cls,
        explicit: Mapping[Event, Fraction] | None = None,
        family_rules: Mapping[EventFamily, IndexRule] | None = None,
    ) -> "PriceAssignment":
        return cls(
            tuple((e, Fraction(p)) for e, p in (explicit or {}).items()),
            tuple((f, r) for f, r in (family_rules or {}).items()),
        )

    def lookup(self, event: Event) -> Optional[Fraction]:
        for e, p in self.explicit:
            if events_equal(e, event):
                return p
        # fall back to family rules for events they generate
        for fam, rule in self.family_rules:
            probe = _match_family_index(fam, event)
            if probe is not None:
                return rule.value_at(probe)
        return None

    def rule_for(self, fam: EventFamily) -> Optional[IndexRule]:
        for f, r in self.family_rules:
            if f == fam:
                return r
        derived = _derived_family_rule(self, fam)
        return derived


def _match_family_index(fam: EventFamily, event: Event, probe_upto: int = 64) -> Optional[int]:
    for i in range(1, probe_upto + 1):
        try:
            if events_equal(family_event(fam, i), event):
                return i
        except IndexError:
            return None
    return None


def _derived_family_rule(prices: "PriceAssignment", fam: EventFamily) -> Optional[IndexRule]:
    if isinstance(fam, ChainDifferences):
        base = prices.rule_for(fam.chain)
        if base is not None:
            return DifferenceRule(base)
    if isinstance(fam, ConstantFamily):
        p = prices.lookup(fam.event)
        if p is not None:
            return ConstantRule(p)
    return None


@dataclass(frozen=True)
class MeasurePrices:
    """A canonical measure used as the price of every event."""

    measure: CanonicalMeasure

    def lookup(self, event: Event) -> Optional[Fraction]:
        return measure_of(self.measure, event)

    def rule_for(self, fam: EventFamily) -> Optional[IndexRule]:
        m = self.measure
        if isinstance(fam, ChainIntervals) and isinstance(m, LebesgueUnit):
            return fam.rule
        if isinstance(fam, ChainDifferences) and isinstance(m, LebesgueUnit):
            return DifferenceRule(fam.chain.rule)
        if isinstance(fam, CoordinateEvents) and isinstance(m, FairCoin):
            return ConstantRule(Fraction(1, 2))
        if isinstance(fam, FirstOneCylinders) and isinstance(m, FairCoin):
            return GeometricRule(Fraction(1), Fraction(1, 2), Fraction(0))
        if isinstance(fam, ConstantFamily):
            return ConstantRule(measure_of(m, fam.event))
        if isinstance(fam, ReindexedFamily):
            return None  # handled at the portfolio level
        if isinstance(fam, ExplicitFamily):
            return None  # finite: looked up per event
        return None


Prices = Union[PriceAssignment, MeasurePrices]


def price_of_event(prices: Prices, event: Event) -> Fraction:
    p = prices.lookup(event)
    if p is None:
        raise PriceError(f"no price assigned to {event!r}")
    return p


def price_rule_for_family(prices: Prices, fam: EventFamily) -> IndexRule:
    rule = prices.rule_for(fam)
    if rule is None:
        raise PriceError(f"no price rule for family {type(fam).__name__}")
    return rule


# ---------------------------------------------------------------------------
# Countable additivity check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdditivityVerdict:
    status: str  # "holds" | "fails" | "undetermined"
    gap: SeriesValue
    detail: str = ""


def _parts_sum(prices: Prices, parts: EventFamily, horizon: int) -> SeriesValue:
    if isinstance(parts, ExplicitFamily):
        total = Fraction(0)
        for e in parts.events:
            total += price_of_event(prices, e)
        return Exact(total, Certificate("FiniteSum", cut_index=len(parts.events)))
    if isinstance(parts, ChainDifferences):
        rule = prices.rule_for(parts)
        if rule is None:
            base = prices.rule_for(parts.chain)
            if base is None:
                return Undetermined("no price rule available for the chain")
            rule = DifferenceRule(base)
        if isinstance(rule, DifferenceRule):
            lim = rule.base.limit()
            if lim is None:
                return Undetermined("chain price rule has no recognized limit")
            return Exact(
                rule.base.value_at(1) - lim,
                Certificate("Telescoping", note="chain differences"),
            )
        # explicit rule for the differences themselves
        from .series import evaluate_streams, rule_to_streams

        return evaluate_streams(rule_to_streams(rule), horizon)
    return Undetermined(f"no summation route for {type(parts).__name__}")


def _verify_partition(whole: Event, parts: EventFamily) -> Optional[str]:
    """None when parts are verified pairwise disjoint with union == whole;
    otherwise a human-readable reason (prefixed 'error:' for hard faults)."""
    if isinstance(parts, ExplicitFamily):
        evs = parts.events
        for i in range(len(evs)):
            for j in range(i + 1, len(evs)):
                if not is_disjoint(evs[i], evs[j]):
                    return f"error: parts {i + 1} and {j + 1} intersect"
        if not evs:
            return "error: empty part list" if not is_empty(whole) else None
        acc = evs[0]
        for e in evs[1:]:
            acc = union(acc, e)
        if not events_equal(acc, whole):
            return "union of parts differs from the whole"
        return None
    if isinstance(parts, ChainDifferences):
        ch = parts.chain
        # differences are disjoint by construction; union telescopes to
        # A_1 minus the intersection of the chain, which is empty exactly
        # when the radii vanish (open at 0) -- then the union is A_1.
        lim = ch.limit_radius()
        if lim is None:
            return "chain limit unknown"
        if lim != 0:
            return f"chain radii tend to {lim} != 0: union falls short of the whole"
        if not events_equal(whole, family_event(ch, 1)):
            return "whole is not the first chain event"
        if ch.lo_closed:
            return "closed left endpoint: the point 0 escapes every difference"
        return None
    return f"disjointness not checkable for {type(parts).__name__}"


def check_countable_additivity(
    prices: Prices,
    whole: Event,
    parts: EventFamily,
    horizon: int = 1_000_000,
) -> AdditivityVerdict:
    """Compare the price of the whole against the summed part prices.

    The gap is ``P(whole) - sum_i P(part_i)`` as a certified series value;
    ``fails`` carries an enclosure excluding zero.
    """
    reason = _verify_partition(whole, parts)
    if reason is not None:
        if reason.startswith("error:"):
            raise ValueError(reason[len("error:"):].strip())
        return AdditivityVerdict("undetermined", Undetermined(reason), reason)
    whole_price = price_of_event(prices, whole)
    parts_value = _parts_sum(prices, parts, horizon)
    gap = sv_add(Exact(whole_price), sv_neg(parts_value))
    bounds = sv_bounds(gap)
    if bounds is None:
        return AdditivityVerdict("undetermined", gap, "part prices not summable")
    lo, hi = bounds
    if lo == hi == 0:
        return AdditivityVerdict("holds", gap)
    if lo > 0 or hi < 0:
        return AdditivityVerdict("fails", gap, "price gap excludes zero")
    return AdditivityVerdict("undetermined", gap, "gap enclosure straddles zero")
