"""Event collections, generated fields, atoms, and finite atomic partitions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from .families import ChainDifferences, EventFamily
from .measures import (
    CanonicalMeasure,
    PriceAssignment,
    Prices,
    measure_of,
    price_rule_for_family,
)
from .series import DifferenceRule, rule_is_positive
from .spaces import (
    Event,
    FiniteEvent,
    FiniteSpace,
    Space,
    complement,
    is_disjoint,
    is_subset,
    union,
)

__all__ = [
    "EventCollection",
    "generate_field",
    "Atom",
    "atoms",
    "PFiniteVerdict",
    "is_p_finite",
]


# ---------------------------------------------------------------------------
# Collections
# ---------------------------------------------------------------------------

_TAGS = ("unstructured", "field", "decreasing_chain", "disjoint_family")


@dataclass(frozen=True)
class EventCollection:
    """An ordered list of events with an optional structure tag.

    Tag promises are verified on construction for finite spaces:
    ``field`` means closed under complement and pairwise union,
    ``decreasing_chain`` means each event contains the next, and
    ``disjoint_family`` means pairwise empty intersections.
    """

    space: Space
    events: tuple[Event, ...]
    tag: str = "unstructured"

    def __post_init__(self) -> None:
        if self.tag not in _TAGS:
            raise ValueError(f"unknown collection tag {self.tag!r}")
        if self.tag == "field":
            self._verify_field()
        elif self.tag == "decreasing_chain":
            for a, b in zip(self.events, self.events[1:]):
                if not is_subset(b, a):
                    raise ValueError("chain events must be decreasing")
        elif self.tag == "disjoint_family":
            for i in range(len(self.events)):
                for j in range(i + 1, len(self.events)):
                    if not is_disjoint(self.events[i], self.events[j]):
                        raise ValueError(f"events {i + 1} and {j + 1} intersect")

    def _verify_field(self) -> None:
        if not isinstance(self.space, FiniteSpace):
            # symbolic spaces: full closure is lazy; spot-check complements
            # of the listed members as witnesses when the list is complete
            members = set(self.events)
            witnesses = [e for e in self.events[:8] if complement(e) in members]
            if self.events and not witnesses:
                raise ValueError(
                    "collection tagged field shows no complement-closure witness"
                )
            return
        members = set(self.events)
        for e in self.events:
            if complement(e, self.space) not in members:
                raise ValueError(f"field misses the complement of {sorted(e.members)}")
        for a in self.events:
            for b in self.events:
                if union(a, b) not in members:
                    raise ValueError("field misses a pairwise union")

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


def generate_field(space: Space, generators: EventCollection | tuple[Event, ...]) -> EventCollection:
    """The smallest field over a finite space containing the generators.

    Computed through the outcome partition the generators induce: members
    are exactly the unions of partition cells, which is minimal by
    construction.  Symbolic spaces are rejected; their field closures stay
    lazy elsewhere.
    """
    if not isinstance(space, FiniteSpace):
        raise ValueError("field generation is only supported on finite spaces")
    gen_events = tuple(generators) if not isinstance(generators, EventCollection) else generators.events
    profiles: dict[tuple[bool, ...], set[str]] = {}
    for lab in space.labels:
        prof = tuple(lab in g.members for g in gen_events)  # type: ignore[union-attr]
        profiles.setdefault(prof, set()).add(lab)
    cells = [frozenset(v) for v in profiles.values()]
    if len(cells) > 20:
        raise ValueError("generated field would be too large to enumerate")
    members: list[FiniteEvent] = []
    for mask in range(1 << len(cells)):
        acc: set[str] = set()
        for k, cell in enumerate(cells):
            if mask >> k & 1:
                acc |= cell
        members.append(FiniteEvent(frozenset(acc)))
    unique = sorted(set(members), key=FiniteEvent.sort_key)
    return EventCollection(space, tuple(unique), "field")


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    event: FiniteEvent
    weight: Fraction


WeightSource = Union[PriceAssignment, CanonicalMeasure, Prices]


def _weight_fn(field: EventCollection, weights: WeightSource) -> Callable[[FiniteEvent], Fraction]:
    from .measures import FiniteAtomicMeasure, MeasurePrices, PriceError

    if isinstance(weights, FiniteAtomicMeasure):
        return lambda e: measure_of(weights, e)
    if isinstance(weights, MeasurePrices):
        return lambda e: measure_of(weights.measure, e)
    if isinstance(weights, PriceAssignment):
        def fn(e: FiniteEvent) -> Fraction:
            p = weights.lookup(e)
            if p is None:
                raise PriceError(f"weights undefined on field member {sorted(e.members)}")
            return p

        return fn
    raise TypeError(f"unsupported weight source {type(weights).__name__}")


def atoms(field: EventCollection, weights: WeightSource) -> list[Atom]:
    """All inclusion-minimal atoms of a weighted finite field.

    An atom has positive weight and no measurable subevent of strictly
    intermediate weight.  Minimal representatives are returned, which
    drops null padding (an atom glued to a weight-zero cell is reported
    without it); for additive weights these are pairwise disjoint and
    their weights sum to the weight of the whole space.
    """
    if field.tag != "field" or not isinstance(field.space, FiniteSpace):
        raise ValueError("atoms require a field over a finite space")
    wf = _weight_fn(field, weights)
    table: dict[FiniteEvent, Fraction] = {}
    for e in field.events:
        w = wf(e)  # raises when undefined
        if w < 0:
            raise ValueError(f"negative weight {w} on {sorted(e.members)}")
        table[e] = w
    all_atoms: list[FiniteEvent] = []
    for e, w in table.items():
        if w <= 0:
            continue
        if all(table[b] in (0, w) for b in field.events if is_subset(b, e)):
            all_atoms.append(e)
    minimal = [
        a
        for a in all_atoms
        if not any(b != a and is_subset(b, a) for b in all_atoms)
    ]
    minimal.sort(key=FiniteEvent.sort_key)
    return [Atom(a, table[a]) for a in minimal]


# ---------------------------------------------------------------------------
# Finite atomic partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PFiniteVerdict:
    status: str  # "yes" | "no"
    partition: tuple[Atom, ...] = ()
    witness: Optional[EventFamily] = None
    detail: str = ""


def _check_additive(field: EventCollection, table: dict[FiniteEvent, Fraction]) -> None:
    for a in field.events:
        for b in field.events:
            if is_disjoint(a, b):
                u = union(a, b)
                if table[u] != table[a] + table[b]:
                    raise ValueError(
                        "weights are not finitely additive: "
                        f"{sorted(a.members)} + {sorted(b.members)}"
                    )


def is_p_finite(
    weights: WeightSource,
    field: EventCollection | EventFamily,
) -> PFiniteVerdict:
    """Decide whether the whole space splits into finitely many atoms.

    Two input shapes are accepted.  A finite-space field always yields
    ``yes`` (zero-weight outcomes are absorbed into the first positive
    atom) and the verdict carries the partition.  A closed-form infinite
    disjoint family whose prices are provably positive witnesses ``no``:
    it is exactly an infinite disjoint family of positive-weight events.
    """
    if isinstance(field, EventCollection):
        if field.tag != "field" or not isinstance(field.space, FiniteSpace):
            raise ValueError("p-finiteness over collections needs a finite field")
        wf = _weight_fn(field, weights)
        table = {e: wf(e) for e in field.events}
        if any(w < 0 for w in table.values()):
            raise ValueError("negative weight encountered")
        _check_additive(field, table)
        atom_list = atoms(field, weights)
        if not atom_list:
            raise ValueError("no positive-weight atoms: weights vanish everywhere")
        # absorb zero-weight outcomes into the first atom so the partition
        # covers the whole space
        covered: set[str] = set()
        for a in atom_list:
            covered |= set(a.event.members)
        leftovers = frozenset(field.space.labels) - covered
        parts = list(atom_list)
        if leftovers:
            first = parts[0]
            parts[0] = Atom(FiniteEvent(first.event.members | leftovers), first.weight)
        return PFiniteVerdict(
            "yes",
            tuple(parts),
            detail=(
                "finite space: no infinite disjoint positive family can exist, "
                f"{len(parts)} atoms partition the space"
            ),
        )
    fam = field
    if isinstance(fam, ChainDifferences):
        if not isinstance(weights, (PriceAssignment,)):
            raise ValueError("symbolic p-finiteness check needs a price assignment")
        rule = weights.rule_for(fam)
        if rule is None:
            base = weights.rule_for(fam.chain)
            if base is not None:
                rule = DifferenceRule(base)
        if rule is None:
            raise ValueError("no price rule for the difference family")
        if rule_is_positive(rule):
            return PFiniteVerdict(
                "no",
                witness=fam,
                detail="infinite disjoint family with provably positive prices",
            )
        raise ValueError("family prices are not provably positive: no verdict")
    raise ValueError(f"unsupported p-finiteness input {type(fam).__name__}")
