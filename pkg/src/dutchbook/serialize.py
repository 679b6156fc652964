"""JSON codec for instances and reports.

Rationals travel as ``"p/q"`` strings so no floating point enters the
wire format; every structured object is a tagged dict.  Decoding followed
by encoding is the identity on normalized documents, which the CLI uses
to echo instances back into reports reproducibly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Mapping

from .families import (
    BlockPatternMap,
    ChainDifferences,
    ChainIntervals,
    ConstantFamily,
    CoordinateEvents,
    EventFamily,
    ExplicitFamily,
    FiniteSwapMap,
    FirstOneCylinders,
    IdentityMap,
    IndexMap,
    PairInterleaveMap,
    ReindexedFamily,
)
from .measures import (
    CanonicalMeasure,
    FairCoin,
    FiniteAtomicMeasure,
    LebesgueUnit,
    PriceAssignment,
)
from .portfolios import (
    AlternatingPowerCoeffs,
    CoeffSeq,
    ConcatPortfolio,
    FiniteCoeffs,
    FinitePortfolio,
    GeometricCoeffs,
    InterleavedCoeffs,
    InterleavedPortfolio,
    PermutedCoeffs,
    PermutedPortfolio,
    Portfolio,
    RuleCoeffs,
    RulePortfolio,
    ScaledCoeffs,
)
from .series import (
    Certificate,
    ConstantRule,
    DifferenceRule,
    Divergent,
    Enclosure,
    Exact,
    GeometricRule,
    IndexRule,
    PowerRule,
    ReciprocalRule,
    SeriesValue,
    Undetermined,
)
from .spaces import (
    BinarySequenceSpace,
    BitPoint,
    Cylinder,
    CylinderEvent,
    Event,
    FiniteEvent,
    FinitePoint,
    FiniteSpace,
    Interval,
    IntervalEvent,
    Outcome,
    Space,
    UnitIntervalSpace,
    UnitPoint,
)

__all__ = [
    "ParseError",
    "frac_to_str",
    "str_to_frac",
    "encode_space",
    "decode_space",
    "encode_event",
    "decode_event",
    "encode_outcome",
    "decode_outcome",
    "encode_rule",
    "decode_rule",
    "encode_coeffs",
    "decode_coeffs",
    "encode_index_map",
    "decode_index_map",
    "encode_family",
    "decode_family",
    "encode_portfolio",
    "decode_portfolio",
    "encode_measure",
    "decode_measure",
    "encode_series_value",
    "encode_verdicts",
]


class ParseError(ValueError):
    """An instance document failed to decode."""


def frac_to_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def str_to_frac(s: Any) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        try:
            if "/" in s:
                num, den = s.split("/", 1)
                return Fraction(int(num.strip()), int(den.strip()))
            return Fraction(int(s.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational literal {s!r}: {exc}") from None
    raise ParseError(f"expected a rational as 'p/q' or integer, got {s!r}")


def _tag(obj: Mapping, context: str) -> str:
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise ParseError(f"{context}: expected an object with a 'kind' tag")
    return obj["kind"]


# -- spaces ------------------------------------------------------------------


def encode_space(space: Space) -> dict:
    if isinstance(space, FiniteSpace):
        return {"kind": "finite", "labels": list(space.labels)}
    if isinstance(space, UnitIntervalSpace):
        return {"kind": "unit_interval"}
    if isinstance(space, BinarySequenceSpace):
        return {"kind": "binary_sequences"}
    raise TypeError(type(space).__name__)


def decode_space(obj: Mapping) -> Space:
    kind = _tag(obj, "space")
    if kind == "finite":
        return FiniteSpace(tuple(obj["labels"]))
    if kind == "unit_interval":
        return UnitIntervalSpace()
    if kind == "binary_sequences":
        return BinarySequenceSpace()
    raise ParseError(f"unknown space kind {kind!r}")


# -- events ------------------------------------------------------------------


def encode_event(event: Event) -> dict:
    if isinstance(event, FiniteEvent):
        return {"kind": "finite", "members": sorted(event.members)}
    if isinstance(event, IntervalEvent):
        return {
            "kind": "intervals",
            "pieces": [
                {
                    "lo": frac_to_str(p.lo),
                    "lo_closed": p.lo_closed,
                    "hi": frac_to_str(p.hi),
                    "hi_closed": p.hi_closed,
                }
                for p in event.pieces
            ],
        }
    if isinstance(event, CylinderEvent):
        return {
            "kind": "cylinders",
            "cylinders": [
                {str(c): b for c, b in cyl.fixed} for cyl in event.cylinders
            ],
        }
    raise TypeError(type(event).__name__)


def decode_event(obj: Mapping) -> Event:
    kind = _tag(obj, "event")
    if kind == "finite":
        return FiniteEvent(frozenset(obj["members"]))
    if kind == "intervals":
        return IntervalEvent(
            tuple(
                Interval(
                    str_to_frac(p["lo"]),
                    bool(p["lo_closed"]),
                    str_to_frac(p["hi"]),
                    bool(p["hi_closed"]),
                )
                for p in obj["pieces"]
            )
        )
    if kind == "cylinders":
        return CylinderEvent(
            tuple(
                Cylinder(tuple((int(c), int(b)) for c, b in cyl.items()))
                for cyl in obj["cylinders"]
            )
        )
    raise ParseError(f"unknown event kind {kind!r}")


# -- outcomes ----------------------------------------------------------------


def encode_outcome(w: Outcome) -> dict:
    if isinstance(w, FinitePoint):
        return {"kind": "label", "label": w.label}
    if isinstance(w, UnitPoint):
        return {"kind": "point", "value": frac_to_str(w.value)}
    if isinstance(w, BitPoint):
        return {"kind": "bits", "bits": {str(c): b for c, b in w.bits}, "tail": w.tail}
    raise TypeError(type(w).__name__)


def decode_outcome(obj: Mapping) -> Outcome:
    kind = _tag(obj, "outcome")
    if kind == "label":
        return FinitePoint(obj["label"])
    if kind == "point":
        return UnitPoint(str_to_frac(obj["value"]))
    if kind == "bits":
        return BitPoint(
            tuple((int(c), int(b)) for c, b in obj.get("bits", {}).items()),
            int(obj.get("tail", 0)),
        )
    raise ParseError(f"unknown outcome kind {kind!r}")


# -- index rules -------------------------------------------------------------


def encode_rule(rule: IndexRule) -> dict:
    if isinstance(rule, ConstantRule):
        return {"kind": "constant", "value": frac_to_str(rule.value)}
    if isinstance(rule, PowerRule):
        return {
            "kind": "power",
            "num": frac_to_str(rule.num),
            "shift": rule.shift,
            "power": rule.power,
            "offset": frac_to_str(rule.offset),
        }
    if isinstance(rule, GeometricRule):
        return {
            "kind": "geometric",
            "scale": frac_to_str(rule.scale),
            "ratio": frac_to_str(rule.ratio),
            "offset": frac_to_str(rule.offset),
        }
    if isinstance(rule, ReciprocalRule):
        return {"kind": "reciprocal", "base": encode_rule(rule.base)}
    if isinstance(rule, DifferenceRule):
        return {"kind": "difference", "base": encode_rule(rule.base)}
    raise TypeError(type(rule).__name__)


def decode_rule(obj: Mapping) -> IndexRule:
    kind = _tag(obj, "rule")
    if kind == "constant":
        return ConstantRule(str_to_frac(obj["value"]))
    if kind == "power":
        return PowerRule(
            str_to_frac(obj["num"]),
            int(obj["shift"]),
            int(obj["power"]),
            str_to_frac(obj.get("offset", 0)),
        )
    if kind == "geometric":
        return GeometricRule(
            str_to_frac(obj["scale"]),
            str_to_frac(obj["ratio"]),
            str_to_frac(obj.get("offset", 0)),
        )
    if kind == "reciprocal":
        return ReciprocalRule(decode_rule(obj["base"]))
    if kind == "difference":
        return DifferenceRule(decode_rule(obj["base"]))
    raise ParseError(f"unknown rule kind {kind!r}")


# -- index maps --------------------------------------------------------------


def encode_index_map(m: IndexMap) -> dict:
    if isinstance(m, IdentityMap):
        return {"kind": "identity"}
    if isinstance(m, FiniteSwapMap):
        return {"kind": "finite_swap", "transpositions": [list(t) for t in m.transpositions]}
    if isinstance(m, BlockPatternMap):
        return {"kind": "block_pattern"}
    if isinstance(m, PairInterleaveMap):
        return {"kind": "pair_interleave"}
    raise TypeError(type(m).__name__)


def decode_index_map(obj: Mapping) -> IndexMap:
    kind = _tag(obj, "index map")
    if kind == "identity":
        return IdentityMap()
    if kind == "finite_swap":
        return FiniteSwapMap(tuple((int(a), int(b)) for a, b in obj["transpositions"]))
    if kind == "block_pattern":
        return BlockPatternMap()
    if kind == "pair_interleave":
        return PairInterleaveMap()
    raise ParseError(f"unknown index map kind {kind!r}")


# -- coefficient sequences ---------------------------------------------------


def encode_coeffs(cs: CoeffSeq) -> dict:
    if isinstance(cs, FiniteCoeffs):
        return {"kind": "finite_list", "values": [frac_to_str(v) for v in cs.values]}
    if isinstance(cs, GeometricCoeffs):
        return {
            "kind": "geometric",
            "first": frac_to_str(cs.first),
            "ratio": frac_to_str(cs.ratio),
        }
    if isinstance(cs, AlternatingPowerCoeffs):
        return {
            "kind": "alternating_power",
            "scale": frac_to_str(cs.scale),
            "shift": cs.shift,
            "power": cs.power,
        }
    if isinstance(cs, RuleCoeffs):
        return {"kind": "rule", "rule": encode_rule(cs.rule)}
    if isinstance(cs, ScaledCoeffs):
        return {"kind": "scaled", "base": encode_coeffs(cs.base), "rule": encode_rule(cs.rule)}
    if isinstance(cs, PermutedCoeffs):
        return {
            "kind": "permuted",
            "base": encode_coeffs(cs.base),
            "map": encode_index_map(cs.index_map),
        }
    if isinstance(cs, InterleavedCoeffs):
        return {
            "kind": "interleaved",
            "odd": encode_coeffs(cs.odd),
            "even": encode_coeffs(cs.even),
        }
    raise TypeError(type(cs).__name__)


def decode_coeffs(obj: Mapping) -> CoeffSeq:
    kind = _tag(obj, "coefficients")
    if kind == "finite_list":
        return FiniteCoeffs(tuple(str_to_frac(v) for v in obj["values"]))
    if kind == "geometric":
        return GeometricCoeffs(str_to_frac(obj["first"]), str_to_frac(obj["ratio"]))
    if kind == "alternating_power":
        return AlternatingPowerCoeffs(
            str_to_frac(obj["scale"]), int(obj["shift"]), int(obj["power"])
        )
    if kind == "rule":
        return RuleCoeffs(decode_rule(obj["rule"]))
    if kind == "scaled":
        return ScaledCoeffs(decode_coeffs(obj["base"]), decode_rule(obj["rule"]))
    if kind == "permuted":
        return PermutedCoeffs(decode_coeffs(obj["base"]), decode_index_map(obj["map"]))
    if kind == "interleaved":
        return InterleavedCoeffs(decode_coeffs(obj["odd"]), decode_coeffs(obj["even"]))
    raise ParseError(f"unknown coefficient kind {kind!r}")


# -- families ----------------------------------------------------------------


def encode_family(fam: EventFamily) -> dict:
    if isinstance(fam, ExplicitFamily):
        return {"kind": "explicit", "events": [encode_event(e) for e in fam.events]}
    if isinstance(fam, ChainIntervals):
        return {
            "kind": "chain_intervals",
            "rule": encode_rule(fam.rule),
            "lo_closed": fam.lo_closed,
            "hi_closed": fam.hi_closed,
        }
    if isinstance(fam, ChainDifferences):
        return {"kind": "chain_differences", "chain": encode_family(fam.chain)}
    if isinstance(fam, CoordinateEvents):
        return {"kind": "coordinates"}
    if isinstance(fam, FirstOneCylinders):
        return {"kind": "first_one_cylinders"}
    if isinstance(fam, ConstantFamily):
        return {"kind": "constant", "event": encode_event(fam.event)}
    if isinstance(fam, ReindexedFamily):
        return {
            "kind": "reindexed",
            "base": encode_family(fam.base),
            "map": encode_index_map(fam.index_map),
        }
    raise TypeError(type(fam).__name__)


def decode_family(obj: Mapping) -> EventFamily:
    kind = _tag(obj, "family")
    if kind == "explicit":
        return ExplicitFamily(tuple(decode_event(e) for e in obj["events"]))
    if kind == "chain_intervals":
        return ChainIntervals(
            decode_rule(obj["rule"]),
            bool(obj.get("lo_closed", False)),
            bool(obj.get("hi_closed", False)),
        )
    if kind == "chain_differences":
        chain = decode_family(obj["chain"])
        if not isinstance(chain, ChainIntervals):
            raise ParseError("chain_differences needs a chain_intervals base")
        return ChainDifferences(chain)
    if kind == "coordinates":
        return CoordinateEvents()
    if kind == "first_one_cylinders":
        return FirstOneCylinders()
    if kind == "constant":
        return ConstantFamily(decode_event(obj["event"]))
    if kind == "reindexed":
        return ReindexedFamily(decode_family(obj["base"]), decode_index_map(obj["map"]))
    raise ParseError(f"unknown family kind {kind!r}")


# -- portfolios --------------------------------------------------------------


def encode_portfolio(pf: Portfolio) -> dict:
    if isinstance(pf, FinitePortfolio):
        return {
            "kind": "finite",
            "bets": [[frac_to_str(a), encode_event(e)] for a, e in pf.bets],
        }
    if isinstance(pf, RulePortfolio):
        return {
            "kind": "rule",
            "coeffs": encode_coeffs(pf.coeffs),
            "family": encode_family(pf.family),
        }
    if isinstance(pf, ConcatPortfolio):
        return {
            "kind": "concat",
            "head": [[frac_to_str(a), encode_event(e)] for a, e in pf.head],
            "tail": encode_portfolio(pf.tail),
        }
    if isinstance(pf, InterleavedPortfolio):
        return {
            "kind": "interleave",
            "odd": encode_portfolio(pf.odd),
            "even": encode_portfolio(pf.even),
        }
    if isinstance(pf, PermutedPortfolio):
        return {
            "kind": "permuted",
            "base": encode_portfolio(pf.base),
            "map": encode_index_map(pf.index_map),
        }
    raise TypeError(type(pf).__name__)


def decode_portfolio(obj: Mapping) -> Portfolio:
    kind = _tag(obj, "portfolio")
    if kind == "finite":
        return FinitePortfolio(
            tuple((str_to_frac(a), decode_event(e)) for a, e in obj["bets"])
        )
    if kind == "rule":
        return RulePortfolio(decode_coeffs(obj["coeffs"]), decode_family(obj["family"]))
    if kind == "concat":
        return ConcatPortfolio(
            tuple((str_to_frac(a), decode_event(e)) for a, e in obj["head"]),
            decode_portfolio(obj["tail"]),
        )
    if kind == "interleave":
        return InterleavedPortfolio(
            decode_portfolio(obj["odd"]), decode_portfolio(obj["even"])
        )
    if kind == "permuted":
        return PermutedPortfolio(
            decode_portfolio(obj["base"]), decode_index_map(obj["map"])
        )
    raise ParseError(f"unknown portfolio kind {kind!r}")


# -- measures ----------------------------------------------------------------


def encode_measure(m: CanonicalMeasure) -> dict:
    if isinstance(m, FiniteAtomicMeasure):
        return {
            "kind": "finite_atomic",
            "space": encode_space(m.space),
            "weights": {lab: frac_to_str(w) for lab, w in m.weights},
        }
    if isinstance(m, LebesgueUnit):
        return {"kind": "lebesgue_unit"}
    if isinstance(m, FairCoin):
        return {"kind": "fair_coin"}
    raise TypeError(type(m).__name__)


def decode_measure(obj: Mapping) -> CanonicalMeasure:
    kind = _tag(obj, "measure")
    if kind == "finite_atomic":
        space = decode_space(obj["space"])
        return FiniteAtomicMeasure(
            space, tuple((lab, str_to_frac(w)) for lab, w in obj["weights"].items())
        )
    if kind == "lebesgue_unit":
        return LebesgueUnit()
    if kind == "fair_coin":
        return FairCoin()
    raise ParseError(f"unknown measure kind {kind!r}")


# -- outputs -----------------------------------------------------------------


def _encode_certificate(c: Certificate) -> dict:
    out: dict[str, Any] = {"kind": c.kind}
    if c.cut_index is not None:
        out["cut_index"] = c.cut_index
    if c.tail_bound is not None:
        out["tail_bound"] = frac_to_str(c.tail_bound)
    if c.note:
        out["note"] = c.note
    return out


def encode_series_value(v: SeriesValue) -> dict:
    if isinstance(v, Exact):
        return {
            "kind": "exact",
            "value": frac_to_str(v.value),
            "certificate": _encode_certificate(v.certificate),
        }
    if isinstance(v, Enclosure):
        return {
            "kind": "enclosure",
            "lo": frac_to_str(v.lo),
            "hi": frac_to_str(v.hi),
            "certificate": _encode_certificate(v.certificate),
        }
    if isinstance(v, Divergent):
        return {"kind": "divergent", "direction": v.direction, "reason": v.reason}
    if isinstance(v, Undetermined):
        return {"kind": "undetermined", "reason": v.reason}
    raise TypeError(type(v).__name__)


def encode_verdicts(sv) -> dict:
    return {
        name: {"status": verdict.status, "detail": verdict.detail}
        for name, verdict in sv.as_dict().items()
    }
