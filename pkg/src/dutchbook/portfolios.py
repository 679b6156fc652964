"""Betting portfolios: coefficient grammar, prices, balances, classification.

A portfolio pairs a coefficient sequence with an event family.  Composite
portfolios arise from the closure operations: negation, interleaving
(odd positions from the first portfolio, even from the second), index
permutation, and prefixing finitely many explicit bets.

Prices and balances are certified series values.  Classification into the
five betting systems is three-valued: ``in`` and ``out`` verdicts carry a
reason, everything the grammar cannot decide is an honest ``unknown``.
The five membership conditions, for a portfolio with coefficients a_i on
events A_i under prices P:

* system 1: only finitely many a_i are nonzero;
* system 2: sum |a_i| P(A_i) converges and the balance converges at every
  outcome;
* system 2B: sum |a_i (I_i - P_i)| is uniformly bounded over outcomes;
* system 2A: sum |a_i (I_i - P_i)| is finite at every outcome;
* system 3: the price series converges and the balance converges at every
  outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

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
    IndicatorProfile,
    PairInterleaveMap,
    ReindexedFamily,
    family_event,
    family_is_finite,
    family_length,
    family_stuck_possible,
    indicator_profile,
    map_apply,
    map_inverse_apply,
)
from .measures import Prices, price_of_event, price_rule_for_family
from .series import (
    AltPowerStream,
    BlockRearrangedStream,
    Certificate,
    ConstTermStream,
    ConstantRule,
    DifferenceRule,
    Enclosure,
    Exact,
    ExactStream,
    FiniteStream,
    GeomStream,
    GeometricRule,
    IndexRule,
    PowerGeomStream,
    PowerRule,
    PowerStream,
    ReciprocalRule,
    SeriesValue,
    Stream,
    Undetermined,
    UnknownStream,
    evaluate_streams,
    rule_is_positive,
    rule_is_strictly_decreasing,
    rule_one_minus,
    rule_scale,
    rule_to_streams,
    rules_product,
    streams_converge,
    sv_add,
    sv_neg,
)
from .spaces import Event, Outcome, eval_indicator

__all__ = [
    "FiniteCoeffs",
    "GeometricCoeffs",
    "AlternatingPowerCoeffs",
    "RuleCoeffs",
    "ScaledCoeffs",
    "PermutedCoeffs",
    "InterleavedCoeffs",
    "CoeffSeq",
    "coeff_value",
    "FinitePortfolio",
    "RulePortfolio",
    "ConcatPortfolio",
    "InterleavedPortfolio",
    "PermutedPortfolio",
    "Portfolio",
    "portfolio_bet",
    "portfolio_is_finite",
    "negate",
    "interleave",
    "permute",
    "series_sum",
    "price_of",
    "balance_at",
    "Verdict",
    "SystemVerdict",
    "classify",
]


# ---------------------------------------------------------------------------
# Coefficient sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteCoeffs:
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))


@dataclass(frozen=True)
class GeometricCoeffs:
    """``a_i = first * ratio**(i-1)`` with 0 < |ratio| < 1."""

    first: Fraction
    ratio: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "first", Fraction(self.first))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if not (0 < abs(self.ratio) < 1):
            raise ValueError("geometric coefficients need 0 < |ratio| < 1")


@dataclass(frozen=True)
class AlternatingPowerCoeffs:
    """``a_i = scale * (-1)**i / (i + shift)**power``."""

    scale: Fraction
    shift: int
    power: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.shift < 0 or self.power < 1:
            raise ValueError("alternating power coefficients need shift >= 0, power >= 1")


@dataclass(frozen=True)
class RuleCoeffs:
    """Coefficients read off an index rule (covers constant sequences)."""

    rule: IndexRule


@dataclass(frozen=True)
class ScaledCoeffs:
    base: "CoeffSeq"
    rule: IndexRule


@dataclass(frozen=True)
class PermutedCoeffs:
    base: "CoeffSeq"
    index_map: IndexMap


@dataclass(frozen=True)
class InterleavedCoeffs:
    odd: "CoeffSeq"
    even: "CoeffSeq"


CoeffSeq = Union[
    FiniteCoeffs,
    GeometricCoeffs,
    AlternatingPowerCoeffs,
    RuleCoeffs,
    ScaledCoeffs,
    PermutedCoeffs,
    InterleavedCoeffs,
]


def coeff_value(cs: CoeffSeq, i: int) -> Fraction:
    if i < 1:
        raise IndexError("coefficient indices start at 1")
    if isinstance(cs, FiniteCoeffs):
        return cs.values[i - 1] if i <= len(cs.values) else Fraction(0)
    if isinstance(cs, GeometricCoeffs):
        return cs.first * cs.ratio ** (i - 1)
    if isinstance(cs, AlternatingPowerCoeffs):
        return cs.scale * Fraction((-1) ** i, (i + cs.shift) ** cs.power)
    if isinstance(cs, RuleCoeffs):
        return cs.rule.value_at(i)
    if isinstance(cs, ScaledCoeffs):
        return coeff_value(cs.base, i) * cs.rule.value_at(i)
    if isinstance(cs, PermutedCoeffs):
        return coeff_value(cs.base, map_apply(cs.index_map, i))
    if isinstance(cs, InterleavedCoeffs):
        half, pos = divmod(i + 1, 2)
        return coeff_value(cs.odd if pos == 0 else cs.even, half)
    raise TypeError(f"unknown coefficient sequence {type(cs).__name__}")


def negate_coeffs(cs: CoeffSeq) -> CoeffSeq:
    if isinstance(cs, FiniteCoeffs):
        return FiniteCoeffs(tuple(-v for v in cs.values))
    if isinstance(cs, GeometricCoeffs):
        return GeometricCoeffs(-cs.first, cs.ratio)
    if isinstance(cs, AlternatingPowerCoeffs):
        return AlternatingPowerCoeffs(-cs.scale, cs.shift, cs.power)
    if isinstance(cs, RuleCoeffs):
        return RuleCoeffs(rule_scale(cs.rule, Fraction(-1)))
    if isinstance(cs, ScaledCoeffs):
        return ScaledCoeffs(negate_coeffs(cs.base), cs.rule)
    if isinstance(cs, PermutedCoeffs):
        return PermutedCoeffs(negate_coeffs(cs.base), cs.index_map)
    if isinstance(cs, InterleavedCoeffs):
        return InterleavedCoeffs(negate_coeffs(cs.odd), negate_coeffs(cs.even))
    raise TypeError(f"unknown coefficient sequence {type(cs).__name__}")


def abs_coeffs(cs: CoeffSeq) -> Optional[CoeffSeq]:
    """A grammar expression for ``|a_i|``, when one exists."""
    if isinstance(cs, FiniteCoeffs):
        return FiniteCoeffs(tuple(abs(v) for v in cs.values))
    if isinstance(cs, GeometricCoeffs):
        return GeometricCoeffs(abs(cs.first), abs(cs.ratio))
    if isinstance(cs, AlternatingPowerCoeffs):
        return RuleCoeffs(PowerRule(abs(cs.scale), cs.shift, cs.power, Fraction(0)))
    if isinstance(cs, RuleCoeffs):
        return RuleCoeffs(_abs_rule(cs.rule)) if _abs_rule(cs.rule) is not None else None
    if isinstance(cs, ScaledCoeffs):
        base = abs_coeffs(cs.base)
        rule = _abs_rule(cs.rule)
        if base is None or rule is None:
            return None
        return ScaledCoeffs(base, rule)
    if isinstance(cs, PermutedCoeffs):
        base = abs_coeffs(cs.base)
        return None if base is None else PermutedCoeffs(base, cs.index_map)
    if isinstance(cs, InterleavedCoeffs):
        odd, even = abs_coeffs(cs.odd), abs_coeffs(cs.even)
        if odd is None or even is None:
            return None
        return InterleavedCoeffs(odd, even)
    return None


def _abs_rule(rule: IndexRule) -> Optional[IndexRule]:
    if rule_is_positive(rule):
        return rule
    if isinstance(rule, ConstantRule):
        return ConstantRule(abs(rule.value))
    try:
        neg = rule_scale(rule, Fraction(-1))
    except ValueError:
        return None
    if rule_is_positive(neg) or _rule_is_nonnegative(neg):
        return neg
    if _rule_is_nonnegative(rule):
        return rule
    return None


def _rule_is_nonnegative(rule: IndexRule) -> Optional[bool]:
    if isinstance(rule, ConstantRule):
        return rule.value >= 0
    if isinstance(rule, PowerRule):
        if rule.num >= 0 and rule.offset >= 0:
            return True
        if rule.num <= 0 <= rule.offset:
            return rule.value_at(1) >= 0
        return None
    if isinstance(rule, GeometricRule):
        if rule.ratio > 0:
            if rule.scale >= 0:
                return rule.offset >= 0
            return rule.value_at(1) >= 0
        return None
    pos = rule_is_positive(rule)
    return True if pos else None


def coeff_finite_support(cs: CoeffSeq) -> Optional[bool]:
    if isinstance(cs, FiniteCoeffs):
        return True
    if isinstance(cs, GeometricCoeffs):
        return cs.first == 0
    if isinstance(cs, AlternatingPowerCoeffs):
        return cs.scale == 0
    if isinstance(cs, RuleCoeffs):
        return _rule_eventually_nonzero(cs.rule)
    if isinstance(cs, ScaledCoeffs):
        base = coeff_finite_support(cs.base)
        if base:
            return True
        if base is False and _rule_never_zero(cs.rule):
            return False
        return None
    if isinstance(cs, PermutedCoeffs):
        return coeff_finite_support(cs.base)
    if isinstance(cs, InterleavedCoeffs):
        a, b = coeff_finite_support(cs.odd), coeff_finite_support(cs.even)
        if a is None or b is None:
            return None
        return a and b
    return None


def _rule_eventually_nonzero(rule: IndexRule) -> Optional[bool]:
    """True when the rule has finite support (is eventually zero)."""
    if isinstance(rule, ConstantRule):
        return rule.value == 0
    if isinstance(rule, PowerRule):
        if rule.num == 0:
            return rule.offset == 0
        if rule.offset == 0:
            return False
        return None  # num/(i+s)^p + offset may vanish at finitely many i
    if isinstance(rule, GeometricRule):
        if rule.scale == 0:
            return rule.offset == 0
        if rule.offset == 0:
            return False
        return None
    if isinstance(rule, ReciprocalRule):
        return False  # never zero
    return None


def _rule_never_zero(rule: IndexRule) -> bool:
    pos = rule_is_positive(rule)
    if pos:
        return True
    try:
        neg = rule_scale(rule, Fraction(-1))
    except ValueError:
        return False
    return bool(rule_is_positive(neg))


def coeff_terms_bounded(cs: CoeffSeq) -> Optional[bool]:
    if isinstance(cs, (FiniteCoeffs, GeometricCoeffs, AlternatingPowerCoeffs)):
        return True
    if isinstance(cs, RuleCoeffs):
        return _rule_bounded(cs.rule)
    if isinstance(cs, ScaledCoeffs):
        a, b = coeff_terms_bounded(cs.base), _rule_bounded(cs.rule)
        if a and b:
            return True
        if a is False or b is False:
            return None  # a product can still be bounded
        return None
    if isinstance(cs, PermutedCoeffs):
        return coeff_terms_bounded(cs.base)
    if isinstance(cs, InterleavedCoeffs):
        a, b = coeff_terms_bounded(cs.odd), coeff_terms_bounded(cs.even)
        if a is None or b is None:
            return None
        return a and b
    return None


def _rule_bounded(rule: IndexRule) -> Optional[bool]:
    if isinstance(rule, (ConstantRule, PowerRule, GeometricRule)):
        return True
    if isinstance(rule, ReciprocalRule):
        lim = rule.base.limit()
        if lim is None:
            return None
        if lim != 0:
            return True
        # terms 1/base(i) blow up when base vanishes monotonically
        if rule_is_strictly_decreasing(rule.base) and rule_is_positive(rule.base):
            return False
        return None
    if isinstance(rule, DifferenceRule):
        return _rule_bounded(rule.base)
    return None


# ---------------------------------------------------------------------------
# Coefficient/rule products as certified streams
# ---------------------------------------------------------------------------


def _difference_expansion(rule: DifferenceRule) -> Optional[list[IndexRule]]:
    base = rule.base
    if isinstance(base, ConstantRule):
        return [ConstantRule(Fraction(0))]
    if isinstance(base, PowerRule):
        out: list[IndexRule] = []
        if base.num != 0:
            out.append(PowerRule(base.num, base.shift, base.power, Fraction(0)))
            out.append(PowerRule(-base.num, base.shift + 1, base.power, Fraction(0)))
        return out or [ConstantRule(Fraction(0))]
    if isinstance(base, GeometricRule):
        if base.scale == 0:
            return [ConstantRule(Fraction(0))]
        return [GeometricRule(base.scale * (1 - base.ratio), base.ratio, Fraction(0))]
    return None


def combine(cs: CoeffSeq, rule: IndexRule) -> list[Stream]:
    """Streams for ``sum_i a_i * rule(i)``."""
    if isinstance(rule, DifferenceRule):
        expanded = _difference_expansion(rule)
        if expanded is None:
            return [UnknownStream("difference rule not expandable")]
        out: list[Stream] = []
        for r in expanded:
            out.extend(combine(cs, r))
        return out
    if isinstance(cs, FiniteCoeffs):
        terms = tuple(
            (i, v * rule.value_at(i))
            for i, v in enumerate(cs.values, start=1)
            if v != 0
        )
        return [FiniteStream(terms)]
    if isinstance(cs, RuleCoeffs):
        prod = rules_product(cs.rule, rule)
        if prod is None:
            return [UnknownStream("rule product outside the grammar")]
        out = []
        for r in prod:
            out.extend(rule_to_streams(r))
        return out
    if isinstance(cs, GeometricCoeffs):
        first, ratio = cs.first, cs.ratio
        if first == 0:
            return [ExactStream(Fraction(0), "FiniteSum")]
        if isinstance(rule, ConstantRule):
            if rule.value == 0:
                return [ExactStream(Fraction(0), "FiniteSum")]
            return [GeomStream(first * rule.value, ratio)]
        if isinstance(rule, PowerRule):
            out = []
            if rule.offset != 0:
                out.append(GeomStream(first * rule.offset, ratio))
            if rule.num != 0:
                out.append(
                    PowerGeomStream(first * rule.num / ratio, ratio, rule.shift, rule.power)
                )
            return out or [ExactStream(Fraction(0), "FiniteSum")]
        if isinstance(rule, GeometricRule):
            out = []
            if rule.offset != 0:
                out.append(GeomStream(first * rule.offset, ratio))
            if rule.scale != 0:
                out.append(GeomStream(first * rule.scale * rule.ratio, ratio * rule.ratio))
            return out
        return [UnknownStream("geometric coefficients with an unsupported rule")]
    if isinstance(cs, AlternatingPowerCoeffs):
        c, s, p = cs.scale, cs.shift, cs.power
        if c == 0:
            return [ExactStream(Fraction(0), "FiniteSum")]
        if isinstance(rule, ConstantRule):
            if rule.value == 0:
                return [ExactStream(Fraction(0), "FiniteSum")]
            return [AltPowerStream(c * rule.value, s, p)]
        if isinstance(rule, PowerRule):
            out = []
            if rule.offset != 0:
                out.append(AltPowerStream(c * rule.offset, s, p))
            if rule.num != 0:
                if rule.shift == s:
                    out.append(AltPowerStream(c * rule.num, s, p + rule.power))
                elif p == 1 and rule.power == 1:
                    factor = c * rule.num / Fraction(rule.shift - s)
                    out.append(AltPowerStream(factor, s, 1))
                    out.append(AltPowerStream(-factor, rule.shift, 1))
                else:
                    return [UnknownStream("mixed shifts at higher powers")]
            return out or [ExactStream(Fraction(0), "FiniteSum")]
        if isinstance(rule, GeometricRule):
            out = []
            if rule.offset != 0:
                out.append(AltPowerStream(c * rule.offset, s, p))
            if rule.scale != 0:
                out.append(PowerGeomStream(c * rule.scale, -rule.ratio, s, p))
            return out or [ExactStream(Fraction(0), "FiniteSum")]
        return [UnknownStream("alternating coefficients with an unsupported rule")]
    if isinstance(cs, ScaledCoeffs):
        prod = rules_product(cs.rule, rule)
        if prod is None:
            return [UnknownStream("scaled coefficients: rule product outside the grammar")]
        out = []
        for r in prod:
            out.extend(combine(cs.base, r))
        return out
    if isinstance(cs, PermutedCoeffs):
        if isinstance(cs.index_map, IdentityMap):
            return combine(cs.base, rule)
        if isinstance(cs.index_map, FiniteSwapMap):
            base_streams = combine(cs.base, rule)
            moved = sorted(cs.index_map.moved_indices())
            corrections = tuple(
                (
                    i,
                    (coeff_value(cs.base, map_apply(cs.index_map, i)) - coeff_value(cs.base, i))
                    * rule.value_at(i),
                )
                for i in moved
            )
            return base_streams + [FiniteStream(corrections)]
        return [UnknownStream("permuted coefficients against an index-dependent rule")]
    if isinstance(cs, InterleavedCoeffs):
        return [UnknownStream("interleaved coefficients need portfolio-level pairing")]
    raise TypeError(f"unknown coefficient sequence {type(cs).__name__}")


def _stream_permutation_invariant(s: Stream) -> Optional[bool]:
    """Whether arbitrary rearrangement provably keeps the stream's value
    and convergence status."""
    if isinstance(s, (FiniteStream, GeomStream, PowerGeomStream)):
        return True
    if isinstance(s, (AltPowerStream,)):
        return s.power >= 2 or s.scale == 0
    if isinstance(s, PowerStream):
        return True  # one-signed: value or divergence invariant
    if isinstance(s, ConstTermStream):
        return True
    if isinstance(s, ExactStream):
        return True if s.method in ("FiniteSum", "ClosedForm", "Telescoping-monotone") else None
    return None


def permute_streams(streams: list[Stream], m: IndexMap) -> list[Stream]:
    if isinstance(m, IdentityMap):
        return streams
    if isinstance(m, (FiniteSwapMap, PairInterleaveMap)):
        # bounded-displacement permutations preserve every sum and every
        # divergence (partial sums agree up to finitely many terms)
        return streams
    if isinstance(m, BlockPatternMap):
        out: list[Stream] = []
        for s in streams:
            if isinstance(s, AltPowerStream) and s.power == 1 and s.scale != 0:
                out.append(BlockRearrangedStream(s.scale, s.shift))
            elif _stream_permutation_invariant(s):
                out.append(s)
            else:
                out.append(UnknownStream("stream not certified under the block rearrangement"))
        return out
    return [UnknownStream(f"unsupported index map {type(m).__name__}")]


# ---------------------------------------------------------------------------
# Portfolios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinitePortfolio:
    bets: tuple[tuple[Fraction, Event], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "bets", tuple((Fraction(a), e) for a, e in self.bets)
        )


@dataclass(frozen=True)
class RulePortfolio:
    coeffs: CoeffSeq
    family: EventFamily

    def __post_init__(self) -> None:
        cf = isinstance(self.coeffs, FiniteCoeffs)
        ff = family_is_finite(self.family)
        if cf != ff:
            raise ValueError("coefficients and events must index over the same range")
        if cf and ff:
            n = family_length(self.family)
            if n is not None and len(self.coeffs.values) != n:  # type: ignore[union-attr]
                raise ValueError("finite coefficient list and family lengths differ")


@dataclass(frozen=True)
class ConcatPortfolio:
    """Finitely many explicit leading bets followed by a countable tail."""

    head: tuple[tuple[Fraction, Event], ...]
    tail: "Portfolio"


@dataclass(frozen=True)
class InterleavedPortfolio:
    odd: "Portfolio"
    even: "Portfolio"


@dataclass(frozen=True)
class PermutedPortfolio:
    base: "Portfolio"
    index_map: IndexMap


Portfolio = Union[
    FinitePortfolio,
    RulePortfolio,
    ConcatPortfolio,
    InterleavedPortfolio,
    PermutedPortfolio,
]


def portfolio_is_finite(pf: Portfolio) -> bool:
    if isinstance(pf, FinitePortfolio):
        return True
    if isinstance(pf, RulePortfolio):
        return isinstance(pf.coeffs, FiniteCoeffs) and family_is_finite(pf.family)
    if isinstance(pf, ConcatPortfolio):
        return portfolio_is_finite(pf.tail)
    if isinstance(pf, InterleavedPortfolio):
        return portfolio_is_finite(pf.odd) and portfolio_is_finite(pf.even)
    if isinstance(pf, PermutedPortfolio):
        return portfolio_is_finite(pf.base)
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def portfolio_bet(pf: Portfolio, i: int) -> tuple[Fraction, Event]:
    """The i-th bet (coefficient, event); finite portfolios pad with
    zero bets on their last event beyond their length."""
    if i < 1:
        raise IndexError("bet positions start at 1")
    if isinstance(pf, FinitePortfolio):
        if i <= len(pf.bets):
            return pf.bets[i - 1]
        if not pf.bets:
            raise IndexError("empty portfolio has no bets")
        return (Fraction(0), pf.bets[-1][1])
    if isinstance(pf, RulePortfolio):
        return (coeff_value(pf.coeffs, i), family_event(pf.family, i))
    if isinstance(pf, ConcatPortfolio):
        if i <= len(pf.head):
            return pf.head[i - 1]
        return portfolio_bet(pf.tail, i - len(pf.head))
    if isinstance(pf, InterleavedPortfolio):
        half, rem = divmod(i + 1, 2)
        return portfolio_bet(pf.odd if rem == 0 else pf.even, half)
    if isinstance(pf, PermutedPortfolio):
        return portfolio_bet(pf.base, map_apply(pf.index_map, i))
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def negate(pf: Portfolio) -> Portfolio:
    if isinstance(pf, FinitePortfolio):
        return FinitePortfolio(tuple((-a, e) for a, e in pf.bets))
    if isinstance(pf, RulePortfolio):
        return RulePortfolio(negate_coeffs(pf.coeffs), pf.family)
    if isinstance(pf, ConcatPortfolio):
        return ConcatPortfolio(tuple((-a, e) for a, e in pf.head), negate(pf.tail))
    if isinstance(pf, InterleavedPortfolio):
        return InterleavedPortfolio(negate(pf.odd), negate(pf.even))
    if isinstance(pf, PermutedPortfolio):
        return PermutedPortfolio(negate(pf.base), pf.index_map)
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def interleave(pf1: Portfolio, pf2: Portfolio) -> Portfolio:
    """Odd positions read pf1, even positions read pf2."""
    if isinstance(pf1, FinitePortfolio) and isinstance(pf2, FinitePortfolio):
        bets: list[tuple[Fraction, Event]] = []
        n = max(len(pf1.bets), len(pf2.bets))
        for k in range(n):
            if k < len(pf1.bets):
                bets.append(pf1.bets[k])
            elif pf2.bets:
                bets.append((Fraction(0), pf2.bets[-1][1]))
            if k < len(pf2.bets):
                bets.append(pf2.bets[k])
            elif pf1.bets:
                bets.append((Fraction(0), pf1.bets[-1][1]))
        return FinitePortfolio(tuple(bets))
    return InterleavedPortfolio(pf1, pf2)


def permute(pf: Portfolio, m: IndexMap) -> Portfolio:
    """The portfolio read through an index bijection."""
    if isinstance(m, IdentityMap):
        return pf
    if isinstance(pf, FinitePortfolio):
        if isinstance(m, FiniteSwapMap):
            n = len(pf.bets)
            if any(i > n for i in m.moved_indices()):
                raise ValueError("swap moves positions beyond the finite portfolio")
            return FinitePortfolio(tuple(portfolio_bet(pf, map_apply(m, i)) for i in range(1, n + 1)))
        raise ValueError("only finite swaps can permute a finite portfolio")
    return PermutedPortfolio(pf, m)


# ---------------------------------------------------------------------------
# Price and balance evaluation
# ---------------------------------------------------------------------------


def series_sum(
    terms: CoeffSeq, weight: IndexRule | None = None, horizon: int = 1_000_000
) -> SeriesValue:
    """Certified value of ``sum_i terms_i * weight(i)``."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    rule = weight if weight is not None else ConstantRule(Fraction(1))
    return evaluate_streams(combine(terms, rule), horizon)


def _price_streams(pf: Portfolio, prices: Prices) -> list[Stream]:
    if isinstance(pf, FinitePortfolio):
        terms = tuple(
            (i, a * price_of_event(prices, e))
            for i, (a, e) in enumerate(pf.bets, start=1)
            if a != 0
        )
        return [FiniteStream(terms)]
    if isinstance(pf, RulePortfolio):
        if isinstance(pf.coeffs, FiniteCoeffs) or isinstance(pf.family, ExplicitFamily):
            n = family_length(pf.family) or 0
            terms = tuple(
                (i, coeff_value(pf.coeffs, i) * price_of_event(prices, family_event(pf.family, i)))
                for i in range(1, n + 1)
            )
            return [FiniteStream(terms)]
        rule = price_rule_for_family(prices, pf.family)
        return combine(pf.coeffs, rule)
    if isinstance(pf, ConcatPortfolio):
        head = tuple(
            (i, a * price_of_event(prices, e))
            for i, (a, e) in enumerate(pf.head, start=1)
            if a != 0
        )
        return [FiniteStream(head)] + _price_streams(pf.tail, prices)
    if isinstance(pf, InterleavedPortfolio):
        # the two halves' series interleave; when both converge the value
        # is the sum, when exactly one diverges so does the whole
        return _price_streams(pf.odd, prices) + _price_streams(pf.even, prices)
    if isinstance(pf, PermutedPortfolio):
        if isinstance(pf.index_map, (IdentityMap, FiniteSwapMap, PairInterleaveMap)):
            # bounded-displacement rearrangements keep values and divergence
            return _price_streams(pf.base, prices)
        if isinstance(pf.base, RulePortfolio):
            return permute_streams(_price_streams(pf.base, prices), pf.index_map)
        return [UnknownStream("block rearrangement of a composite portfolio")]
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def price_of(pf: Portfolio, prices: Prices, horizon: int = 1_000_000) -> SeriesValue:
    """Certified value of the portfolio's price series."""
    return evaluate_streams(_price_streams(pf, prices), horizon)


def _balance_streams(pf: Portfolio, prices: Prices, w: Outcome) -> list[Stream]:
    if isinstance(pf, FinitePortfolio):
        terms = tuple(
            (i, a * (eval_indicator(e, w) - price_of_event(prices, e)))
            for i, (a, e) in enumerate(pf.bets, start=1)
            if a != 0
        )
        return [FiniteStream(terms)]
    if isinstance(pf, RulePortfolio):
        if isinstance(pf.coeffs, FiniteCoeffs) or isinstance(pf.family, ExplicitFamily):
            n = family_length(pf.family) or 0
            terms = []
            for i in range(1, n + 1):
                e = family_event(pf.family, i)
                a = coeff_value(pf.coeffs, i)
                if a != 0:
                    terms.append((i, a * (eval_indicator(e, w) - price_of_event(prices, e))))
            return [FiniteStream(tuple(terms))]
        rule = price_rule_for_family(prices, pf.family)
        profile = indicator_profile(pf.family, w)
        if profile.kind == "finite":
            hit_terms = tuple(
                (j, coeff_value(pf.coeffs, j)) for j in profile.indices
            )
            neg_price = combine(negate_coeffs(pf.coeffs), rule)
            return [FiniteStream(hit_terms)] + neg_price
        # cofinite: indicator 1 except at the listed indices
        tail = combine(pf.coeffs, rule_one_minus(rule))
        corrections = tuple(
            (j, -coeff_value(pf.coeffs, j)) for j in profile.indices
        )
        return tail + [FiniteStream(corrections)]
    if isinstance(pf, ConcatPortfolio):
        head = tuple(
            (i, a * (eval_indicator(e, w) - price_of_event(prices, e)))
            for i, (a, e) in enumerate(pf.head, start=1)
            if a != 0
        )
        return [FiniteStream(head)] + _balance_streams(pf.tail, prices, w)
    if isinstance(pf, InterleavedPortfolio):
        return _balance_streams(pf.odd, prices, w) + _balance_streams(pf.even, prices, w)
    if isinstance(pf, PermutedPortfolio):
        if isinstance(pf.index_map, (IdentityMap, FiniteSwapMap, PairInterleaveMap)):
            return _balance_streams(pf.base, prices, w)
        if isinstance(pf.base, RulePortfolio):
            return permute_streams(_balance_streams(pf.base, prices, w), pf.index_map)
        return [UnknownStream("block rearrangement of a composite portfolio")]
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def balance_at(
    pf: Portfolio, prices: Prices, w: Outcome, horizon: int = 1_000_000
) -> SeriesValue:
    """Certified value of the balance series at one outcome.

    For countable families the indicator of a fixed outcome is eventually
    constant along the family, so the balance splits into an exact finite
    indicator part plus a priced tail; conditional sums keep their
    declared index order throughout.
    """
    return evaluate_streams(_balance_streams(pf, prices, w), horizon)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    status: str  # "in" | "out" | "unknown"
    detail: str = ""

    def is_in(self) -> bool:
        return self.status == "in"

    def is_out(self) -> bool:
        return self.status == "out"


def _tv(value: Optional[bool], why_true: str, why_false: str, why_none: str) -> Verdict:
    if value is True:
        return Verdict("in", why_true)
    if value is False:
        return Verdict("out", why_false)
    return Verdict("unknown", why_none)


@dataclass(frozen=True)
class SystemVerdict:
    s1: Verdict
    s2: Verdict
    s2b: Verdict
    s2a: Verdict
    s3: Verdict

    def as_dict(self) -> dict[str, Verdict]:
        return {"S1": self.s1, "S2": self.s2, "S2B": self.s2b, "S2A": self.s2a, "S3": self.s3}


def _reconcile(v: SystemVerdict) -> SystemVerdict:
    """Propagate the containment chain S1 <= S2 <= S3, S1 <= S2B <= S2A."""
    s1, s2, s2b, s2a, s3 = v.s1, v.s2, v.s2b, v.s2a, v.s3

    def push_in(src: Verdict, dst: Verdict, why: str) -> Verdict:
        if src.is_in() and dst.status == "unknown":
            return Verdict("in", why)
        return dst

    def push_out(src: Verdict, dst: Verdict, why: str) -> Verdict:
        if src.is_out() and dst.status == "unknown":
            return Verdict("out", why)
        return dst

    s2 = push_in(s1, s2, "finite portfolios lie in every system")
    s2b = push_in(s1, s2b, "finite portfolios lie in every system")
    s2a = push_in(s1, s2a, "finite portfolios lie in every system")
    s3 = push_in(s1, s3, "finite portfolios lie in every system")
    s3 = push_in(s2, s3, "system 2 membership implies system 3")
    s2a = push_in(s2b, s2a, "a uniform bound implies pointwise finiteness")
    s2 = push_out(s3, s2, "system 3 exclusion excludes system 2")
    s1 = push_out(s2, s1, "system 2 exclusion excludes system 1")
    s1 = push_out(s2b, s1, "system 2B exclusion excludes system 1")
    s2b = push_out(s2a, s2b, "system 2A exclusion excludes system 2B")
    return SystemVerdict(s1, s2, s2b, s2a, s3)


@dataclass(frozen=True)
class _Conditions:
    """Three-valued membership ingredients for one portfolio."""

    finite_support: Optional[bool]
    price_abs_conv: Optional[bool]
    price_conv: Optional[bool]
    pointwise_all: Optional[bool]
    abs_all: Optional[bool]
    abs_bounded: Optional[bool]


def _and3(a: Optional[bool], b: Optional[bool]) -> Optional[bool]:
    if a is False or b is False:
        return False
    if a is True and b is True:
        return True
    return None


def _and3_cancelable(a: Optional[bool], b: Optional[bool]) -> Optional[bool]:
    """Conjunction where two failures may cancel (conditional sums)."""
    if a is True and b is True:
        return True
    if (a is False and b is True) or (a is True and b is False):
        return False
    return None


def _conditions_finite() -> _Conditions:
    return _Conditions(True, True, True, True, True, True)


def _rule_conditions(pf: RulePortfolio, prices: Prices) -> _Conditions:
    coeffs, fam = pf.coeffs, pf.family
    finite_support = coeff_finite_support(coeffs)
    if isinstance(fam, ExplicitFamily) or isinstance(coeffs, FiniteCoeffs):
        return _conditions_finite()
    try:
        rule = price_rule_for_family(prices, fam)
    except Exception:
        unknown = None
        return _Conditions(finite_support, unknown, unknown, unknown, unknown, unknown)

    price_conv = streams_converge(combine(coeffs, rule))
    acs = abs_coeffs(coeffs)
    abs_price_streams = None if acs is None else combine(acs, rule)
    price_abs_conv = None if abs_price_streams is None else streams_converge(abs_price_streams)
    one_minus = _try_one_minus(rule)
    abs_one_minus_conv: Optional[bool] = None
    if acs is not None and one_minus is not None:
        abs_one_minus_conv = streams_converge(combine(acs, one_minus))
    sum_coeffs_conv = streams_converge(combine(coeffs, ConstantRule(Fraction(1))))
    abs_coeffs_conv = None if acs is None else streams_converge(
        combine(acs, ConstantRule(Fraction(1)))
    )
    in_unit = _rule_in_unit(rule)

    if isinstance(fam, ChainIntervals):
        stuck = family_stuck_possible(fam)
        if stuck is False:
            pointwise_all = price_conv
            abs_all = price_abs_conv if in_unit else None
        elif stuck is True:
            stuck_balance_conv = (
                streams_converge(combine(coeffs, one_minus)) if one_minus is not None else None
            )
            pointwise_all = _and3(price_conv, stuck_balance_conv)
            abs_all = _and3(price_abs_conv, abs_one_minus_conv) if in_unit else None
        else:
            pointwise_all = None
            abs_all = None
        abs_bounded = _and3(price_abs_conv, abs_one_minus_conv) if in_unit else None
        return _Conditions(
            finite_support, price_abs_conv, price_conv, pointwise_all, abs_all, abs_bounded
        )
    if isinstance(fam, (ChainDifferences, FirstOneCylinders)):
        pointwise_all = price_conv
        abs_all = price_abs_conv if in_unit else None
        single_term_bounded = _product_terms_bounded(coeffs, rule)
        abs_bounded = _and3(price_abs_conv, single_term_bounded) if in_unit else None
        return _Conditions(
            finite_support, price_abs_conv, price_conv, pointwise_all, abs_all, abs_bounded
        )
    if isinstance(fam, CoordinateEvents):
        # membership conditions quantify over every binary sequence, so
        # balance convergence for all outcomes forces every subseries of
        # the coefficients to converge, i.e. absolute convergence
        pointwise_all = _and3(abs_coeffs_conv, price_conv)
        both = _and3(price_abs_conv, abs_one_minus_conv) if in_unit else None
        return _Conditions(
            finite_support, price_abs_conv, price_conv, pointwise_all, both, both
        )
    if isinstance(fam, ConstantFamily):
        conv1 = streams_converge(combine(coeffs, one_minus)) if one_minus is not None else None
        abs1 = abs_one_minus_conv if in_unit else None
        abs0 = price_abs_conv if in_unit else None
        p0, p1 = _constant_profiles_exist(fam.event)
        pointwise_all = _profiles_and(p0, price_conv, p1, conv1)
        abs_all = _profiles_and(p0, abs0, p1, abs1)
        return _Conditions(
            finite_support, price_abs_conv, price_conv, pointwise_all, abs_all, abs_all
        )
    return _Conditions(finite_support, price_abs_conv, price_conv, None, None, None)


def _constant_profiles_exist(event: Event) -> tuple[Optional[bool], Optional[bool]]:
    """Existence of outcomes outside (profile 0) and inside (profile 1)."""
    from .spaces import FiniteEvent, complement, is_empty

    p1 = None if is_empty(event) else True
    if is_empty(event):
        p1 = False
    if isinstance(event, FiniteEvent):
        p0 = None  # emptiness of the complement needs the space
    else:
        p0 = not is_empty(complement(event))
    return p0, p1


def _profiles_and(
    exists0: Optional[bool],
    cond0: Optional[bool],
    exists1: Optional[bool],
    cond1: Optional[bool],
) -> Optional[bool]:
    """Conjunction of per-profile conditions over profiles that exist.

    A condition with unknown existence still blocks a True verdict, but
    can only force False when the profile provably exists.
    """
    out_true = True
    for exists, cond in ((exists0, cond0), (exists1, cond1)):
        if exists is False:
            continue
        if exists is True and cond is False:
            return False
        if cond is not True:
            out_true = False
    return True if out_true else None


def _try_one_minus(rule: IndexRule) -> Optional[IndexRule]:
    try:
        return rule_one_minus(rule)
    except ValueError:
        return None


def _rule_in_unit(rule: IndexRule) -> bool:
    """Prices provably within [0, 1] (so |P| = P and |1 - P| = 1 - P)."""
    nonneg = _rule_is_nonnegative(rule)
    om = _try_one_minus(rule)
    if om is None:
        return False
    return bool(nonneg) and bool(_rule_is_nonnegative(om))


def _product_terms_bounded(coeffs: CoeffSeq, rule: IndexRule) -> Optional[bool]:
    cb = coeff_terms_bounded(coeffs)
    rb = _rule_bounded(rule)
    if cb and rb:
        return True
    acs = abs_coeffs(coeffs)
    om = _try_one_minus(rule)
    if acs is None or om is None:
        return None
    if streams_converge(combine(acs, om)):
        return True  # a convergent series has bounded terms
    return None


def _conditions(pf: Portfolio, prices: Prices) -> _Conditions:
    if isinstance(pf, FinitePortfolio):
        return _conditions_finite()
    if isinstance(pf, RulePortfolio):
        return _rule_conditions(pf, prices)
    if isinstance(pf, ConcatPortfolio):
        return _conditions(pf.tail, prices)
    if isinstance(pf, InterleavedPortfolio):
        a = _conditions(pf.odd, prices)
        b = _conditions(pf.even, prices)
        return _Conditions(
            _and3(a.finite_support, b.finite_support),
            _and3(a.price_abs_conv, b.price_abs_conv),
            _and3_cancelable(a.price_conv, b.price_conv),
            _and3_cancelable(a.pointwise_all, b.pointwise_all),
            _and3(a.abs_all, b.abs_all),
            _and3(a.abs_bounded, b.abs_bounded),
        )
    if isinstance(pf, PermutedPortfolio):
        base = _conditions(pf.base, prices)
        m = pf.index_map
        if isinstance(m, (IdentityMap, FiniteSwapMap, PairInterleaveMap)):
            return base
        if isinstance(m, BlockPatternMap):
            return _block_permuted_conditions(pf.base, prices, base)
        return _Conditions(base.finite_support, base.price_abs_conv, None, None, None, None)
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def _block_permuted_conditions(
    base: Portfolio, prices: Prices, cond: _Conditions
) -> _Conditions:
    """Conditions for a block-rearranged portfolio.

    Absolute quantities are rearrangement-invariant, so they carry over
    from the base; the signed price and balance series go through the
    block-rearrangement stream analysis, which only certifies rule
    portfolios.
    """
    price_conv: Optional[bool] = None
    pointwise: Optional[bool] = None
    if isinstance(base, RulePortfolio):
        try:
            rearranged_price = permute_streams(_price_streams(base, prices), BlockPatternMap())
            price_conv = streams_converge(rearranged_price)
        except Exception:
            price_conv = None
        if isinstance(base.family, (ChainDifferences, FirstOneCylinders)):
            pointwise = price_conv  # every outcome hits at most one event
        elif isinstance(base.family, ChainIntervals):
            if family_stuck_possible(base.family) is False:
                pointwise = price_conv
    return _Conditions(
        cond.finite_support,
        cond.price_abs_conv,
        price_conv,
        pointwise,
        cond.abs_all,
        cond.abs_bounded,
    )


def classify(pf: Portfolio, prices: Prices) -> SystemVerdict:
    """Three-valued membership verdicts for the five betting systems."""
    c = _conditions(pf, prices)
    s1 = _tv(
        c.finite_support,
        "finitely many nonzero coefficients",
        "infinitely many nonzero coefficients",
        "support not decidable in the grammar",
    )
    s2 = _tv(
        _and3(c.price_abs_conv, c.pointwise_all),
        "absolute price series converges and the balance converges everywhere",
        "absolute price series diverges or some outcome breaks convergence",
        "system 2 conditions not decidable in the grammar",
    )
    s2b = _tv(
        c.abs_bounded,
        "absolute balance series uniformly bounded",
        "absolute balance series unbounded over outcomes",
        "no uniform bound analysis applies",
    )
    s2a = _tv(
        c.abs_all,
        "absolute balance series finite at every outcome",
        "some outcome gives an infinite absolute balance series",
        "pointwise absolute convergence not decidable",
    )
    s3 = _tv(
        _and3(c.price_conv, c.pointwise_all),
        "price and balance both converge",
        "price diverges or some outcome breaks convergence",
        "system 3 conditions not decidable in the grammar",
    )
    return _reconcile(SystemVerdict(s1, s2, s2b, s2a, s3))
