"""Dutch-book search and construction.

The finite side runs exact LP feasibility: prices on finitely many events
over a finite space extend to a probability vector iff no finite book
loses uniformly, and the phase-1 Farkas certificate of an infeasible
extension problem *is* the Dutch book, margin included.

The countable side carries the named attacks: the constant-balance lemma
applied to partition probes, the conditionally-convergent rearrangement
book over a disjoint family, the interleaved truncation-bounded book over
the inflated vanishing chain, and the extension obstruction read off a
chain's price limit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .families import (
    BlockPatternMap,
    ChainDifferences,
    ChainIntervals,
    EventFamily,
    ExplicitFamily,
    FirstOneCylinders,
    IdentityMap,
    IndexMap,
    ReindexedFamily,
    chain_exit_index,
    family_event,
    family_stuck_possible,
    indicator_profile,
    map_apply,
    map_inverse_apply,
)
from .fields import EventCollection
from .lp import solve_feasibility, solve_lp
from .measures import (
    PriceAssignment,
    Prices,
    price_of_event,
    price_rule_for_family,
)
from .portfolios import (
    AlternatingPowerCoeffs,
    ConcatPortfolio,
    FiniteCoeffs,
    FinitePortfolio,
    InterleavedPortfolio,
    PermutedPortfolio,
    Portfolio,
    RuleCoeffs,
    RulePortfolio,
    ScaledCoeffs,
    balance_at,
    coeff_value,
    interleave,
    negate,
    permute,
    portfolio_bet,
    price_of,
)
from .series import (
    SCALE_BITS,
    Certificate,
    ConstantRule,
    Enclosure,
    Exact,
    IndexRule,
    ReciprocalRule,
    SeriesValue,
    sv_add,
    sv_bounds,
    sv_neg,
    rule_is_positive,
)
from .spaces import (
    Event,
    FiniteEvent,
    FinitePoint,
    FiniteSpace,
    Outcome,
    UnitPoint,
    eval_indicator,
    events_equal,
)

__all__ = [
    "DutchBook",
    "CoherenceReport",
    "ExtensionObstruction",
    "TrichotomyReport",
    "BeamReport",
    "lp_coherence_finite",
    "additivity_probe",
    "constant_balance_attack",
    "rearrangement_attack",
    "beam_attack",
    "extension_obstruction",
    "finite_reduction",
    "chain_quotient",
    "coherence_trichotomy_check",
]


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DutchBook:
    """A portfolio with a certified uniform loss margin.

    ``margin`` encloses the epsilon with balance <= -epsilon at every
    outcome; for a valid book the margin enclosure excludes zero.
    """

    portfolio: Portfolio
    margin: SeriesValue
    kind: str = "UniformSureLoss"

    def __post_init__(self) -> None:
        b = sv_bounds(self.margin)
        if b is None or b[0] <= 0:
            raise ValueError("margin enclosure must exclude zero from below")


@dataclass(frozen=True)
class CoherenceReport:
    verdict: str  # "coherent" | "incoherent" | "undetermined"
    witness: Optional[tuple[tuple[str, Fraction], ...]] = None
    dutch_book: Optional[DutchBook] = None
    detail: str = ""


@dataclass(frozen=True)
class ExtensionObstruction:
    chain: ChainIntervals
    limit: SeriesValue

    def __post_init__(self) -> None:
        b = sv_bounds(self.limit)
        if b is None or b[0] <= 0:
            raise ValueError("obstruction limit enclosure must exclude zero")


@dataclass(frozen=True)
class TrichotomyReport:
    coherent: bool
    rational: bool
    strongly_coherent: bool
    agree: bool
    detail: str = ""
    dutch_book: Optional[DutchBook] = None
    max_shortfall: Optional[Fraction] = None
    null_outcomes: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Finite LP coherence (the finite-additivity characterization)
# ---------------------------------------------------------------------------


def lp_coherence_finite(
    space: FiniteSpace, coll: EventCollection | Sequence[Event], prices: Prices
) -> CoherenceReport:
    """Decide coherence of finitely many priced events over a finite space.

    Primal: a probability vector over outcomes reproducing every price.
    Feasible -> coherent, with the vector as an extension witness.
    Infeasible -> the Farkas dual supplies a finite portfolio whose
    balance is at most ``-margin`` at every outcome, exactly.
    """
    if not isinstance(space, FiniteSpace) or not space.labels:
        raise ValueError("finite LP coherence needs a nonempty finite space")
    events = list(coll.events if isinstance(coll, EventCollection) else coll)
    labels = list(space.labels)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for e in events:
        if not isinstance(e, FiniteEvent):
            raise ValueError("finite LP coherence prices finite events only")
        rows.append([Fraction(1 if lab in e.members else 0) for lab in labels])
        rhs.append(price_of_event(prices, e))
    rows.append([Fraction(1)] * len(labels))
    rhs.append(Fraction(1))
    result = solve_feasibility(rows, rhs)
    if result.status == "feasible":
        witness = tuple(zip(labels, result.x))
        for e, p in zip(events, rhs):
            back = sum(
                (w for lab, w in witness if lab in e.members), Fraction(0)
            )
            assert back == p, "witness failed to reproduce a price"
        return CoherenceReport(
            "coherent", witness=witness, detail="finitely additive extension found"
        )
    y = result.farkas
    assert y is not None
    margin = sum((y[i] * rhs[i] for i in range(len(rhs))), Fraction(0))
    book = FinitePortfolio(
        tuple((y[i], events[i]) for i in range(len(events)) if y[i] != 0)
    )
    # exact validity check at every outcome
    worst = None
    for lab in labels:
        w = FinitePoint(lab)
        bal = sum(
            (
                a * (eval_indicator(e, w) - price_of_event(prices, e))
                for a, e in book.bets
            ),
            Fraction(0),
        )
        worst = bal if worst is None else max(worst, bal)
        assert bal <= -margin, "extracted book misses its margin"
    db = DutchBook(book, Exact(margin, Certificate("FiniteSum")))
    return CoherenceReport(
        "incoherent", dutch_book=db, detail="no finitely additive extension exists"
    )


# ---------------------------------------------------------------------------
# Partition probes and the constant-balance lemma
# ---------------------------------------------------------------------------


def additivity_probe(whole: Event, parts: EventFamily, prices: Prices) -> Portfolio:
    """Buy the whole, sell every part.

    Requires the parts to be verifiably pairwise disjoint with union equal
    to the whole; the probe's balance is then constant at the negated
    price gap, ready for :func:`constant_balance_attack`.
    """
    from .measures import _verify_partition

    reason = _verify_partition(whole, parts)
    if reason is not None:
        raise ValueError(f"not a verified partition: {reason}")
    if isinstance(parts, ExplicitFamily):
        bets = [(Fraction(1), whole)]
        bets.extend((Fraction(-1), e) for e in parts.events)
        return FinitePortfolio(tuple(bets))
    return ConcatPortfolio(
        ((Fraction(1), whole),),
        RulePortfolio(RuleCoeffs(ConstantRule(Fraction(-1))), parts),
    )


def _probe_shape(pf: Portfolio) -> Optional[tuple[Event, EventFamily]]:
    """Recognize buy-whole/sell-parts probes."""
    if isinstance(pf, ConcatPortfolio) and len(pf.head) == 1:
        coeff, whole = pf.head[0]
        tail = pf.tail
        if (
            coeff == 1
            and isinstance(tail, RulePortfolio)
            and isinstance(tail.coeffs, RuleCoeffs)
            and isinstance(tail.coeffs.rule, ConstantRule)
            and tail.coeffs.rule.value == -1
        ):
            return whole, tail.family
    if isinstance(pf, FinitePortfolio) and pf.bets and pf.bets[0][0] == 1:
        whole = pf.bets[0][1]
        if all(a == -1 for a, _ in pf.bets[1:]) and len(pf.bets) > 1:
            return whole, ExplicitFamily(tuple(e for _, e in pf.bets[1:]))
    return None


def _mirror_shape(pf: Portfolio) -> Optional[tuple[Portfolio, IndexMap]]:
    """Recognize ``interleave(p, negate(permute(p, m)))``."""
    if not isinstance(pf, InterleavedPortfolio):
        return None
    p, q = pf.odd, pf.even
    if isinstance(q, PermutedPortfolio) and q.base == negate(p):
        return p, q.index_map
    return None


def _every_outcome_hits_finitely(fam: EventFamily) -> Optional[bool]:
    if isinstance(fam, (ChainDifferences, FirstOneCylinders)):
        return True
    if isinstance(fam, ChainIntervals):
        stuck = family_stuck_possible(fam)
        return None if stuck is None else not stuck
    if isinstance(fam, ExplicitFamily):
        return True
    if isinstance(fam, ReindexedFamily):
        return _every_outcome_hits_finitely(fam.base)
    return None


def constant_balance_attack(
    pf: Portfolio,
    prices: Prices,
    space: Optional[FiniteSpace] = None,
    horizon: int = 1_000_000,
) -> Optional[DutchBook]:
    """Turn a provably constant nonzero balance into a Dutch book.

    Recognized shapes: partition probes (balance = the negated price gap),
    mirrored interleaves ``interleave(p, negate(permute(p, m)))`` over a
    family every outcome hits finitely often (balance = rearranged price
    minus price), and finite portfolios over a finite space (balance
    checked for constancy on every outcome).  Returns the book built from
    the portfolio or its negation, or None when no nonzero constant is
    certified.
    """
    constant = _constant_balance_value(pf, prices, space, horizon)
    if constant is None:
        return None
    bounds = sv_bounds(constant)
    if bounds is None:
        return None
    lo, hi = bounds
    if hi < 0:
        return DutchBook(pf, sv_neg(constant))
    if lo > 0:
        return DutchBook(negate(pf), constant)
    return None


def _constant_balance_value(
    pf: Portfolio,
    prices: Prices,
    space: Optional[FiniteSpace],
    horizon: int,
) -> Optional[SeriesValue]:
    probe = _probe_shape(pf)
    if probe is not None:
        whole, parts = probe
        from .measures import _verify_partition, check_countable_additivity

        if _verify_partition(whole, parts) is None:
            verdict = check_countable_additivity(prices, whole, parts, horizon)
            return sv_neg(verdict.gap)
        return None
    mirror = _mirror_shape(pf)
    if mirror is not None:
        base, m = mirror
        fams = _base_families(base)
        if fams and all(_every_outcome_hits_finitely(f) for f in fams):
            total = sv_add(
                price_of(pf.odd, prices, horizon), price_of(pf.even, prices, horizon)
            )
            return sv_neg(total)
        return None
    if isinstance(pf, FinitePortfolio) and space is not None:
        values = set()
        for lab in space.labels:
            w = FinitePoint(lab)
            bal = sum(
                (
                    a * (eval_indicator(e, w) - price_of_event(prices, e))
                    for a, e in pf.bets
                ),
                Fraction(0),
            )
            values.add(bal)
        if len(values) == 1:
            return Exact(values.pop())
        return None
    return None


def _base_families(pf: Portfolio) -> list[EventFamily]:
    if isinstance(pf, RulePortfolio):
        return [pf.family]
    if isinstance(pf, ConcatPortfolio):
        return _base_families(pf.tail)
    if isinstance(pf, InterleavedPortfolio):
        return _base_families(pf.odd) + _base_families(pf.even)
    if isinstance(pf, PermutedPortfolio):
        return _base_families(pf.base)
    if isinstance(pf, FinitePortfolio):
        return [ExplicitFamily(tuple(e for _, e in pf.bets))]
    return []


# ---------------------------------------------------------------------------
# The rearrangement book over a disjoint family
# ---------------------------------------------------------------------------


def rearrangement_attack(
    family: EventFamily,
    prices: Prices,
    index_map: Optional[IndexMap] = None,
    horizon: int = 1_000_000,
) -> Optional[DutchBook]:
    """Build the order-sensitive book over an infinite disjoint family.

    The base portfolio bets ``(-1)**i / (i * P(A_i))`` on ``A_i``; its
    price is the alternating harmonic series, which converges only
    conditionally.  Interleaving it with its negated block-rearranged copy
    cancels every indicator pairwise, leaving the constant balance
    ``rearranged price - price``, whose magnitude is certified to half
    the alternating-harmonic limit.  With the identity map instead the
    margin enclosure contains zero and no book is returned.
    """
    if not isinstance(family, (ChainDifferences, FirstOneCylinders)):
        raise ValueError("rearrangement attack needs an infinite disjoint family")
    rule = price_rule_for_family(prices, family)
    if rule_is_positive(rule) is not True:
        raise ValueError("family prices must be provably positive")
    coeffs = ScaledCoeffs(AlternatingPowerCoeffs(Fraction(1), 0, 1), ReciprocalRule(rule))
    base = RulePortfolio(coeffs, family)
    m = index_map if index_map is not None else BlockPatternMap()
    mirrored = interleave(base, negate(permute(base, m)))
    return constant_balance_attack(mirrored, prices, horizon=horizon)


# ---------------------------------------------------------------------------
# The interleaved truncation-bounded book on the inflated chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamReport:
    dutch_book: DutchBook
    delta: Fraction
    cancellation_outcomes: tuple[Fraction, ...]
    cancellation_sums: tuple[Fraction, ...]
    truncation_bound: Fraction
    truncation_limit: int
    sample_count: int
    seed: int
    horizon: int


def beam_attack(
    delta: Fraction,
    horizon: int = 1_000_000,
    sample_count: int = 100,
    truncation_limit: int = 100_000,
    seed: int = 0,
) -> BeamReport:
    """The uniform-loss book with convergent, uniformly bounded truncated
    balances, on the vanishing chain with prices inflated by ``delta``.

    Returns the book (margin enclosing ``delta * ln(2) / 2``), exact
    pointwise indicator cancellations at sampled outcomes, and a certified
    uniform bound on every truncated balance up to the truncation limit.
    """
    delta = Fraction(delta)
    if not (0 < delta <= Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2]")
    chain = ChainIntervals(_chain_rule())
    prices = PriceAssignment.of(family_rules={chain: _price_rule(delta)})
    sigma = RulePortfolio(AlternatingPowerCoeffs(Fraction(1), 1, 1), chain)
    tau = negate(permute(sigma, BlockPatternMap()))
    book_pf = interleave(sigma, tau)
    book = constant_balance_attack(book_pf, prices, horizon=horizon)
    if book is None:
        raise RuntimeError("the mirrored interleave failed to certify its margin")

    rng = random.Random(seed)
    outcomes: list[Fraction] = []
    sums: list[Fraction] = []
    for _ in range(sample_count):
        w = _sample_unit_outcome(rng)
        outcomes.append(w)
        sums.append(_indicator_sum(book_pf, UnitPoint(w)))

    bound = _truncation_bound(
        book_pf, prices, book, outcomes, truncation_limit, horizon
    )
    return BeamReport(
        dutch_book=book,
        delta=delta,
        cancellation_outcomes=tuple(outcomes),
        cancellation_sums=tuple(sums),
        truncation_bound=bound,
        truncation_limit=truncation_limit,
        sample_count=sample_count,
        seed=seed,
        horizon=horizon,
    )


def _chain_rule():
    from .series import PowerRule

    return PowerRule(Fraction(1), 1, 1, Fraction(0))


def _price_rule(delta: Fraction):
    from .series import PowerRule

    return PowerRule(Fraction(1), 1, 1, Fraction(delta))


def _sample_unit_outcome(rng: random.Random) -> Fraction:
    den = rng.randrange(2, 1 << 20)
    num = rng.randrange(1, den)
    return Fraction(num, den)


def _indicator_sum(pf: Portfolio, w: Outcome) -> Fraction:
    """Exact value of ``sum_i a_i I_{A_i}(w)`` for finite-hit portfolios."""
    if isinstance(pf, FinitePortfolio):
        return sum(
            (a for a, e in pf.bets if eval_indicator(e, w)), Fraction(0)
        )
    if isinstance(pf, RulePortfolio):
        prof = indicator_profile(pf.family, w)
        if prof.kind != "finite":
            raise ValueError("outcome hits infinitely many events")
        return sum((coeff_value(pf.coeffs, j) for j in prof.indices), Fraction(0))
    if isinstance(pf, ConcatPortfolio):
        head = sum(
            (a for a, e in pf.head if eval_indicator(e, w)), Fraction(0)
        )
        return head + _indicator_sum(pf.tail, w)
    if isinstance(pf, InterleavedPortfolio):
        return _indicator_sum(pf.odd, w) + _indicator_sum(pf.even, w)
    if isinstance(pf, PermutedPortfolio):
        return _indicator_sum(pf.base, w)
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def _truncation_bound(
    pf: Portfolio,
    prices: Prices,
    book: DutchBook,
    outcomes: Sequence[Fraction],
    limit: int,
    horizon: int,
) -> Fraction:
    """Certified bound on |sum_{i>=n} beta_i (I - P)| for n <= limit.

    The truncated balance is the full (constant) balance minus the length
    n-1 prefix; prefixes split into a price part shared by every outcome
    and a finite step function of indicator hits, so one fixed-point pass
    over the price prefix serves all sampled outcomes.
    """
    scale = 1 << SCALE_BITS
    lo_acc = 0
    hi_acc = 0
    los = [0]
    his = [0]
    for i in range(1, limit + 1):
        term = _bet_price_term(pf, prices, i)
        num, den = term.numerator, term.denominator
        x = num * scale
        lo_acc += x // den
        hi_acc += -((-x) // den)
        los.append(lo_acc)
        his.append(hi_acc)

    mb = sv_bounds(book.margin)
    assert mb is not None
    # the full balance is the negated margin of the book (or its negation)
    total_lo, total_hi = -mb[1], -mb[0]
    if book.portfolio is not pf:
        total_lo, total_hi = mb[0], mb[1]

    best = Fraction(0)
    for wv in outcomes:
        w = UnitPoint(wv)
        steps = _hit_steps(pf, w, limit)
        # over n in [a, b): prefix_{n-1} = hit_value - price_prefix_{n-1}
        for (start, end, hit_value) in steps:
            k_lo, k_hi = start - 1, end - 2
            if k_hi < k_lo:
                continue
            seg_lo = min(los[k_lo : k_hi + 1])
            seg_hi = max(his[k_lo : k_hi + 1])
            # trunc_n = total - prefix = total - hit + price_prefix
            t_lo = Fraction(total_lo) - hit_value + Fraction(seg_lo, scale)
            t_hi = Fraction(total_hi) - hit_value + Fraction(seg_hi, scale)
            best = max(best, abs(t_lo), abs(t_hi))
    return best


def _bet_price_term(pf: Portfolio, prices: Prices, i: int) -> Fraction:
    """``a_i * P(A_i)`` computed structurally (family rules, not lookups)."""
    if isinstance(pf, FinitePortfolio):
        if i > len(pf.bets):
            return Fraction(0)
        a, e = pf.bets[i - 1]
        return a * price_of_event(prices, e) if a else Fraction(0)
    if isinstance(pf, RulePortfolio):
        a = coeff_value(pf.coeffs, i)
        if a == 0:
            return Fraction(0)
        if isinstance(pf.family, ExplicitFamily):
            return a * price_of_event(prices, family_event(pf.family, i))
        rule = price_rule_for_family(prices, pf.family)
        return a * rule.value_at(i)
    if isinstance(pf, ConcatPortfolio):
        if i <= len(pf.head):
            a, e = pf.head[i - 1]
            return a * price_of_event(prices, e) if a else Fraction(0)
        return _bet_price_term(pf.tail, prices, i - len(pf.head))
    if isinstance(pf, InterleavedPortfolio):
        half, rem = divmod(i + 1, 2)
        return _bet_price_term(pf.odd if rem == 0 else pf.even, prices, half)
    if isinstance(pf, PermutedPortfolio):
        return _bet_price_term(pf.base, prices, map_apply(pf.index_map, i))
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def _hit_steps(
    pf: Portfolio, w: Outcome, limit: int
) -> list[tuple[int, int, Fraction]]:
    """Pieces (start, end, cumulative hit sum before position `start`...)

    Returns pieces over n = 1..limit+1 where the indicator prefix sum of
    positions < n is constant on [start, end).
    """
    positions = _hit_positions(pf, w)
    positions = sorted(p for p in positions if p[0] <= limit)
    steps: list[tuple[int, int, Fraction]] = []
    current = Fraction(0)
    prev = 1
    for pos, coeff in positions:
        if pos + 1 > prev:
            steps.append((prev, pos + 1, current))
        current += coeff
        prev = pos + 1
    steps.append((prev, limit + 2, current))
    return steps


def _hit_positions(pf: Portfolio, w: Outcome) -> list[tuple[int, Fraction]]:
    """Positions (and coefficients) of the bets whose event contains w."""
    if isinstance(pf, FinitePortfolio):
        return [
            (i, a)
            for i, (a, e) in enumerate(pf.bets, start=1)
            if a != 0 and eval_indicator(e, w)
        ]
    if isinstance(pf, RulePortfolio):
        prof = indicator_profile(pf.family, w)
        if prof.kind != "finite":
            raise ValueError("outcome hits infinitely many events")
        return [(j, coeff_value(pf.coeffs, j)) for j in prof.indices]
    if isinstance(pf, ConcatPortfolio):
        out = [
            (i, a)
            for i, (a, e) in enumerate(pf.head, start=1)
            if a != 0 and eval_indicator(e, w)
        ]
        out.extend(
            (i + len(pf.head), c) for i, c in _hit_positions(pf.tail, w)
        )
        return out
    if isinstance(pf, InterleavedPortfolio):
        out = [(2 * i - 1, c) for i, c in _hit_positions(pf.odd, w)]
        out.extend((2 * i, c) for i, c in _hit_positions(pf.even, w))
        return out
    if isinstance(pf, PermutedPortfolio):
        return [
            (map_inverse_apply(pf.index_map, i), c)
            for i, c in _hit_positions(pf.base, w)
        ]
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


# ---------------------------------------------------------------------------
# Extension obstruction
# ---------------------------------------------------------------------------


def extension_obstruction(
    chain: ChainIntervals, prices: Prices
) -> Optional[ExtensionObstruction]:
    """A decreasing-to-empty chain whose prices stay above a positive
    limit rules out any countably additive extension; the obstruction
    carries the certified limit.  Returns None when the price limit is
    zero (or not provably positive)."""
    lim_radius = chain.limit_radius()
    if lim_radius is None or lim_radius != 0:
        raise ValueError("chain must decrease to the empty event")
    if chain.lo_closed:
        raise ValueError("left-closed chain keeps the point 0 in every event")
    rule = price_rule_for_family(prices, chain)
    lim = rule.limit()
    if lim is None:
        return None
    if lim <= 0:
        return None
    return ExtensionObstruction(chain, Exact(lim, Certificate("ClosedForm", note="rule limit")))


# ---------------------------------------------------------------------------
# Finite reduction of chain portfolios
# ---------------------------------------------------------------------------


def _infer_chain(pf: Portfolio) -> Optional[ChainIntervals]:
    chains: set[ChainIntervals] = set()
    for fam in _base_families_for_reduction(pf):
        if isinstance(fam, ChainIntervals):
            chains.add(fam)
        elif isinstance(fam, ReindexedFamily) and isinstance(fam.base, ChainIntervals):
            chains.add(fam.base)
        elif isinstance(fam, ExplicitFamily):
            continue
        else:
            return None
    return chains.pop() if len(chains) == 1 else None


def _base_families_for_reduction(pf: Portfolio) -> list[EventFamily]:
    if isinstance(pf, FinitePortfolio):
        return [ExplicitFamily(tuple(e for _, e in pf.bets))]
    if isinstance(pf, RulePortfolio):
        return [pf.family]
    if isinstance(pf, ConcatPortfolio):
        return _base_families_for_reduction(pf.tail)
    if isinstance(pf, InterleavedPortfolio):
        return _base_families_for_reduction(pf.odd) + _base_families_for_reduction(
            pf.even
        )
    if isinstance(pf, PermutedPortfolio):
        return _base_families_for_reduction(pf.base)
    return []


def _fiber_sum(pf: Portfolio, chain: ChainIntervals, j: int) -> Fraction:
    """Sum of coefficients betting on the j-th chain event."""
    target = family_event(chain, j)
    if isinstance(pf, FinitePortfolio):
        return sum(
            (a for a, e in pf.bets if events_equal(e, target)), Fraction(0)
        )
    if isinstance(pf, RulePortfolio):
        fam = pf.family
        if fam == chain:
            return coeff_value(pf.coeffs, j)
        if isinstance(fam, ReindexedFamily) and fam.base == chain:
            return coeff_value(pf.coeffs, map_inverse_apply(fam.index_map, j))
        if isinstance(fam, ExplicitFamily):
            return sum(
                (
                    coeff_value(pf.coeffs, i)
                    for i, e in enumerate(fam.events, start=1)
                    if events_equal(e, target)
                ),
                Fraction(0),
            )
        raise ValueError("portfolio events do not come from the chain")
    if isinstance(pf, ConcatPortfolio):
        head = sum(
            (a for a, e in pf.head if events_equal(e, target)), Fraction(0)
        )
        return head + _fiber_sum(pf.tail, chain, j)
    if isinstance(pf, InterleavedPortfolio):
        return _fiber_sum(pf.odd, chain, j) + _fiber_sum(pf.even, chain, j)
    if isinstance(pf, PermutedPortfolio):
        return _fiber_sum(pf.base, chain, j)
    raise TypeError(f"unknown portfolio {type(pf).__name__}")


def finite_reduction(
    pf: Portfolio,
    prices: Prices,
    k_star: int,
    chain: Optional[ChainIntervals] = None,
) -> FinitePortfolio:
    """Regroup a chain portfolio by target event and truncate.

    Every bet rides some chain event ``A_j``; the regrouped coefficient at
    j is the (finite) fiber sum over positions betting on ``A_j``.  If the
    original portfolio lost uniformly, so would the regrouped finite
    portfolio; contrapositively, an LP pass on the truncation's quotient
    space certifies that no such loss exists.
    """
    if k_star < 1:
        raise ValueError("truncation index must be positive")
    ch = chain if chain is not None else _infer_chain(pf)
    if ch is None:
        raise ValueError("could not identify a single underlying chain")
    bets = []
    for j in range(1, k_star + 1):
        bets.append((_fiber_sum(pf, ch, j), family_event(ch, j)))
    return FinitePortfolio(tuple(bets))


def chain_quotient(
    chain: ChainIntervals, prices: Prices, k: int
) -> tuple[FiniteSpace, list[Event], PriceAssignment, dict]:
    """The k+1-cell quotient of the chain: one cell outside the first
    event, one per difference.  Chain events become upward-closed label
    sets carrying their original prices, ready for the finite LP."""
    labels = tuple(f"cell{j}" for j in range(k + 1))
    space = FiniteSpace(labels)
    events: list[Event] = []
    explicit: dict = {}
    for i in range(1, k + 1):
        fe = FiniteEvent(frozenset(labels[i:]))
        events.append(fe)
        explicit[fe] = price_of_event(prices, family_event(chain, i))
    mapping = {"cells": labels}
    return space, events, PriceAssignment.of(explicit=explicit), mapping


# ---------------------------------------------------------------------------
# The coherence / strong coherence / rationality trichotomy (finite scale)
# ---------------------------------------------------------------------------


def _sure_loss_feasible(
    labels: Sequence[str],
    events: Sequence[FiniteEvent],
    prices: Sequence[Fraction],
    active: Sequence[bool],
) -> Optional[list[Fraction]]:
    """Coefficients with balance <= -1 at every active outcome, or None."""
    m = len(events)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for lab, live in zip(labels, active):
        if not live:
            continue
        base = [
            Fraction(1 if lab in e.members else 0) - p
            for e, p in zip(events, prices)
        ]
        # sum_A (u_A - v_A)(I - P) + s_w = -1
        rows.append(base + [-v for v in base] + [Fraction(0)] * 0)
        rhs.append(Fraction(-1))
    if not rows:
        return None
    nslack = len(rows)
    for i, row in enumerate(rows):
        slack = [Fraction(0)] * nslack
        slack[i] = Fraction(1)
        rows[i] = row + slack
    res = solve_feasibility(rows, rhs)
    if res.status != "feasible":
        return None
    x = res.x
    assert x is not None
    return [x[j] - x[m + j] for j in range(m)]


def _rationality_shortfall(
    labels: Sequence[str],
    events: Sequence[FiniteEvent],
    prices: Sequence[Fraction],
) -> Fraction:
    """max t <= 1 such that some finite book has balance <= -t everywhere.

    Positive t certifies irrationality (a strictly negative balance at
    every outcome); by rescaling the optimum is 0 or 1 exactly.
    """
    m = len(events)
    nw = len(labels)
    ncols = 2 * m + 1 + nw + 1  # u, v, t, outcome slacks, cap slack
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for k, lab in enumerate(labels):
        base = [
            Fraction(1 if lab in e.members else 0) - p
            for e, p in zip(events, prices)
        ]
        row = base + [-v for v in base] + [Fraction(1)]
        slacks = [Fraction(0)] * (nw + 1)
        slacks[k] = Fraction(1)
        rows.append(row + slacks)
        rhs.append(Fraction(0))
    cap = [Fraction(0)] * (2 * m) + [Fraction(1)] + [Fraction(0)] * nw + [Fraction(1)]
    rows.append(cap)
    rhs.append(Fraction(1))
    c = [Fraction(0)] * (2 * m) + [Fraction(1)] + [Fraction(0)] * (nw + 1)
    res = solve_lp(rows, rhs, c, maximize=True)
    assert res.status == "optimal", "rationality LP must be solvable"
    assert res.value is not None
    return res.value


def _always_null_outcomes(
    labels: Sequence[str],
    events: Sequence[FiniteEvent],
    prices: Sequence[Fraction],
) -> list[str]:
    """Outcomes carrying weight zero under every extension witness."""
    m = len(events)
    nw = len(labels)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for e, p in zip(events, prices):
        rows.append([Fraction(1 if lab in e.members else 0) for lab in labels])
        rhs.append(p)
    rows.append([Fraction(1)] * nw)
    rhs.append(Fraction(1))
    nulls = []
    for k, lab in enumerate(labels):
        c = [Fraction(0)] * nw
        c[k] = Fraction(1)
        res = solve_lp(rows, rhs, c, maximize=True)
        if res.status == "optimal" and res.value == 0:
            nulls.append(lab)
    return nulls


def coherence_trichotomy_check(
    space: FiniteSpace,
    coll: EventCollection | Sequence[Event],
    prices: Prices,
) -> TrichotomyReport:
    """Run the three finite-scale loss notions through separate exact LPs.

    * coherence: a finitely additive extension exists (primal feasible);
    * rationality: no book has a strictly negative balance everywhere
      (shortfall LP optimum equals zero);
    * strong coherence: no book loses uniformly off the always-null
      outcomes (weights zero under every extension).

    The three verdicts provably coincide; ``agree`` records the check.
    """
    events = [
        e for e in (coll.events if isinstance(coll, EventCollection) else coll)
    ]
    labels = list(space.labels)
    pvals = [price_of_event(prices, e) for e in events]
    base = lp_coherence_finite(space, events, prices)
    coherent = base.verdict == "coherent"

    shortfall = _rationality_shortfall(labels, events, pvals)
    rational = shortfall == 0

    if not coherent:
        strongly_coherent = False
        nulls: list[str] = []
    else:
        nulls = _always_null_outcomes(labels, events, pvals)
        active = [lab not in nulls for lab in labels]
        weak = _sure_loss_feasible(labels, events, pvals, active)
        strongly_coherent = weak is None

    agree = coherent == rational == strongly_coherent
    return TrichotomyReport(
        coherent=coherent,
        rational=rational,
        strongly_coherent=strongly_coherent,
        agree=agree,
        detail="all three LP verdicts coincide" if agree else "LP verdicts disagree",
        dutch_book=base.dutch_book,
        max_shortfall=shortfall,
        null_outcomes=tuple(nulls),
    )
