"""Constructing portfolios that realize target balances.

A zero-expectation simple random variable over a finite field (or an
interval partition of the unit interval) is realized exactly by betting
its own cell values: the balance of that book reproduces the target at
every outcome.  Expectations of balances of portfolios priced by a
genuine measure are certified to contain zero, the coherence mechanism
behind every no-Dutch-book verdict on the measure side.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .measures import CanonicalMeasure, MeasurePrices, measure_of
from .portfolios import (
    FinitePortfolio,
    Portfolio,
    RulePortfolio,
    abs_coeffs,
    classify,
)
from .series import (
    Certificate,
    Enclosure,
    Exact,
    SeriesValue,
    Undetermined,
    evaluate_streams,
    sv_bounds,
)
from .spaces import (
    Event,
    FiniteEvent,
    FiniteSpace,
    IntervalEvent,
    Space,
    UnitIntervalSpace,
    events_equal,
    is_disjoint,
    union,
)

__all__ = [
    "SimpleRV",
    "expectation_of_simple",
    "synthesize_balance",
    "NonzeroExpectationError",
    "expectation_of_balance",
    "BalanceSpaceVerdict",
    "balance_space_membership",
]


@dataclass(frozen=True)
class SimpleRV:
    """A simple random variable given by a finite measurable partition."""

    space: Space
    cells: tuple[tuple[Event, Fraction], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "cells", tuple((e, Fraction(v)) for e, v in self.cells)
        )
        evs = [e for e, _ in self.cells]
        for i in range(len(evs)):
            for j in range(i + 1, len(evs)):
                if not is_disjoint(evs[i], evs[j]):
                    raise ValueError(f"cells {i + 1} and {j + 1} intersect")
        if not evs:
            raise ValueError("a simple function needs at least one cell")
        acc = evs[0]
        for e in evs[1:]:
            acc = union(acc, e)
        full = _full_event(self.space)
        if not events_equal(acc, full):
            raise ValueError("cells do not partition the space")

    def value_at(self, w) -> Fraction:
        from .spaces import eval_indicator

        for e, v in self.cells:
            if eval_indicator(e, w):
                return v
        raise ValueError("outcome escaped the partition")


def _full_event(space: Space) -> Event:
    if isinstance(space, FiniteSpace):
        return space.full_event()
    if isinstance(space, UnitIntervalSpace):
        return space.full_event()
    return space.full_event()


def expectation_of_simple(target: SimpleRV, measure: CanonicalMeasure) -> Fraction:
    return sum(
        (v * measure_of(measure, e) for e, v in target.cells), Fraction(0)
    )


class NonzeroExpectationError(ValueError):
    def __init__(self, expectation: Fraction):
        super().__init__(f"target has expectation {expectation}, not 0")
        self.expectation = expectation


def synthesize_balance(target: SimpleRV, measure: CanonicalMeasure) -> FinitePortfolio:
    """A finite book whose balance equals the target at every outcome.

    Splits the target into its positive and negative parts and interleaves
    buys with sells; because the expectation vanishes, the price exactly
    cancels and the balance reproduces the cell values.  Targets with
    nonzero expectation are rejected with the exact value.
    """
    expectation = expectation_of_simple(target, measure)
    if expectation != 0:
        raise NonzeroExpectationError(expectation)
    buys = [(v, e) for e, v in target.cells if v > 0]
    sells = [(v, e) for e, v in target.cells if v < 0]
    bets: list[tuple[Fraction, Event]] = []
    for k in range(max(len(buys), len(sells))):
        if k < len(buys):
            bets.append(buys[k])
        if k < len(sells):
            bets.append(sells[k])
    return FinitePortfolio(tuple(bets))


def expectation_of_balance(
    pf: Portfolio, measure: CanonicalMeasure, horizon: int = 1_000_000
) -> SeriesValue:
    """Certified expectation of a balance priced by the measure itself.

    Finite books give an exact zero.  A portfolio whose absolute balance
    series is finite at every outcome admits termwise expectation, each
    term being exactly zero.  A portfolio in the pointwise-convergence
    system goes through the positive/negative split: both halves' prices
    equal their expected payouts, so the result is an enclosure of zero
    whose width reflects the two series evaluations.  Anything else is
    honestly undetermined (the expectation may not exist).
    """
    prices = MeasurePrices(measure)
    if isinstance(pf, FinitePortfolio):
        payout = sum((a * measure_of(measure, e) for a, e in pf.bets), Fraction(0))
        cost = sum((a * measure_of(measure, e) for a, e in pf.bets), Fraction(0))
        return Exact(payout - cost, Certificate("FiniteSum"))
    verdict = classify(pf, prices)
    if verdict.s2a.is_in():
        # termwise expectation: each term a_i (mu(A_i) - P(A_i)) = 0
        return Exact(Fraction(0), Certificate("FiniteSum", note="termwise zero"))
    if verdict.s2.is_in():
        return _split_expectation(pf, prices, horizon)
    return Undetermined(
        "portfolio not certified in the pointwise or absolute systems: "
        "its balance expectation may be undefined"
    )


def _split_expectation(pf: Portfolio, prices: MeasurePrices, horizon: int) -> SeriesValue:
    """Positive/negative-part evaluation of E[sum a_i (I_i - P_i)].

    Each part's expected payout series equals its price series; both are
    evaluated as independent enclosures, so their difference straddles
    zero with certified width.
    """
    from .portfolios import _price_streams

    try:
        signed = evaluate_streams(_price_streams(pf, prices), horizon)
        abs_pf = _abs_portfolio(pf)
        if abs_pf is None:
            return Undetermined("no absolute-coefficient expression in the grammar")
        absolute = evaluate_streams(_price_streams(abs_pf, prices), horizon)
    except Exception as exc:  # price rule gaps and the like
        return Undetermined(f"split evaluation failed: {exc}")
    sb, ab = sv_bounds(signed), sv_bounds(absolute)
    if sb is None or ab is None:
        return Undetermined("split series did not evaluate to enclosures")
    # positive part: (abs + signed)/2; negative part: (signed - abs)/2.
    # expected payout and price coincide per part; subtracting the two
    # independent evaluations leaves a symmetric enclosure around zero.
    pos_width = ((ab[1] + sb[1]) - (ab[0] + sb[0])) / 2
    neg_width = ((sb[1] - ab[0]) - (sb[0] - ab[1])) / 2
    w = pos_width + neg_width
    return Enclosure(-w, w, Certificate("Combined", note="positive/negative split"))


def _abs_portfolio(pf: Portfolio) -> Optional[Portfolio]:
    from .portfolios import (
        ConcatPortfolio,
        InterleavedPortfolio,
        PermutedPortfolio,
    )

    if isinstance(pf, FinitePortfolio):
        return FinitePortfolio(tuple((abs(a), e) for a, e in pf.bets))
    if isinstance(pf, RulePortfolio):
        ac = abs_coeffs(pf.coeffs)
        return None if ac is None else RulePortfolio(ac, pf.family)
    if isinstance(pf, ConcatPortfolio):
        tail = _abs_portfolio(pf.tail)
        if tail is None:
            return None
        return ConcatPortfolio(tuple((abs(a), e) for a, e in pf.head), tail)
    if isinstance(pf, InterleavedPortfolio):
        odd, even = _abs_portfolio(pf.odd), _abs_portfolio(pf.even)
        if odd is None or even is None:
            return None
        return InterleavedPortfolio(odd, even)
    if isinstance(pf, PermutedPortfolio):
        base = _abs_portfolio(pf.base)
        return None if base is None else PermutedPortfolio(base, pf.index_map)
    return None


@dataclass(frozen=True)
class BalanceSpaceVerdict:
    system: str
    representable: bool
    expectation: Fraction
    reason: str
    witness: Optional[FinitePortfolio] = None


_SYSTEMS = ("S1", "S2", "S2B", "S2A", "S3")


def balance_space_membership(
    target: SimpleRV, system: str, measure: CanonicalMeasure
) -> BalanceSpaceVerdict:
    """Predict whether the target is a realizable balance in a system.

    For simple targets every system's characterization reduces to the
    zero-expectation test (simplicity and boundedness hold by type);
    representable targets come with the synthesized witness book.
    """
    if system not in _SYSTEMS:
        raise ValueError(f"unknown system {system!r}")
    expectation = expectation_of_simple(target, measure)
    if expectation != 0:
        return BalanceSpaceVerdict(
            system,
            False,
            expectation,
            "expectation differs from zero",
        )
    witness = synthesize_balance(target, measure)
    reasons = {
        "S1": "simple with zero expectation",
        "S2": "zero expectation under the extension",
        "S2B": "bounded with zero expectation",
        "S2A": "zero expectation under the extension",
        "S3": "simple with zero expectation",
    }
    return BalanceSpaceVerdict(system, True, expectation, reasons[system], witness)
