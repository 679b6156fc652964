"""Certified evaluation of the series the laboratory needs.

Every countable sum is produced as a :class:`SeriesValue`: an exact
rational, a rational interval enclosure with a named tail-bound
certificate, a recognized divergence, or an honest ``Undetermined``.

Enclosures come from a fixed-point interval accumulator: partial sums are
kept as integers scaled by ``2**96`` with outward rounding, so a million
terms cost well under a second while contributing less than ``2**-70`` of
spurious width.  Tail bounds are one of:

* ``AlternatingTail`` -- Leibniz bound for eventually alternating terms
  with decreasing magnitudes;
* ``PSeriesIntegralTail`` -- integral comparison for one-signed power
  terms with exponent >= 2;
* ``GeometricTail`` -- geometric-ratio comparison;
* ``BlockTail`` -- the bound for the fixed two-odds-per-even block
  rearrangement of an alternating power series (see
  :class:`BlockRearrangedStream`);
* ``FiniteSum`` / ``Telescoping`` / ``ClosedForm`` -- exact cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "SCALE_BITS",
    "Certificate",
    "Exact",
    "Enclosure",
    "Divergent",
    "Undetermined",
    "SeriesValue",
    "sv_add",
    "sv_neg",
    "sv_scale",
    "sv_width",
    "sv_bounds",
    "sv_contains",
    "sv_excludes_zero",
    "ConstantRule",
    "PowerRule",
    "GeometricRule",
    "ReciprocalRule",
    "DifferenceRule",
    "IndexRule",
    "rule_scale",
    "rule_one_minus",
    "rules_product",
    "FiniteStream",
    "ExactStream",
    "AltPowerStream",
    "PowerStream",
    "GeomStream",
    "PowerGeomStream",
    "ConstTermStream",
    "BlockRearrangedStream",
    "UnknownStream",
    "Stream",
    "IntervalAccumulator",
    "evaluate_stream",
    "evaluate_streams",
    "streams_converge",
    "streams_converge_absolutely",
    "rule_to_streams",
    "abs_rule_to_streams",
]

SCALE_BITS = 96
_SCALE = 1 << SCALE_BITS


# ---------------------------------------------------------------------------
# Series values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    kind: str
    cut_index: Optional[int] = None
    tail_bound: Optional[Fraction] = None
    note: str = ""


@dataclass(frozen=True)
class Exact:
    value: Fraction
    certificate: Certificate = Certificate("FiniteSum")

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Enclosure:
    lo: Fraction
    hi: Fraction
    certificate: Certificate

    def __post_init__(self) -> None:
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValueError("enclosure bounds out of order")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Divergent:
    direction: int  # +1 or -1
    reason: str = ""


@dataclass(frozen=True)
class Undetermined:
    reason: str


SeriesValue = Union[Exact, Enclosure, Divergent, Undetermined]


def sv_bounds(v: SeriesValue) -> Optional[tuple[Fraction, Fraction]]:
    if isinstance(v, Exact):
        return (v.value, v.value)
    if isinstance(v, Enclosure):
        return (v.lo, v.hi)
    return None


def sv_width(v: SeriesValue) -> Optional[Fraction]:
    b = sv_bounds(v)
    return None if b is None else b[1] - b[0]


def sv_contains(v: SeriesValue, x: Fraction) -> Optional[bool]:
    b = sv_bounds(v)
    return None if b is None else (b[0] <= x <= b[1])


def sv_excludes_zero(v: SeriesValue) -> Optional[bool]:
    b = sv_bounds(v)
    if b is None:
        return None
    return b[0] > 0 or b[1] < 0


def _combine_cert(a: Certificate, b: Certificate) -> Certificate:
    if a.kind == b.kind and a.kind in ("FiniteSum", "ClosedForm", "Telescoping"):
        return a
    return Certificate("Combined", note=f"{a.kind}+{b.kind}")


def sv_add(a: SeriesValue, b: SeriesValue) -> SeriesValue:
    if isinstance(a, Undetermined):
        return a
    if isinstance(b, Undetermined):
        return b
    if isinstance(a, Divergent) and isinstance(b, Divergent):
        if a.direction == b.direction:
            return a
        return Undetermined("sum of oppositely divergent series")
    if isinstance(a, Divergent):
        return a
    if isinstance(b, Divergent):
        return b
    if isinstance(a, Exact) and isinstance(b, Exact):
        return Exact(a.value + b.value, _combine_cert(a.certificate, b.certificate))
    alo, ahi = sv_bounds(a)  # type: ignore[misc]
    blo, bhi = sv_bounds(b)  # type: ignore[misc]
    ca = a.certificate if isinstance(a, (Exact, Enclosure)) else Certificate("FiniteSum")
    cb = b.certificate if isinstance(b, (Exact, Enclosure)) else Certificate("FiniteSum")
    return Enclosure(alo + blo, ahi + bhi, _combine_cert(ca, cb))


def sv_neg(a: SeriesValue) -> SeriesValue:
    if isinstance(a, Exact):
        return Exact(-a.value, a.certificate)
    if isinstance(a, Enclosure):
        return Enclosure(-a.hi, -a.lo, a.certificate)
    if isinstance(a, Divergent):
        return Divergent(-a.direction, a.reason)
    return a


def sv_scale(a: SeriesValue, c: Fraction) -> SeriesValue:
    c = Fraction(c)
    if c == 0:
        return Exact(Fraction(0))
    if isinstance(a, Exact):
        return Exact(c * a.value, a.certificate)
    if isinstance(a, Enclosure):
        x, y = c * a.lo, c * a.hi
        return Enclosure(min(x, y), max(x, y), a.certificate)
    if isinstance(a, Divergent):
        return Divergent(a.direction if c > 0 else -a.direction, a.reason)
    return a


# ---------------------------------------------------------------------------
# Index rules: exact rational functions of the bet index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantRule:
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))

    def value_at(self, i: int) -> Fraction:
        return self.value

    def limit(self) -> Optional[Fraction]:
        return self.value


@dataclass(frozen=True)
class PowerRule:
    """``num / (i + shift)**power + offset`` with integer shift >= 0."""

    num: Fraction
    shift: int
    power: int
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "num", Fraction(self.num))
        object.__setattr__(self, "offset", Fraction(self.offset))
        if self.shift < 0 or self.power < 1:
            raise ValueError("PowerRule needs shift >= 0 and power >= 1")

    def value_at(self, i: int) -> Fraction:
        return self.num / Fraction((i + self.shift) ** self.power) + self.offset

    def limit(self) -> Optional[Fraction]:
        return self.offset


@dataclass(frozen=True)
class GeometricRule:
    """``scale * ratio**i + offset`` with 0 < |ratio| < 1."""

    scale: Fraction
    ratio: Fraction
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", Fraction(self.scale))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        object.__setattr__(self, "offset", Fraction(self.offset))
        if not (0 < abs(self.ratio) < 1):
            raise ValueError("GeometricRule needs 0 < |ratio| < 1")

    def value_at(self, i: int) -> Fraction:
        return self.scale * self.ratio**i + self.offset

    def limit(self) -> Optional[Fraction]:
        return self.offset


@dataclass(frozen=True)
class ReciprocalRule:
    base: "IndexRule"

    def value_at(self, i: int) -> Fraction:
        v = self.base.value_at(i)
        if v == 0:
            raise ZeroDivisionError(f"reciprocal rule hits zero at index {i}")
        return 1 / v

    def limit(self) -> Optional[Fraction]:
        b = self.base.limit()
        if b is None or b == 0:
            return None
        return 1 / b


@dataclass(frozen=True)
class DifferenceRule:
    """``base(i) - base(i+1)``; partial sums telescope."""

    base: "IndexRule"

    def value_at(self, i: int) -> Fraction:
        return self.base.value_at(i) - self.base.value_at(i + 1)

    def limit(self) -> Optional[Fraction]:
        return Fraction(0) if self.base.limit() is not None else None


IndexRule = Union[ConstantRule, PowerRule, GeometricRule, ReciprocalRule, DifferenceRule]


def rule_is_positive(rule: IndexRule) -> Optional[bool]:
    """True when rule(i) > 0 for every i >= 1, when that is decidable."""
    if isinstance(rule, ConstantRule):
        return rule.value > 0
    if isinstance(rule, PowerRule):
        if rule.num >= 0 and rule.offset >= 0:
            return rule.num > 0 or rule.offset > 0
        if rule.num <= 0 <= rule.offset:
            # increasing toward offset; minimum at i = 1
            return rule.value_at(1) > 0
        return None
    if isinstance(rule, GeometricRule):
        if rule.ratio > 0:
            # monotone in i, so the extremes are value(1) and the limit
            if rule.scale > 0:
                return rule.offset >= 0
            if rule.scale < 0:
                return rule.value_at(1) > 0
            return rule.offset > 0
        return None
    if isinstance(rule, ReciprocalRule):
        return rule_is_positive(rule.base)
    if isinstance(rule, DifferenceRule):
        return rule_is_strictly_decreasing(rule.base)
    return None


def rule_is_strictly_decreasing(rule: IndexRule) -> Optional[bool]:
    if isinstance(rule, ConstantRule):
        return False
    if isinstance(rule, PowerRule):
        if rule.num > 0:
            return True
        if rule.num == 0:
            return False
        return None
    if isinstance(rule, GeometricRule):
        if 0 < rule.ratio < 1:
            if rule.scale > 0:
                return True
            if rule.scale < 0:
                return False
        return None
    if isinstance(rule, ReciprocalRule):
        inc = rule_is_strictly_increasing(rule.base)
        pos = rule_is_positive(rule.base)
        if inc and pos:
            return True
        return None
    return None


def rule_is_strictly_increasing(rule: IndexRule) -> Optional[bool]:
    if isinstance(rule, ConstantRule):
        return False
    if isinstance(rule, PowerRule):
        if rule.num < 0:
            return True
        if rule.num == 0:
            return False
        return None
    if isinstance(rule, GeometricRule):
        if 0 < rule.ratio < 1:
            if rule.scale < 0:
                return True
            if rule.scale > 0:
                return False
        return None
    return None


def rule_scale(rule: IndexRule, c: Fraction) -> IndexRule:
    c = Fraction(c)
    if isinstance(rule, ConstantRule):
        return ConstantRule(c * rule.value)
    if isinstance(rule, PowerRule):
        return PowerRule(c * rule.num, rule.shift, rule.power, c * rule.offset)
    if isinstance(rule, GeometricRule):
        if c == 0:
            return ConstantRule(Fraction(0))
        return GeometricRule(c * rule.scale, rule.ratio, c * rule.offset)
    raise ValueError(f"cannot scale rule {type(rule).__name__}")


def rule_one_minus(rule: IndexRule) -> IndexRule:
    """The rule ``1 - rule(i)`` (for indicator-minus-price tails)."""
    if isinstance(rule, ConstantRule):
        return ConstantRule(1 - rule.value)
    if isinstance(rule, PowerRule):
        return PowerRule(-rule.num, rule.shift, rule.power, 1 - rule.offset)
    if isinstance(rule, GeometricRule):
        return GeometricRule(-rule.scale, rule.ratio, 1 - rule.offset)
    raise ValueError(f"cannot form 1 - rule for {type(rule).__name__}")


def rules_product(a: IndexRule, b: IndexRule) -> Optional[list[IndexRule]]:
    """The pointwise product ``a(i) * b(i)`` as a sum of rules, when the
    grammar can express it.  Returns None when it cannot."""
    if isinstance(a, ReciprocalRule) and a.base == b:
        return [ConstantRule(Fraction(1))]
    if isinstance(b, ReciprocalRule) and b.base == a:
        return [ConstantRule(Fraction(1))]
    if isinstance(a, ConstantRule):
        if a.value == 0:
            return [ConstantRule(Fraction(0))]
        try:
            return [rule_scale(b, a.value)]
        except ValueError:
            return None
    if isinstance(b, ConstantRule):
        return rules_product(b, a)
    if isinstance(a, PowerRule) and isinstance(b, PowerRule):
        out: list[IndexRule] = []
        if a.offset != 0:
            out.append(PowerRule(a.offset * b.num, b.shift, b.power, Fraction(0)))
        if b.offset != 0:
            out.append(PowerRule(b.offset * a.num, a.shift, a.power, Fraction(0)))
        if a.offset != 0 and b.offset != 0:
            out.append(ConstantRule(a.offset * b.offset))
        coef = a.num * b.num
        if coef != 0:
            if a.shift == b.shift:
                out.append(PowerRule(coef, a.shift, a.power + b.power, Fraction(0)))
            elif a.power == 1 and b.power == 1:
                # partial fractions: 1/((i+s)(i+t)) = (1/(t-s))(1/(i+s) - 1/(i+t))
                s, t = a.shift, b.shift
                factor = coef / Fraction(t - s)
                out.append(PowerRule(factor, s, 1, Fraction(0)))
                out.append(PowerRule(-factor, t, 1, Fraction(0)))
            else:
                return None
        return out
    if isinstance(a, GeometricRule) and isinstance(b, GeometricRule):
        out = []
        prod_ratio = a.ratio * b.ratio
        if a.scale * b.scale != 0:
            out.append(GeometricRule(a.scale * b.scale, prod_ratio, Fraction(0)))
        if a.offset != 0 and b.scale != 0:
            out.append(GeometricRule(a.offset * b.scale, b.ratio, Fraction(0)))
        if b.offset != 0 and a.scale != 0:
            out.append(GeometricRule(b.offset * a.scale, a.ratio, Fraction(0)))
        if a.offset * b.offset != 0:
            out.append(ConstantRule(a.offset * b.offset))
        return out
    return None


# ---------------------------------------------------------------------------
# Primitive certified streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteStream:
    """Finitely many nonzero terms, given as (index, value) pairs."""

    terms: tuple[tuple[int, Fraction], ...]

    def total(self) -> Fraction:
        return sum((v for _, v in self.terms), Fraction(0))


@dataclass(frozen=True)
class ExactStream:
    value: Fraction
    method: str = "ClosedForm"


@dataclass(frozen=True)
class AltPowerStream:
    """``sum_i scale * (-1)**i / (i + shift)**power`` from i = 1."""

    scale: Fraction
    shift: int
    power: int


@dataclass(frozen=True)
class PowerStream:
    """``sum_i scale / (i + shift)**power``: one-signed power terms."""

    scale: Fraction
    shift: int
    power: int


@dataclass(frozen=True)
class GeomStream:
    """``sum_{i>=1} first * ratio**(i-1)`` with |ratio| < 1: exact."""

    first: Fraction
    ratio: Fraction


@dataclass(frozen=True)
class PowerGeomStream:
    """``sum_i scale * ratio**i / (i + shift)**power`` with |ratio| < 1."""

    scale: Fraction
    ratio: Fraction
    shift: int
    power: int


@dataclass(frozen=True)
class ConstTermStream:
    """All terms equal a nonzero constant: diverges toward its sign."""

    value: Fraction


@dataclass(frozen=True)
class BlockRearrangedStream:
    """The alternating power series rearranged by the fixed block
    permutation sending positions (3k-2, 3k-1, 3k) to indices
    (4k-3, 4k-1, 2k): two odd-index terms per even-index term.

    Terms are ``scale * (-1)**j / (j + shift)`` visited in that order.
    Block k sums to
    ``-scale * ((shift+3)/((4k+2s)(4k-3+s)) + (shift+1)/((4k+2s)(4k-1+s)))``,
    which is one-signed and O(1/k^2), giving the tail bound
    ``|tail after m blocks| <= |scale| * (shift+2) / (2m)``.
    """

    scale: Fraction
    shift: int


@dataclass(frozen=True)
class UnknownStream:
    reason: str


Stream = Union[
    FiniteStream,
    ExactStream,
    AltPowerStream,
    PowerStream,
    GeomStream,
    PowerGeomStream,
    ConstTermStream,
    BlockRearrangedStream,
    UnknownStream,
]


# ---------------------------------------------------------------------------
# Fixed-point interval accumulation
# ---------------------------------------------------------------------------


class IntervalAccumulator:
    """Outward-rounded fixed-point partial sums (scale ``2**96``)."""

    __slots__ = ("lo", "hi")

    def __init__(self) -> None:
        self.lo = 0
        self.hi = 0

    def add(self, num: int, den: int) -> None:
        if den < 0:
            num, den = -num, -den
        x = num << SCALE_BITS
        self.lo += x // den
        self.hi += -((-x) // den)

    def add_fraction(self, f: Fraction) -> None:
        self.add(f.numerator, f.denominator)

    def bounds(self) -> tuple[Fraction, Fraction]:
        return (Fraction(self.lo, _SCALE), Fraction(self.hi, _SCALE))


# ---------------------------------------------------------------------------
# Structural convergence queries (no numeric evaluation)
# ---------------------------------------------------------------------------


def _stream_converges(s: Stream) -> Optional[bool]:
    if isinstance(s, (FiniteStream, ExactStream, GeomStream, PowerGeomStream)):
        return True
    if isinstance(s, AltPowerStream):
        return True if s.scale == 0 or s.power >= 1 else None
    if isinstance(s, PowerStream):
        if s.scale == 0:
            return True
        return s.power >= 2
    if isinstance(s, ConstTermStream):
        return s.value == 0
    if isinstance(s, BlockRearrangedStream):
        return True
    return None


def _stream_converges_absolutely(s: Stream) -> Optional[bool]:
    if isinstance(s, (FiniteStream, ExactStream, GeomStream, PowerGeomStream)):
        return True
    if isinstance(s, (AltPowerStream, PowerStream)):
        return True if s.scale == 0 else s.power >= 2
    if isinstance(s, ConstTermStream):
        return s.value == 0
    if isinstance(s, BlockRearrangedStream):
        return s.scale == 0
    return None


def streams_converge(streams: list[Stream]) -> Optional[bool]:
    """Convergence of the combined series, decided structurally.

    The decomposition is only trusted when at most one component is
    conditionally convergent or divergent; mixed divergences are honest
    unknowns.
    """
    verdicts = [_stream_converges(s) for s in streams]
    if any(v is None for v in verdicts):
        return None
    divergent = [s for s, v in zip(streams, verdicts) if not v]
    if not divergent:
        return True
    if len(divergent) == 1:
        return False
    # several divergent pieces could cancel; stay honest
    signs = set()
    for s in divergent:
        if isinstance(s, PowerStream):
            signs.add(1 if s.scale > 0 else -1)
        elif isinstance(s, ConstTermStream):
            signs.add(1 if s.value > 0 else -1)
        else:
            return None
    if len(signs) == 1:
        return False
    return None


def streams_converge_absolutely(streams: list[Stream]) -> Optional[bool]:
    verdicts = [_stream_converges_absolutely(s) for s in streams]
    if any(v is None for v in verdicts):
        return None
    # absolute values do not cancel across components only when each
    # component is one-signed termwise; our primitives are, except the
    # alternating ones, whose absolute series is the matching PowerStream.
    return all(verdicts)


# ---------------------------------------------------------------------------
# Numeric evaluation with certificates
# ---------------------------------------------------------------------------


def _eval_alt_power(s: AltPowerStream, horizon: int) -> SeriesValue:
    if s.scale == 0:
        return Exact(Fraction(0))
    n = max(1, horizon)
    acc = IntervalAccumulator()
    num, den0 = s.scale.numerator, s.scale.denominator
    sh, p = s.shift, s.power
    for i in range(1, n + 1):
        sign_num = -num if (i & 1) else num
        acc.add(sign_num, den0 * (i + sh) ** p)
    tail = s.scale * Fraction((-1) ** (n + 1), (n + 1 + sh) ** p)
    lo, hi = acc.bounds()
    cert = Certificate("AlternatingTail", cut_index=n, tail_bound=abs(tail))
    if tail >= 0:
        return Enclosure(lo, hi + tail, cert)
    return Enclosure(lo + tail, hi, cert)


def _eval_power(s: PowerStream, horizon: int) -> SeriesValue:
    if s.scale == 0:
        return Exact(Fraction(0))
    if s.power < 2:
        return Divergent(1 if s.scale > 0 else -1, "harmonic-type divergence")
    # integral tail shrinks like n**(1-p): pick a modest cut
    n = min(horizon, 20000)
    acc = IntervalAccumulator()
    num, den0 = s.scale.numerator, s.scale.denominator
    sh, p = s.shift, s.power
    for i in range(1, n + 1):
        acc.add(num, den0 * (i + sh) ** p)
    bound = abs(s.scale) / Fraction((p - 1) * (n + sh) ** (p - 1))
    lo, hi = acc.bounds()
    cert = Certificate("PSeriesIntegralTail", cut_index=n, tail_bound=bound)
    if s.scale > 0:
        return Enclosure(lo, hi + bound, cert)
    return Enclosure(lo - bound, hi, cert)


def _eval_power_geom(s: PowerGeomStream, horizon: int) -> SeriesValue:
    if s.scale == 0:
        return Exact(Fraction(0))
    r = abs(s.ratio)
    # stop once the geometric tail bound is far below the fixed-point grain
    n = 1
    bound = abs(s.scale) * r / (1 - r)
    target = Fraction(1, 1 << (SCALE_BITS - 16))
    while bound > target and n < horizon and n < 100000:
        n += 1
        bound = abs(s.scale) * r ** (n + 1) / ((1 - r) * (n + 1 + s.shift) ** s.power)
    acc = IntervalAccumulator()
    for i in range(1, n + 1):
        term = s.scale * s.ratio**i / Fraction((i + s.shift) ** s.power)
        acc.add_fraction(term)
    lo, hi = acc.bounds()
    cert = Certificate("GeometricTail", cut_index=n, tail_bound=bound)
    return Enclosure(lo - bound, hi + bound, cert)


def _eval_block_rearranged(s: BlockRearrangedStream, horizon: int) -> SeriesValue:
    if s.scale == 0:
        return Exact(Fraction(0))
    m = max(1, horizon // 3)
    acc = IntervalAccumulator()
    num, den0 = s.scale.numerator, s.scale.denominator
    sh = s.shift
    for k in range(1, m + 1):
        acc.add(-num, den0 * (4 * k - 3 + sh))
        acc.add(-num, den0 * (4 * k - 1 + sh))
        acc.add(num, den0 * (2 * k + sh))
    bound = abs(s.scale) * Fraction(sh + 2, 2 * m)
    lo, hi = acc.bounds()
    cert = Certificate("BlockTail", cut_index=3 * m, tail_bound=bound)
    # blocks are one-signed: negative for positive scale
    if s.scale > 0:
        return Enclosure(lo - bound, hi, cert)
    return Enclosure(lo, hi + bound, cert)


def evaluate_stream(s: Stream, horizon: int = 1_000_000) -> SeriesValue:
    if isinstance(s, FiniteStream):
        return Exact(s.total(), Certificate("FiniteSum", cut_index=len(s.terms)))
    if isinstance(s, ExactStream):
        return Exact(s.value, Certificate(s.method))
    if isinstance(s, GeomStream):
        return Exact(s.first / (1 - s.ratio), Certificate("ClosedForm", note="geometric"))
    if isinstance(s, AltPowerStream):
        return _eval_alt_power(s, horizon)
    if isinstance(s, PowerStream):
        return _eval_power(s, horizon)
    if isinstance(s, PowerGeomStream):
        return _eval_power_geom(s, horizon)
    if isinstance(s, ConstTermStream):
        if s.value == 0:
            return Exact(Fraction(0))
        return Divergent(1 if s.value > 0 else -1, "terms do not vanish")
    if isinstance(s, BlockRearrangedStream):
        return _eval_block_rearranged(s, horizon)
    return Undetermined(s.reason)


def evaluate_streams(streams: list[Stream], horizon: int = 1_000_000) -> SeriesValue:
    values = [evaluate_stream(s, horizon) for s in streams]
    if not values:
        return Exact(Fraction(0))
    total = values[0]
    for v in values[1:]:
        total = sv_add(total, v)
    return total


# ---------------------------------------------------------------------------
# Rules as streams
# ---------------------------------------------------------------------------


def rule_to_streams(rule: IndexRule) -> list[Stream]:
    """The series ``sum_i rule(i)`` decomposed into primitives."""
    if isinstance(rule, ConstantRule):
        return [ConstTermStream(rule.value)]
    if isinstance(rule, PowerRule):
        out: list[Stream] = []
        if rule.num != 0:
            out.append(PowerStream(rule.num, rule.shift, rule.power))
        if rule.offset != 0:
            out.append(ConstTermStream(rule.offset))
        return out or [ExactStream(Fraction(0), "FiniteSum")]
    if isinstance(rule, GeometricRule):
        out = []
        if rule.scale != 0:
            # sum_{i>=1} scale*ratio**i = geometric with first term scale*ratio
            out.append(GeomStream(rule.scale * rule.ratio, rule.ratio))
        if rule.offset != 0:
            out.append(ConstTermStream(rule.offset))
        return out or [ExactStream(Fraction(0), "FiniteSum")]
    if isinstance(rule, DifferenceRule):
        base = rule.base
        lim = base.limit()
        if lim is None:
            return [UnknownStream("telescoping base has no recognized limit")]
        return [ExactStream(base.value_at(1) - lim, "Telescoping")]
    if isinstance(rule, ReciprocalRule):
        lim = rule.limit()
        if lim is None:
            base_lim = rule.base.limit()
            if base_lim == 0:
                pos = rule_is_positive(rule.base)
                if pos:
                    return [UnknownStream("reciprocal of vanishing rule: terms blow up")]
            return [UnknownStream("reciprocal rule not summable in the grammar")]
        if lim != 0:
            return [UnknownStream("reciprocal rule terms approach a nonzero constant")]
        return [UnknownStream("reciprocal rule not summable in the grammar")]
    return [UnknownStream(f"no stream decomposition for {type(rule).__name__}")]


def abs_rule_to_streams(rule: IndexRule) -> Optional[list[Stream]]:
    """Streams for ``sum_i |rule(i)|`` when the rule is provably one-signed."""
    pos = rule_is_positive(rule)
    if pos:
        return rule_to_streams(rule)
    neg_rule: Optional[IndexRule]
    try:
        neg_rule = rule_scale(rule, Fraction(-1))
    except ValueError:
        neg_rule = None
    if neg_rule is not None and rule_is_positive(neg_rule):
        return rule_to_streams(neg_rule)
    if isinstance(rule, ConstantRule):
        return [ConstTermStream(abs(rule.value))]
    return None
