"""Batch front-end: parse instance files, dispatch checks, emit JSON reports.

Usage:

    dutchbook classify INSTANCE.json [--horizon N] [--prefix K]
    dutchbook coherence INSTANCE.json
    dutchbook dutch-book INSTANCE.json
    dutchbook additivity INSTANCE.json [--horizon N]
    dutchbook atoms INSTANCE.json
    dutchbook synthesize INSTANCE.json
    dutchbook gallery NAME [--delta p/q] [--seed S] [--horizon N]

Reports go to standard output as a single JSON document under the
``dutchbook-lab/1`` schema.  Exit status 0 means the run completed
(whatever the verdicts); nonzero signals an input or parse problem.
Identical (instance, seed, horizon) invocations produce byte-identical
reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Mapping, Optional

from .coherence import (
    beam_attack,
    coherence_trichotomy_check,
    constant_balance_attack,
    extension_obstruction,
    lp_coherence_finite,
    rearrangement_attack,
)
from .families import ChainIntervals, EventFamily, family_event
from .fields import atoms as field_atoms
from .fields import generate_field, is_p_finite
from .gallery import (
    GALLERY_NAMES,
    example_2_4,
    example_3_6,
    example_4_3,
    p0_symmetry_check,
    quarter_bound_check,
)
from .measures import (
    MeasurePrices,
    PriceAssignment,
    check_countable_additivity,
    measure_of,
)
from .portfolios import balance_at, classify, portfolio_bet, price_of
from .serialize import (
    ParseError,
    decode_event,
    decode_family,
    decode_measure,
    decode_outcome,
    decode_portfolio,
    decode_rule,
    decode_space,
    encode_event,
    encode_family,
    encode_measure,
    encode_outcome,
    encode_portfolio,
    encode_rule,
    encode_series_value,
    encode_space,
    encode_verdicts,
    frac_to_str,
    str_to_frac,
)
from .spaces import FiniteSpace
from .synthesis import (
    NonzeroExpectationError,
    SimpleRV,
    balance_space_membership,
    expectation_of_simple,
    synthesize_balance,
)

SCHEMA = "dutchbook-lab/1"

COMMANDS = (
    "classify",
    "coherence",
    "dutch-book",
    "additivity",
    "atoms",
    "synthesize",
    "gallery",
)


class InstanceError(ValueError):
    """The instance document is structurally unusable."""


# ---------------------------------------------------------------------------
# Instance parsing
# ---------------------------------------------------------------------------


class Instance:
    """A parsed instance document with name resolution."""

    def __init__(self, doc: Mapping[str, Any]):
        if not isinstance(doc, Mapping):
            raise InstanceError("instance must be a JSON object")
        self.doc = doc
        self.space = decode_space(doc["space"]) if "space" in doc else None
        self.events = {
            name: decode_event(obj) for name, obj in doc.get("events", {}).items()
        }
        self.families = {
            name: decode_family(obj) for name, obj in doc.get("families", {}).items()
        }
        self.measure = decode_measure(doc["measure"]) if "measure" in doc else None
        self.prices = self._decode_prices(doc.get("prices"))
        self.portfolios = {
            name: self._decode_portfolio(obj)
            for name, obj in doc.get("portfolios", {}).items()
        }

    def _decode_prices(self, obj):
        if obj is None:
            if self.measure is not None:
                return MeasurePrices(self.measure)
            return None
        if isinstance(obj, Mapping) and obj.get("kind") == "measure":
            return MeasurePrices(decode_measure(obj["measure"]))
        explicit = {}
        for name, val in (obj.get("events") or {}).items():
            explicit[self.resolve_event(name)] = str_to_frac(val)
        family_rules = {}
        for name, rule in (obj.get("families") or {}).items():
            family_rules[self.resolve_family(name)] = decode_rule(rule)
        return PriceAssignment.of(explicit=explicit, family_rules=family_rules)

    def _decode_portfolio(self, obj):
        resolved = _resolve_refs(obj, self)
        return decode_portfolio(resolved)

    def resolve_event(self, ref):
        if isinstance(ref, str):
            if ref not in self.events:
                raise InstanceError(f"unresolved event name {ref!r}")
            return self.events[ref]
        return decode_event(ref)

    def resolve_family(self, ref):
        if isinstance(ref, str):
            if ref not in self.families:
                raise InstanceError(f"unresolved family name {ref!r}")
            return self.families[ref]
        return decode_family(ref)

    def echo(self) -> dict:
        """Normalized re-encoding of everything that was parsed."""
        out: dict[str, Any] = {"schema": self.doc.get("schema", SCHEMA)}
        if self.space is not None:
            out["space"] = encode_space(self.space)
        if self.events:
            out["events"] = {n: encode_event(e) for n, e in sorted(self.events.items())}
        if self.families:
            out["families"] = {
                n: encode_family(f) for n, f in sorted(self.families.items())
            }
        if self.measure is not None:
            out["measure"] = encode_measure(self.measure)
        if self.portfolios:
            out["portfolios"] = {
                n: encode_portfolio(p) for n, p in sorted(self.portfolios.items())
            }
        return out


def _resolve_refs(obj: Any, inst: Instance) -> Any:
    """Replace string event/family references inside portfolio documents."""
    if isinstance(obj, Mapping):
        out = {}
        for key, val in obj.items():
            if key == "family" and isinstance(val, str):
                out[key] = _family_doc(inst, val)
            elif key == "event" and isinstance(val, str):
                out[key] = encode_event(inst.resolve_event(val))
            elif key in ("bets", "head") and isinstance(val, list):
                out[key] = [
                    [
                        a,
                        encode_event(inst.resolve_event(e)) if isinstance(e, str) else e,
                    ]
                    for a, e in val
                ]
            else:
                out[key] = _resolve_refs(val, inst)
        return out
    if isinstance(obj, list):
        return [_resolve_refs(v, inst) for v in obj]
    return obj


def _family_doc(inst: Instance, name: str) -> dict:
    from .serialize import encode_family as enc

    return enc(inst.resolve_family(name))


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def _portfolio_prefix(pf, prices, prefix: int) -> list:
    rows = []
    for i in range(1, prefix + 1):
        try:
            a, e = portfolio_bet(pf, i)
        except IndexError:
            break
        rows.append([i, frac_to_str(a), encode_event(e)])
    return rows


def _cmd_classify(inst: Instance, opts) -> list[dict]:
    if inst.prices is None:
        raise InstanceError("classify needs prices (explicit or a measure)")
    results = []
    for name, pf in sorted(inst.portfolios.items()):
        verdicts = classify(pf, inst.prices)
        price = price_of(pf, inst.prices, horizon=opts.horizon)
        entry = {
            "portfolio": name,
            "systems": encode_verdicts(verdicts),
            "price": encode_series_value(price),
            "prefix": _portfolio_prefix(pf, inst.prices, opts.prefix),
        }
        outs = [decode_outcome(o) for o in inst.doc.get("outcomes", [])]
        if outs:
            entry["balances"] = [
                {
                    "outcome": encode_outcome(w),
                    "balance": encode_series_value(
                        balance_at(pf, inst.prices, w, horizon=opts.horizon)
                    ),
                }
                for w in outs
            ]
        results.append(entry)
    return results


def _require_finite(inst: Instance) -> FiniteSpace:
    if not isinstance(inst.space, FiniteSpace):
        raise InstanceError("this command needs a finite space")
    return inst.space


def _cmd_coherence(inst: Instance, opts) -> list[dict]:
    space = _require_finite(inst)
    if inst.prices is None:
        raise InstanceError("coherence needs prices")
    events = [inst.events[n] for n in sorted(inst.events)]
    report = lp_coherence_finite(space, events, inst.prices)
    tri = coherence_trichotomy_check(space, events, inst.prices)
    out = {
        "verdict": report.verdict,
        "trichotomy": {
            "coherent": tri.coherent,
            "rational": tri.rational,
            "strongly_coherent": tri.strongly_coherent,
            "agree": tri.agree,
            "null_outcomes": list(tri.null_outcomes),
        },
    }
    if report.witness is not None:
        out["witness"] = {lab: frac_to_str(w) for lab, w in report.witness}
    if report.dutch_book is not None:
        out["dutch_book"] = {
            "portfolio": encode_portfolio(report.dutch_book.portfolio),
            "margin": encode_series_value(report.dutch_book.margin),
            "kind": report.dutch_book.kind,
        }
    return [out]


def _cmd_dutch_book(inst: Instance, opts) -> list[dict]:
    attack = inst.doc.get("attack")
    if attack:
        kind = attack.get("kind")
        if kind == "rearrangement":
            fam = inst.resolve_family(attack["family"])
            if inst.prices is None:
                raise InstanceError("rearrangement attack needs prices")
            book = rearrangement_attack(fam, inst.prices, horizon=opts.horizon)
            if book is None:
                return [{"verdict": "no book certified"}]
            return [
                {
                    "verdict": "dutch book",
                    "kind": book.kind,
                    "margin": encode_series_value(book.margin),
                    "portfolio": encode_portfolio(book.portfolio),
                    "prefix": _portfolio_prefix(book.portfolio, inst.prices, opts.prefix),
                }
            ]
        raise InstanceError(f"unknown attack kind {kind!r}")
    return _cmd_coherence(inst, opts)


def _cmd_additivity(inst: Instance, opts) -> list[dict]:
    if inst.prices is None:
        raise InstanceError("additivity needs prices")
    whole = inst.resolve_event(inst.doc["whole"])
    parts = inst.resolve_family(inst.doc["parts"])
    verdict = check_countable_additivity(inst.prices, whole, parts, horizon=opts.horizon)
    out = {
        "verdict": verdict.status,
        "gap": encode_series_value(verdict.gap),
        "detail": verdict.detail,
    }
    from .coherence import additivity_probe

    try:
        probe = additivity_probe(whole, parts, inst.prices)
        book = constant_balance_attack(probe, inst.prices, horizon=opts.horizon)
        out["probe"] = encode_portfolio(probe)
        if book is not None:
            out["dutch_book"] = {
                "margin": encode_series_value(book.margin),
                "kind": book.kind,
            }
    except ValueError as exc:
        out["probe_error"] = str(exc)
    return [out]


def _cmd_atoms(inst: Instance, opts) -> list[dict]:
    space = _require_finite(inst)
    generators = tuple(inst.events[n] for n in sorted(inst.events))
    field = generate_field(space, generators)
    weights = inst.prices
    if weights is None:
        raise InstanceError("atoms needs prices or a measure for weights")
    if isinstance(weights, MeasurePrices):
        weights = weights.measure
    atom_list = field_atoms(field, weights)
    verdict = is_p_finite(weights, field)
    return [
        {
            "field_size": len(field.events),
            "atoms": [
                {"event": encode_event(a.event), "weight": frac_to_str(a.weight)}
                for a in atom_list
            ],
            "p_finite": verdict.status,
            "partition": [
                {"event": encode_event(a.event), "weight": frac_to_str(a.weight)}
                for a in verdict.partition
            ],
        }
    ]


def _cmd_synthesize(inst: Instance, opts) -> list[dict]:
    if inst.measure is None:
        raise InstanceError("synthesize needs a measure")
    if inst.space is None:
        raise InstanceError("synthesize needs a space")
    cells = tuple(
        (inst.resolve_event(e), str_to_frac(v)) for e, v in inst.doc["target"]["cells"]
    )
    target = SimpleRV(inst.space, cells)
    expectation = expectation_of_simple(target, inst.measure)
    out: dict[str, Any] = {"expectation": frac_to_str(expectation)}
    try:
        pf = synthesize_balance(target, inst.measure)
        out["portfolio"] = encode_portfolio(pf)
        memberships = {}
        for system in ("S1", "S2", "S2B", "S2A", "S3"):
            v = balance_space_membership(target, system, inst.measure)
            memberships[system] = {"representable": v.representable, "reason": v.reason}
        out["balance_space"] = memberships
    except NonzeroExpectationError as exc:
        out["rejected"] = f"nonzero expectation {frac_to_str(exc.expectation)}"
    return [out]


def _cmd_gallery(name: str, opts) -> list[dict]:
    if name not in GALLERY_NAMES:
        raise InstanceError(
            f"unknown gallery name {name!r}; available: {sorted(GALLERY_NAMES)}"
        )
    delta = str_to_frac(opts.delta) if opts.delta else Fraction(1, 10)
    if name == "example-4.4":
        rep = beam_attack(
            delta,
            horizon=opts.horizon,
            sample_count=100,
            truncation_limit=100_000,
            seed=opts.seed,
        )
        return [
            {
                "name": name,
                "delta": frac_to_str(rep.delta),
                "margin": encode_series_value(rep.dutch_book.margin),
                "portfolio": encode_portfolio(rep.dutch_book.portfolio),
                "indicator_cancellation": {
                    "samples": rep.sample_count,
                    "all_zero": all(s == 0 for s in rep.cancellation_sums),
                },
                "truncated_balance_bound": frac_to_str(rep.truncation_bound),
                "truncation_limit": rep.truncation_limit,
            }
        ]
    if name == "example-3.6":
        inst = example_3_6()
        rule = inst.prices.rule_for(inst.family)
        prices = [frac_to_str(rule.value_at(i)) for i in range(1, opts.prefix + 1)]
        import random

        rng = random.Random(opts.seed)
        draws = []
        for _ in range(20):
            n = rng.randint(1, 8)
            coeffs = [Fraction(rng.randint(-4, 4), rng.randint(1, 4)) for _ in range(n)]
            coords = [rng.randint(1, 8) for _ in range(n)]
            p = quarter_bound_check(n, coeffs, coords)
            draws.append(frac_to_str(p))
        return [
            {
                "name": name,
                "prices_prefix": prices,
                "strictly_increasing": all(
                    rule.value_at(i) < rule.value_at(i + 1) for i in range(1, 40)
                ),
                "quarter_bound_samples": draws,
                "expected": dict(inst.expected),
            }
        ]
    builder = GALLERY_NAMES[name]
    inst = builder(delta)
    rule = inst.prices.rule_for(inst.family)
    obstruction = extension_obstruction(inst.family, inst.prices)
    entry = {
        "name": name,
        "delta": frac_to_str(delta),
        "prices_prefix": [frac_to_str(rule.value_at(i)) for i in range(1, opts.prefix + 1)],
        "expected": dict(inst.expected),
    }
    if obstruction is not None:
        entry["extension_obstruction"] = encode_series_value(obstruction.limit)
    return [entry]


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def run(command: str, instance: Optional[Mapping[str, Any]], opts) -> dict:
    """Dispatch a command against a parsed instance document."""
    if command not in COMMANDS:
        raise InstanceError(f"unknown command {command!r}")
    if command == "gallery":
        results = _cmd_gallery(opts.name, opts)
        echo: dict[str, Any] = {"gallery": opts.name}
    else:
        if instance is None:
            raise InstanceError(f"{command} needs an instance file")
        inst = Instance(instance)
        handler = {
            "classify": _cmd_classify,
            "coherence": _cmd_coherence,
            "dutch-book": _cmd_dutch_book,
            "additivity": _cmd_additivity,
            "atoms": _cmd_atoms,
            "synthesize": _cmd_synthesize,
        }[command]
        results = handler(inst, opts)
        echo = inst.echo()
    return {
        "schema": SCHEMA,
        "command": command,
        "seed": opts.seed,
        "horizon": opts.horizon,
        "prefix": opts.prefix,
        "instance": echo,
        "results": results,
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dutchbook",
        description="Exact coherence checks and Dutch-book construction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--horizon", type=int, default=1_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--prefix", type=int, default=20)
        p.add_argument("--delta", type=str, default=None)

    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        if cmd == "gallery":
            p.add_argument("name")
        else:
            p.add_argument("instance")
        add_common(p)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    opts = parser.parse_args(argv)
    instance = None
    if opts.command != "gallery":
        try:
            with open(opts.instance, "r", encoding="utf-8") as fh:
                instance = json.load(fh)
        except OSError as exc:
            print(f"error: cannot read instance: {exc}", file=sys.stderr)
            return 2
        except json.JSONDecodeError as exc:
            print(
                f"error: parse failure at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                file=sys.stderr,
            )
            return 2
    try:
        report = run(opts.command, instance, opts)
    except (InstanceError, ParseError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
