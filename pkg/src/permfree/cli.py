"""Command-line entry point.

Usage:
    permfree certify --schemes id:sym,gamma:sym,mix:jsmall --grid 4,9,16
    permfree moment --word id,id,id,id --grid 2,4,8 --exact
    permfree moment --word mu1,mu1,mu2,mu2 --n 128 --mc --samples 10000
    permfree predict --word c,c*,c,c* --kinds c:circ
    permfree reproduce remark41

Exit codes: 0 pass, 1 violation or tolerance failure, 2 usage error,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import reproduce as repro
from .conditions import CertificationError, FamilyMember, all_satisfied, certify_family
from .gaussian import StudyRow, mc_moment, study_to_csv
from .pairings import CIRCULAR, SEMICIRCULAR, WordSignature, free_limit_prediction
from .perms import InadmissibleSizeError, PermutationError
from .wick import DEFAULT_BUDGET, BudgetExceeded, exact_word_moment
from .words import MomentWord, SchemeRegistry, WordError, parse_grid, word_signature

log = logging.getLogger("permfree")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

_KIND_ALIASES = {"sym": "symmetric", "symmetric": "symmetric", "jsmall": "jsmall", "j-small": "jsmall"}
_FREE_KIND_ALIASES = {"semi": SEMICIRCULAR, "semicircular": SEMICIRCULAR, "circ": CIRCULAR, "circular": CIRCULAR}


class UsageError(ValueError):
    pass


def parse_scheme_specs(spec: str, registry: SchemeRegistry) -> list[FamilyMember]:
    members = []
    for tok in spec.split(","):
        tok = tok.strip()
        label, sep, kind = tok.rpartition(":")
        if not sep or not label or kind not in _KIND_ALIASES:
            raise UsageError(f"scheme spec {tok!r} must look like <label>:sym or <label>:jsmall")
        try:
            scheme = registry.get(label)
        except (WordError, PermutationError, OSError) as exc:
            raise UsageError(str(exc)) from None
        members.append(FamilyMember(scheme, _KIND_ALIASES[kind]))
    return members


def parse_kinds(spec: str) -> dict[str, str]:
    kinds = {}
    for tok in spec.split(","):
        label, sep, kind = tok.strip().rpartition(":")
        if not sep or kind not in _FREE_KIND_ALIASES:
            raise UsageError(f"kind spec {tok!r} must look like <label>:semi or <label>:circ")
        kinds[label] = _FREE_KIND_ALIASES[kind]
    return kinds


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def cmd_certify(args: argparse.Namespace) -> int:
    registry = SchemeRegistry()
    members = parse_scheme_specs(args.schemes, registry)
    grid = parse_grid(args.grid)
    try:
        reports = certify_family(members, grid, distinct=not args.multiplicity)
    except CertificationError as exc:
        if "not symmetric" in str(exc):
            print(f"violation: {exc}", file=sys.stderr)
            return EXIT_FAIL
        raise UsageError(str(exc)) from None
    ok = all_satisfied(reports)
    payload = {"config": _config_echo(args), "reports": [r.to_dict() for r in reports], "pass": ok}
    _emit(json.dumps(payload, indent=2), args.output)
    for r in reports:
        if r.verdict != "satisfies":
            print(f"{r.kind} {'/'.join(r.labels)}: {r.verdict} (exponent {r.fitted_exponent:.3f})", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_moment(args: argparse.Namespace) -> int:
    registry = SchemeRegistry()
    word = MomentWord.parse(args.word)
    grid = [args.n] if args.n is not None else parse_grid(args.grid or "")
    do_exact = args.exact or not args.mc
    for n in grid:
        if not registry.admissible(word, n):
            raise UsageError(f"word {word} is not defined at side {n}")
    prediction = None
    if not word.has_constants:
        prediction = free_limit_prediction(word_signature(word, max(grid), registry))
    rows: list[StudyRow] = []
    for n in grid:
        exact = None
        if do_exact:
            if word.has_constants:
                raise UsageError("exact evaluation covers Gaussian-only words; use --mc")
            exact = exact_word_moment(word, n, registry, budget=args.budget).value
        if args.mc:
            est = mc_moment(word, n, args.samples, args.seed, registry, workers=args.threads)
            rows.append(StudyRow(est, exact, prediction))
        else:
            rows.append(StudyRow(None, exact, prediction))

    if args.format == "csv":
        if not args.mc:
            raise UsageError("csv output needs --mc")
        _emit(study_to_csv(rows), args.output)
        return EXIT_OK
    out = []
    for n, r in zip(grid, rows):
        row = {"N": n, "prediction": r.prediction}
        if r.exact is not None:
            row["exact"] = f"{r.exact.numerator}/{r.exact.denominator}"
            row["exact_float"] = float(r.exact)
        if r.estimate is not None:
            e = r.estimate
            row.update(mean_re=e.mean.real, mean_im=e.mean.imag, stderr_re=e.stderr_re,
                       stderr_im=e.stderr_im, samples=e.samples, seed=e.seed)
        out.append(row)
    if args.format == "json":
        _emit(json.dumps({"config": _config_echo(args), "word": str(word), "rows": out}, indent=2), args.output)
    else:
        lines = [f"word {word}  (free-limit prediction: {prediction})"]
        for row in out:
            parts = [f"N={row['N']}"]
            if "exact" in row:
                parts.append(f"exact={row['exact']} ({row['exact_float']:.6g})")
            if "mean_re" in row:
                parts.append(f"mc={row['mean_re']:.6g}{row['mean_im']:+.2g}i +- {row['stderr_re']:.2g}")
            lines.append("  ".join(parts))
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    kinds = parse_kinds(args.kinds)
    try:
        sig = WordSignature.parse(args.word, kinds)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(free_limit_prediction(sig))
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    runner = repro.BUNDLES[args.name]
    result = runner(samples=args.samples, seed=args.seed, workers=args.threads)
    text = result.render() if args.format == "text" else json.dumps(result.to_dict(), indent=2)
    _emit(text, args.output)
    return EXIT_OK if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permfree", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=("json", "csv", "text"), default="text"):
        p.add_argument("--seed", type=int, default=20240601)
        p.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
        p.add_argument("--format", choices=fmt, default=default)
        p.add_argument("--output", "-o", help="write the report here instead of stdout")

    p = sub.add_parser("certify", help="check the two freeness conditions on a grid")
    p.add_argument("--schemes", required=True, help="comma list of <label>:sym|jsmall")
    p.add_argument("--grid", required=True, help="comma list of side lengths (>= 3 points)")
    p.add_argument("--multiplicity", action="store_true",
                   help="count condition (ii) triples once per matching set element")
    common(p, fmt=("json",), default="json")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("moment", help="exact and/or Monte Carlo E o tr of a word")
    p.add_argument("--word", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--grid")
    g.add_argument("--n", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--mc", action="store_true")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(p)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("predict", help="free-limit value of a word in semicircular/circular labels")
    p.add_argument("--word", required=True)
    p.add_argument("--kinds", required=True, help="comma list of <label>:semi|circ")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("reproduce", help="run a pre-registered experiment bundle")
    p.add_argument("name", choices=sorted(repro.BUNDLES))
    p.add_argument("--samples", type=int, default=None, help="override the bundle's sample count")
    common(p, fmt=("text", "json"))
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "samples", None) is not None and args.samples < 2:
        print("error: --samples must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, WordError, InadmissibleSizeError, PermutationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
