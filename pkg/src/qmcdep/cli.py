"""Command-line interface: gen, criteria, cqe, converge, hist.

Every output starts with one ``# {json}`` line holding the resolved
configuration, followed by CSV.  Exit codes: 0 success, 2 usage error,
1 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import MissingPermutation
from .experiments import MC, ExperimentPlan, convergence_sweep, histogram_csv, histogram_study
from .integrands import SanNetwork, make_integrand
from .negdep import MODES, cqe_check, criterion
from .numth import first_primes
from .permute import Permutation, load_permutation_set
from .sequences import SequenceSpec, faure_base, to_reals
from .tables import TABLES, build_row, calibrated_L, variant_factors, variant_perms

RAND = {"shift": "digital_shift", "owen": "owen_scramble", "linear": "linear_scramble", "none": "none"}
FAMILIES = ("vdc", "halton", "ghalton", "faure", "gfaure")


class UsageError(Exception):
    """Bad or conflicting flags; reported with exit code 2."""


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------

def parse_ns(text: str) -> list[int]:
    """``start:count`` means start, 2 start, ..., count start; otherwise a comma list."""
    try:
        if ":" in text:
            step, count = (int(t) for t in text.split(":"))
            if step < 2 or count < 1:
                raise ValueError
            return [step * m for m in range(1, count + 1)]
        ns = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--ns expects start:count or a comma list of integers, got {text!r}") from None
    if not ns or min(ns) < 2 or ns != sorted(set(ns)):
        raise UsageError("--ns must list strictly ascending sizes >= 2")
    return ns


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NEGDEP_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise UsageError(f"NEGDEP_SEED must be an integer, got {env!r}") from None
    return 0


def _perm_source(value: Optional[str]):
    """Resolve --perms/--factors: a keyword, or file:<path> loaded as a permutation set."""
    if value is None:
        return None, None
    if value.startswith("file:"):
        path = value[5:]
        if not path:
            raise UsageError("file: needs a path")
        return "file", load_permutation_set(path)
    return value, None


def _construction(args, s: int) -> SequenceSpec:
    fam = args.family
    perms_kind, perms_file = _perm_source(getattr(args, "perms", None))
    fac_kind, fac_file = _perm_source(getattr(args, "factors", None))
    if fam in ("faure", "gfaure") and perms_kind is not None:
        raise UsageError("--perms applies to halton/ghalton/vdc; use --factors for Faure")
    if fam in ("halton", "ghalton", "vdc") and fac_kind is not None:
        raise UsageError("--factors applies to gfaure only")
    if fam == "ghalton" and perms_kind is None:
        raise UsageError("--family ghalton needs --perms")
    if fam == "halton" and perms_kind not in (None, "identity"):
        raise UsageError("--family halton is unpermuted; use ghalton with --perms")
    if fam == "gfaure" and fac_kind is None:
        raise UsageError("--family gfaure needs --factors")
    if fam == "faure" and fac_kind is not None:
        raise UsageError("--family faure takes no factors; use gfaure")
    if args.base is not None and fam in ("halton", "ghalton"):
        raise UsageError("--base does not apply to Halton (bases are the first s primes)")

    if fam in ("halton", "ghalton"):
        perms = None
        if fam == "ghalton":
            bases = first_primes(s)
            if perms_kind == "identity":
                perms = {b: Permutation.identity(b) for b in bases}
            elif perms_kind == "file":
                missing = [b for b in bases if b not in perms_file]
                if missing:
                    raise MissingPermutation(missing[0])
                perms = {b: perms_file[b] for b in bases}
            elif perms_kind in ("faure92", "offset"):
                perms = variant_perms(perms_kind, bases)
            else:
                raise UsageError(f"unknown --perms {perms_kind!r}")
        return SequenceSpec(fam, s=s, perms=perms, label=f"{fam}:{perms_kind or 'regular'}")
    if fam == "vdc":
        base = args.base or 2
        perms = None
        if perms_kind == "file":
            perms = {base: perms_file[base]}
        elif perms_kind in ("faure92", "offset"):
            perms = variant_perms(perms_kind, [base])
        elif perms_kind not in (None, "identity"):
            raise UsageError(f"unknown --perms {perms_kind!r}")
        return SequenceSpec("vdc", base=base, perms=perms, label=f"vdc:{perms_kind or 'regular'}")
    base = args.base or faure_base(s)
    factors = None
    if fam == "gfaure":
        if fac_kind == "file":
            factors = variant_factors("dl", base, fac_file)
        elif fac_kind in ("f92", "faure92"):
            factors = variant_factors("faure92", base)
        elif fac_kind == "offset":
            factors = variant_factors("offset", base)
        else:
            raise UsageError(f"unknown --factors {fac_kind!r}")
    return SequenceSpec(fam, s=s, base=base, factors=factors, label=f"{fam}:{fac_kind or 'regular'}")


def _emit(args, config: dict, body: str) -> None:
    text = "# " + json.dumps(config, sort_keys=True) + "\n" + body
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, **extra) -> dict:
    doc = {k: v for k, v in vars(args).items() if k not in ("func", "threads", "out", "config")}
    doc["version"] = __version__
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> None:
    spec = _construction(args, args.s if args.family != "vdc" else 1)
    P = spec.build(args.n, args.start)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if args.digits:
        wr.writerow([f"y{j + 1}" for j in range(P.s)])
        for row in P.digits:
            wr.writerow([int(v) for v in row])
    else:
        wr.writerow([f"x{j + 1}" for j in range(P.s)])
        for row in to_reals(P):
            wr.writerow([repr(float(v)) for v in row])
    _emit(args, _config(args, bases=list(P.bases), ndigits=list(P.ndigits)), buf.getvalue())
    print(f"n={P.n} s={P.s} bases={list(P.bases)}", file=sys.stderr)


def _criteria_row(wr, label, b, P, rep):
    wr.writerow([label, b, P.s, rep.d, P.n, rep.L, repr(rep.c), repr(rep.cbar), str(rep.argmax)])


def cmd_criteria(args) -> None:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["Permutations", "b", "s", "d", "n", "L", "c", "cbar", "argmax"])
    extra = {}
    if args.table is not None:
        if args.family is not None or args.s is not None or args.n is not None:
            raise UsageError("--table cannot be combined with --family/--s/--n")
        _, perm_file = _perm_source(args.perms) if args.perms else (None, None)
        skipped = []
        for row in TABLES[args.table]:
            if row.variant in ("dl", "fl") and perm_file is None:
                skipped.append(row.key)
                continue
            P = build_row(row, perm_file)
            L = args.L if args.L is not None else calibrated_L(row.family, row.n)
            rep = criterion(P, args.criterion_base or 2, args.d, args.w, L, args.threads, args.mode)
            _criteria_row(wr, row.label, row.b if row.b else "", P, rep)
        if skipped:
            print("skipped rows needing --perms file:<path>: " + ", ".join(skipped), file=sys.stderr)
        extra["skipped"] = skipped
    else:
        if args.family is None or args.s is None or args.n is None:
            raise UsageError("criteria needs --table or all of --family, --s, --n")
        spec = _construction(args, args.s)
        P = spec.build(args.n, args.start)
        rep = criterion(P, args.criterion_base or 2, args.d, args.w, args.L, args.threads, args.mode)
        b = spec.base if spec.family in ("faure", "gfaure") else ""
        _criteria_row(wr, spec.label, b, P, rep)
    _emit(args, _config(args, seed=None, **extra), buf.getvalue())


def cmd_cqe(args) -> None:
    spec = _construction(args, args.s)
    P = spec.build(args.n, args.start)
    res = cqe_check(P, args.criterion_base, args.L)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["k", "C"])
    for k, c in res.violations:
        wr.writerow([str(k), repr(c)])
    _emit(args, _config(args, cqe=res.ok, checked=res.checked), buf.getvalue())
    print(f"c.q.e.: {res.ok} ({res.checked} k checked, {len(res.violations)} violations)", file=sys.stderr)


def _integrand(args):
    san = SanNetwork.load(args.san_config) if args.san_config else None
    if args.f == "g2" and args.c is None:
        raise UsageError("--f g2 needs --c")
    if args.f != "san" and args.s is None:
        raise UsageError(f"--f {args.f} needs --s")
    return make_integrand(args.f, args.s, args.c, san)


def cmd_converge(args) -> None:
    f = _integrand(args)
    seed = _seed(args)
    ns = parse_ns(args.ns)
    if args.family == MC:
        construction = MC
    else:
        construction = _construction(args, f.s)
    plan = ExperimentPlan(construction, RAND[args.rand], f, tuple(ns), args.V, seed,
                          args.start, args.threads)
    res = convergence_sweep(plan)
    _emit(args, _config(args, seed=seed, plan=plan.describe()), res.to_csv())


def cmd_hist(args) -> None:
    f = _integrand(args)
    seed = _seed(args)
    fam = args.family
    if fam not in ("faure", "halton"):
        raise UsageError("hist supports --family faure or halton")
    if args.rand not in ("owen", "linear"):
        raise UsageError("hist scrambles with --rand owen or linear")
    _, perm_file = _perm_source(args.perms) if args.perms else (None, None)
    s = f.s
    variants = []
    if fam == "faure":
        base = args.base or faure_base(s)
        scrambled = SequenceSpec("faure", s=s, base=base, label="faure")
        for v in ("regular", "faure92", "offset", "dl"):
            if v == "dl":
                if perm_file is None:
                    continue
                variants.append(SequenceSpec("gfaure", s=s, base=base,
                                             factors=variant_factors("dl", base, perm_file), label="file"))
                continue
            fac = variant_factors(v, base)
            variants.append(SequenceSpec("gfaure" if fac else "faure", s=s, base=base, factors=fac, label=v))
    else:
        bases = first_primes(s)
        scrambled = SequenceSpec("halton", s=s, label="halton")
        for v in ("regular", "faure92", "offset"):
            perms = variant_perms(v, bases)
            variants.append(SequenceSpec("ghalton" if perms else "halton", s=s, perms=perms, label=v))
        if perm_file is not None:
            variants.append(SequenceSpec("ghalton", s=s, perms=variant_perms("dl", bases, perm_file),
                                         label="file"))
    rows = histogram_study(args.n, args.R, scrambled, variants, f, seed, RAND[args.rand], args.V,
                           args.threads)
    _emit(args, _config(args, seed=seed, variants=[v.label for v in variants]), histogram_csv(rows))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_construction(p, required=True):
    p.add_argument("--family", choices=FAMILIES, required=required)
    p.add_argument("--base", type=_positive, help="Faure base (default: smallest prime >= s)")
    p.add_argument("--perms", help="identity, faure92, offset or file:<path>")
    p.add_argument("--factors", help="f92, offset or file:<path>")
    p.add_argument("--start", type=_positive, default=1, help="index of the first point (1-based)")


def _add_common(p):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--threads", type=_positive, default=1, help="worker threads (never changes output)")
    p.add_argument("--config", help="JSON file whose keys override flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmcdep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a point set as CSV")
    _add_construction(p)
    p.add_argument("--s", type=_positive, default=1)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--digits", action="store_true", help="write digit integers instead of reals")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("criteria", help="c and c-bar criteria for constructions or table presets")
    _add_construction(p, required=False)
    p.add_argument("--table", type=int, choices=sorted(TABLES))
    p.add_argument("--s", type=_positive)
    p.add_argument("--n", type=_positive)
    p.add_argument("--criterion-base", type=_positive, dest="criterion_base")
    p.add_argument("--d", type=_positive, default=2)
    p.add_argument("--w", type=_positive)
    p.add_argument("--L", type=_positive)
    p.add_argument("--mode", choices=MODES, default="projection")
    _add_common(p)
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("cqe", help="check complete quasi-equidistribution")
    _add_construction(p)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--criterion-base", type=_positive, dest="criterion_base",
                   help="default: each coordinate's construction base")
    p.add_argument("--L", type=_positive)
    _add_common(p)
    p.set_defaults(func=cmd_cqe)

    for name, func, help_ in (("converge", cmd_converge, "MSE/variance over an n-grid"),
                              ("hist", cmd_hist, "scrambled-vs-deterministic MSE study")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--f", choices=("h0", "h1", "g2", "san"), required=True)
        p.add_argument("--s", type=_positive)
        p.add_argument("--c", type=float)
        p.add_argument("--san-config", dest="san_config")
        p.add_argument("--V", type=int, default=25)
        p.add_argument("--seed", type=lambda t: int(t, 0))
        if name == "converge":
            _add_construction(p, required=False)
            p.set_defaults(family="faure")
            p.add_argument("--ns", required=True, help="start:count or comma list")
            p.add_argument("--rand", choices=sorted(RAND), default="shift")
        else:
            p.add_argument("--family", choices=("faure", "halton"), default="faure")
            p.add_argument("--base", type=_positive)
            p.add_argument("--perms", help="file:<path> adds a permutation-file variant")
            p.add_argument("--n", type=_positive, required=True)
            p.add_argument("--R", type=_positive, default=100)
            p.add_argument("--rand", choices=("owen", "linear"), default="linear")
        _add_common(p)
        p.set_defaults(func=func)
    # converge also accepts the plain Monte Carlo baseline
    conv = sub.choices["converge"]
    for action in conv._actions:
        if action.dest == "family":
            action.choices = FAMILIES + (MC,)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise UsageError(f"unknown command {command!r}")  # pragma: no cover


def _apply_config(parser, args):
    """Override flags with the keys of the --config JSON object.

    Values pass through the same type conversion and choice checks as the
    corresponding flag.
    """
    if not getattr(args, "config", None):
        return args
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read --config: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("--config must hold a JSON object")
    actions = {a.dest: a for a in _subparser(parser, args.command)._actions}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if dest in ("func", "command", "config", "help") or action is None:
            raise UsageError(f"unknown config key {key!r}")
        if action.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = action.type(str(value))
            except (ValueError, argparse.ArgumentTypeError):
                raise UsageError(f"config key {key!r}: invalid value {value!r}") from None
        if action.choices is not None and value is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {sorted(map(str, action.choices))}")
        setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _apply_config(parser, args)
        if getattr(args, "V", 2) < 2:
            raise UsageError("--V must be >= 2")
        args.func(args)
    except UsageError as exc:
        print(f"qmcdep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, OverflowError) as exc:
        print(f"qmcdep {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
