"""Command-line front end: reproducible entropy experiments as CSV or JSON tables.

Subcommands
-----------
laws      closed-form vs quadrature entropy of the k-th extreme limit laws
finite    finite-n entropy of one normalised k-th extreme
converge  finite-n entropy and density gap along a schedule of n
simulate  Monte Carlo spacing estimate against the limit entropy
classify  domain of attraction guessed from tail ratios
i1        parent-free entropy term against its large-n limit

Exit codes: 0 success, 1 a reported check failed, 2 usage or validation
error, 3 classification or numeric setup failure, 4 estimator failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .errors import DomainError, KextError, NumericError
from .finite_n import (
    DEFAULT_SCHEDULE,
    FiniteModel,
    convergence_report,
    entropy_gnk,
    i1_exact,
    i1_limit,
    normalization,
)
from .laws import Family, KExtremeLaw, LimitLaw, entropy_closed_form, entropy_quadrature
from .parents import classify_domain, parse_parent
from .sampling import MIN_MC_COUNT, RandomStream, mc_convergence, write_batch_csv

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_SETUP = 3
EXIT_ESTIMATOR = 4

COLUMNS = {
    "laws": ["family", "alpha", "k", "h_closed_form", "h_quadrature", "abs_diff"],
    "finite": ["parent", "domain", "n", "k", "a_n", "b_n", "h_gnk", "quad_error",
               "mass", "target", "gap"],
    "converge": ["n", "h_gnk", "quad_error", "target", "gap", "sup_density_gap", "status"],
    "simulate": ["parent", "n", "k", "count", "seed", "estimate", "ci_low", "ci_high",
                 "target", "inside_ci", "ks_distance"],
    "classify": ["parent", "kind", "alpha", "declared", "agrees"],
    "i1": ["n", "i1_exact", "i1_limit", "gap"],
}

DEFAULT_ALPHAS = "0.5,1,2,5"
DEFAULT_I1_SCHEDULE = "10,100,1000,10000,100000,1000000"

# fallbacks for options that neither the command line nor --config set
DEFAULTS = {
    "family": "frechet,weibull,gumbel",
    "alpha": DEFAULT_ALPHAS,
    "k": "1",
    "parent": None,
    "n": 1000,
    "schedule": None,
    "count": 200_000,
    "seed": None,
    "tol": 1e-8,
    "quad_tol": 1e-10,
    "window": None,
    "level": 0.99,
    "workers": 1,
    "format": "csv",
    "out": None,
    "samples_out": None,
}


class UsageError(KextError):
    pass


class SetupFailure(KextError):
    pass


class EstimatorFailure(KextError):
    pass


class CheckFailed(Exception):
    """The table was produced but a pass/fail condition on it did not hold."""


# -- parsing ------------------------------------------------------------------

def _int_list(text: str, label: str) -> list[int]:
    try:
        vals = [int(float(t)) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{label}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{label}: empty list")
    return vals


def _float_list(text: str, label: str) -> list[float]:
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{label}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{label}: empty list")
    return vals


def _single_k(opts: dict) -> int:
    ks = _int_list(opts["k"], "--k")
    if len(ks) != 1 or ks[0] < 1:
        raise UsageError(f"--k: expected one integer >= 1, got {opts['k']!r}")
    return ks[0]


def _parent(opts: dict):
    if not opts["parent"]:
        raise UsageError("--parent is required")
    try:
        return parse_parent(opts["parent"])
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _seed(opts: dict) -> int:
    seed = opts["seed"]
    if seed is None:
        env = os.environ.get("KEXT_SEED")
        if env is None or not env.strip():
            return 0
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"KEXT_SEED is not an integer: {env!r}") from None
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed out of range: {seed}")
    return seed


def _positive(value, label: str) -> float:
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise UsageError(f"{label} must be a positive number, got {value}")
    return value


# -- subcommands --------------------------------------------------------------

def run_laws(opts: dict) -> tuple[list[dict], dict]:
    tol = _positive(opts["tol"], "--tol")
    quad_tol = _positive(opts["quad_tol"], "--quad-tol")
    ks = _int_list(opts["k"], "--k")
    if any(k < 1 for k in ks):
        raise UsageError("--k values must be >= 1")
    fams = [f.strip().lower() for f in str(opts["family"]).split(",") if f.strip()]
    if not fams:
        raise UsageError("--family: empty list")
    alphas = _float_list(opts["alpha"], "--alpha")
    if any(not (a > 0 and math.isfinite(a)) for a in alphas):
        raise UsageError("--alpha values must be positive")
    laws = []
    for fam in fams:
        try:
            family = Family(fam)
        except ValueError:
            raise UsageError(f"unknown family {fam!r}") from None
        if family is Family.GUMBEL:
            laws.append(LimitLaw.gumbel())
        else:
            laws.extend(LimitLaw(family, a) for a in alphas)
    rows = []
    for law in laws:
        for k in ks:
            m = KExtremeLaw(law, k)
            closed = entropy_closed_form(m)
            quad = entropy_quadrature(m, quad_tol).value
            rows.append({"family": law.family.value, "alpha": law.alpha, "k": k,
                         "h_closed_form": closed, "h_quadrature": quad,
                         "abs_diff": abs(closed - quad)})
    if any(r["abs_diff"] > tol for r in rows):
        raise CheckFailed(rows, {"tol": tol})
    return rows, {"tol": tol}


def run_finite(opts: dict) -> tuple[list[dict], dict]:
    parent = _parent(opts)
    k = _single_k(opts)
    n = int(opts["n"])
    if n < 2 or k > n:
        raise UsageError(f"need n >= 2 and k <= n, got n={n}, k={k}")
    quad_tol = _positive(opts["quad_tol"], "--quad-tol")
    tag = _domain(parent)
    m = FiniteModel.build(parent, n, k, tag)
    h = entropy_gnk(m, quad_tol)
    target = entropy_closed_form(m.limit_law)
    row = {"parent": parent.spec, "domain": str(tag), "n": n, "k": k,
           "a_n": m.norm.a, "b_n": m.norm.b, "h_gnk": h.value, "quad_error": h.error,
           "mass": normalization(m).value, "target": target, "gap": abs(h.value - target)}
    return [row], {}


def run_converge(opts: dict) -> tuple[list[dict], dict]:
    parent = _parent(opts)
    k = _single_k(opts)
    schedule = (_int_list(opts["schedule"], "--schedule") if opts["schedule"]
                else list(DEFAULT_SCHEDULE))
    if any(n < 2 for n in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise UsageError("--schedule must be strictly increasing with every n >= 2")
    if k > schedule[0]:
        raise UsageError(f"--k {k} exceeds the smallest n in the schedule")
    workers = int(opts["workers"])
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    quad_tol = _positive(opts["quad_tol"], "--quad-tol")
    tag = _domain(parent)
    report = convergence_report(parent, k, schedule, tol=quad_tol, tag=tag, workers=workers)
    rows = report.rows()
    meta = {"parent": parent.spec, "domain": str(tag), "law": report.law.label()}
    if not report.gaps_decreasing():
        raise CheckFailed(rows, meta)
    return rows, meta


def run_simulate(opts: dict) -> tuple[list[dict], dict]:
    parent = _parent(opts)
    k = _single_k(opts)
    n = int(opts["n"])
    count = int(opts["count"])
    if count < MIN_MC_COUNT:
        raise UsageError(f"--count must be >= {MIN_MC_COUNT}, got {count}")
    if n < 2 or k > n:
        raise UsageError(f"need n >= 2 and k <= n, got n={n}, k={k}")
    window = None if opts["window"] is None else int(opts["window"])
    if window is not None and not 1 <= window < count // 2:
        raise UsageError(f"--window must lie in [1, count/2), got {window}")
    level = float(opts["level"])
    if not 0 < level < 1:
        raise UsageError(f"--level must lie in (0, 1), got {level}")
    seed = _seed(opts)
    tag = _domain(parent)
    rng = RandomStream(seed)
    try:
        rep = mc_convergence(parent, k, n, count, rng, window=window, level=level, tag=tag)
    except NumericError as exc:
        raise EstimatorFailure(str(exc)) from exc
    row = rep.row()
    row["seed"] = seed
    if opts["samples_out"]:
        with open(opts["samples_out"], "w", newline="") as fh:
            write_batch_csv(rep.batch, fh)
    return [row], {"window": rep.estimate.details.get("window"), "level": level}


def run_classify(opts: dict) -> tuple[list[dict], dict]:
    parent = _parent(opts)
    tag = _classified(parent)
    if not tag.known:
        raise SetupFailure(f"{parent.spec}: domain of attraction could not be determined")
    declared = parent.domain
    row = {"parent": parent.spec, "kind": tag.kind, "alpha": tag.alpha,
           "declared": None if declared is None else str(declared),
           "agrees": None if declared is None else tag.matches(declared)}
    return [row], {}


def run_i1(opts: dict) -> tuple[list[dict], dict]:
    k = _single_k(opts)
    schedule = _int_list(opts["schedule"] or DEFAULT_I1_SCHEDULE, "--schedule")
    if k >= min(schedule):
        raise UsageError(f"--k {k} must be below every n in the schedule")
    limit = i1_limit(k)
    rows = []
    for n in schedule:
        exact = i1_exact(n, k)
        rows.append({"n": n, "i1_exact": exact, "i1_limit": limit, "gap": abs(exact - limit)})
    return rows, {}


def _classified(parent):
    try:
        return classify_domain(parent)
    except NumericError as exc:
        raise SetupFailure(f"classification failed for {parent.spec}: {exc}") from exc


def _domain(parent):
    """Classified domain; the parent's exact tag replaces it when the two agree."""
    tag = _classified(parent)
    if not tag.known:
        raise SetupFailure(f"{parent.spec}: domain of attraction could not be determined")
    declared = parent.domain
    if declared is None:
        return tag
    if not tag.matches(declared):
        raise SetupFailure(f"{parent.spec}: tail ratios suggest {tag}, parent declares {declared}")
    return declared


COMMANDS = {
    "laws": run_laws,
    "finite": run_finite,
    "converge": run_converge,
    "simulate": run_simulate,
    "classify": run_classify,
    "i1": run_i1,
}


# -- output -------------------------------------------------------------------

def _fmt_float(v: float) -> str | None:
    return f"{v:.17g}" if math.isfinite(v) else None


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt_float(v) or ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    text = str(v)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _json(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return _fmt_float(v) or "null"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json(x) for x in v) + "]"
    return json.dumps(str(v))


def render(command: str, rows: list[dict], meta: dict, ok: bool, fmt: str) -> str:
    cols = COLUMNS[command]
    if fmt == "csv":
        lines = [",".join(cols)]
        lines += [",".join(_csv_cell(r.get(c)) for c in cols) for r in rows]
        return "\n".join(lines) + "\n"
    body = [
        f'  "command": {_json(command)}',
        f'  "version": {_json(__version__)}',
        f'  "ok": {_json(ok)}',
        f'  "meta": {_json(meta)}',
        f'  "columns": {_json(cols)}',
        '  "rows": [' + ",".join("\n    " + _json({c: r.get(c) for c in cols}) for r in rows)
        + ("\n  ]" if rows else "]"),
    ]
    return "{\n" + ",\n".join(body) + "\n}\n"


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--config", help="JSON file of option values; explicit flags win")
    common.add_argument("--tol", type=float, help="pass/fail tolerance for laws (default 1e-8)")
    common.add_argument("--quad-tol", dest="quad_tol", type=float,
                        help="absolute quadrature tolerance (default 1e-10)")

    parser = argparse.ArgumentParser(
        prog="kext", description="Entropy of k-th extremes: limit laws, finite n and simulation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("laws", parents=[common], argument_default=argparse.SUPPRESS,
                       help="closed-form vs quadrature entropy of the limit laws")
    p.add_argument("--family", help="comma list of frechet, weibull, gumbel")
    p.add_argument("--alpha", help=f"comma list of shape values (default {DEFAULT_ALPHAS})")
    p.add_argument("--k", help="comma list of ranks (default 1)")

    p = sub.add_parser("finite", parents=[common], argument_default=argparse.SUPPRESS,
                       help="finite-n entropy of one normalised k-th extreme")
    p.add_argument("--parent", help='parent spec, e.g. "pareto:alpha=2"')
    p.add_argument("--n", type=int)
    p.add_argument("--k")

    p = sub.add_parser("converge", parents=[common], argument_default=argparse.SUPPRESS,
                       help="finite-n entropy gaps along a schedule of n")
    p.add_argument("--parent")
    p.add_argument("--k")
    p.add_argument("--schedule", help="comma list of n (default 100,1000,10000,100000)")
    p.add_argument("--workers", type=int, help="threads; output order is unaffected")

    p = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS,
                       help="Monte Carlo spacing entropy against the limit")
    p.add_argument("--parent")
    p.add_argument("--k")
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int, help=f"sample size, at least {MIN_MC_COUNT}")
    p.add_argument("--seed", type=int, help="defaults to $KEXT_SEED, else 0")
    p.add_argument("--window", type=int, help="spacing window (default floor(sqrt(count)))")
    p.add_argument("--level", type=float, help="confidence level (default 0.99)")
    p.add_argument("--samples-out", dest="samples_out", help="also write the samples as CSV")

    p = sub.add_parser("classify", parents=[common], argument_default=argparse.SUPPRESS,
                       help="domain of attraction from tail ratios")
    p.add_argument("--parent")

    p = sub.add_parser("i1", parents=[common], argument_default=argparse.SUPPRESS,
                       help="parent-free entropy term against its limit")
    p.add_argument("--k")
    p.add_argument("--schedule", help=f"comma list of n (default {DEFAULT_I1_SCHEDULE})")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults, then ``--config`` values, then explicit flags."""
    given = vars(args).copy()
    command = given.pop("command")
    config_path = given.pop("config", None)
    opts = dict(DEFAULTS)
    if config_path:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            opts[key] = value
    opts.update(given)
    if opts["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {opts['format']!r}")
    opts["command"] = command
    return opts


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        opts = resolve_options(args)
        command = opts["command"]
        try:
            rows, meta = COMMANDS[command](opts)
            ok = True
        except CheckFailed as failed:
            rows, meta = failed.args
            ok = False
        _emit(render(command, rows, meta, ok, opts["format"]), opts["out"])
        return EXIT_OK if ok else EXIT_CHECK
    except UsageError as exc:
        print(f"kext: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EstimatorFailure as exc:
        print(f"kext: estimator failure: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except SetupFailure as exc:
        print(f"kext: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except DomainError as exc:
        print(f"kext: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"kext: numeric failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(f"kext: diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_SETUP
    except OSError as exc:
        print(f"kext: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
