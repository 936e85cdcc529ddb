"""
Command-line front end.

Every subcommand first normalises its arguments into a plain ``input``
dictionary, then computes a :class:`Report` from that dictionary alone. JSON
reports embed the ``input`` block, so ``--from-json REPORT`` reruns a report
and reproduces it exactly.

Exit codes: 0 when the command ran (infeasible designs included), 1 when a
batch run skipped unreadable rows, 2 for input or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .errors import DomainError, InfeasibleOriginalError, ReplicationDesignError
from .methods import (Method, MethodConfig, lim_pr, pors, pors_at, pors_monte_carlo,
                      region_builder, success_region)
from .model import (DEFAULT_UNIT_SD, EffectEstimate, GroupSummary, InitialPrior,
                    design_prior, predictive, shrinkage_prior, smd_from_groups,
                    tau_absolute, tau_relative, update_with_pilot)
from .multisite import (SUPPORTED as MULTISITE_METHODS, CostModel, MultisiteDesign,
                        cost_curve, optimal_m, optimal_site_size, pors_multisite,
                        pors_multisite_mc)
from .ssd import Constraints, Status, check_constraints, ssd, ssd_all, type_one_error

SCHEMA_VERSION = "1.0"
COMMANDS = ("prior", "pors", "ssd", "curve", "batch", "multisite", "t1e", "validate-mc")
ALL_METHODS = [m.value for m in Method]
DEFAULT_METHODS = {
    "prior": ["two-trials"], "pors": ["two-trials"], "ssd": ["two-trials"],
    "curve": ALL_METHODS, "batch": ALL_METHODS, "multisite": ["two-trials"],
    "t1e": ALL_METHODS, "validate-mc": ALL_METHODS,
}
GROUP_FIELDS = ("mean1", "mean2", "sd1", "sd2", "n1", "n2")
DEFAULT_C_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
MC_TOLERANCE_SE = 3.0


class UsageError(ReplicationDesignError, ValueError):
    """Bad command-line input (exit code 2)."""


@dataclass
class Report:
    command: str
    input: dict
    result: dict
    rows: list = field(default_factory=list)
    text: str = ""
    notices: list = field(default_factory=list)
    exit_code: int = 0

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "command": self.command,
               "input": self.input, "notices": self.notices, "result": self.result,
               "rows": self.rows}
        return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        rows = self.rows or [_flatten(self.result)]
        buf = io.StringIO()
        keys = []
        for row in rows:
            keys.extend(k for k in row if k not in keys)
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_value(row.get(k)) for k in keys})
        return buf.getvalue()

    def to_text(self) -> str:
        out = "".join(f"note: {n}\n" for n in self.notices)
        return out + self.text.rstrip("\n") + "\n"


# -- serialisation helpers ---------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, enums their value."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            out[prefix + k] = json.dumps(_clean(v))
        else:
            out[prefix + k] = v
    return out


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    if isinstance(v, enum.Enum):
        return v.value
    return v


def _fmt(x, digits=3):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    if isinstance(x, float) and math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    if x != 0 and abs(x) < 10 ** -(digits - 1):
        return f"{x:.{digits}g}"
    return f"{x:.{digits}f}"


# -- argument parsing --------------------------------------------------------

def _floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"could not parse {what} from {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated {what}, got {text!r}")
    return vals


def parse_prior(text: str) -> dict:
    """``flat | normal:mu,sd | eb[:mu] | pilot:estimate,se`` as a dictionary."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    if kind == "flat" and not rest:
        return {"kind": "flat"}
    if kind == "normal":
        mu, sd = _floats(rest, 2, "prior parameters (mu,sd)")
        if sd < 0:
            raise UsageError("normal prior sd must be nonnegative")
        return {"kind": "normal", "mean": mu, "sd": sd}
    if kind == "eb":
        mu = _floats(rest, 1, "prior mean")[0] if rest else 0.0
        return {"kind": "eb", "mean": mu}
    if kind == "pilot":
        est, se = _floats(rest, 2, "pilot estimate and se")
        if not se > 0:
            raise UsageError("pilot standard error must be positive")
        return {"kind": "pilot", "estimate": est, "se": se}
    raise UsageError(f"unknown prior {text!r}; use flat, normal:mu,sd, eb[:mu] or pilot:est,se")


def parse_methods(values, command) -> list:
    if not values:
        return list(DEFAULT_METHODS[command])
    names = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if part.lower() == "all":
                names.extend(ALL_METHODS)
            else:
                try:
                    names.append(Method.parse(part).value)
                except DomainError as exc:
                    raise UsageError(str(exc)) from None
    seen = []
    for n in names:
        if n not in seen:
            seen.append(n)
    return seen


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("original study")
    g.add_argument("--estimate", "--to", type=float, help="original effect estimate")
    g.add_argument("--se", "--so", type=float, help="standard error of the original estimate")
    g.add_argument("--n", type=int, help="original sample size (informational)")
    g.add_argument("--groups", metavar="M1,M2,SD1,SD2,N1,N2",
                   help="two-group summary; the standardized mean difference is used")
    g.add_argument("--id", default="study", help="study label")

    g = p.add_argument_group("analysis")
    g.add_argument("--method", action="append",
                   help="analysis method(s): two-trials, meta-analysis, equivalence, "
                        "replication-bf, skeptical-p or all; repeat or comma-separate")
    g.add_argument("--alpha", type=float, help="level (default: conventional per method)")
    g.add_argument("--gamma", type=float, help="Bayes factor threshold (default 0.1)")
    g.add_argument("--margin", type=float, help="equivalence margin (default 0.2)")
    g.add_argument("--same-sign-only", action="store_true",
                   help="Bayes factor success only with the sign of the original")

    g = p.add_argument_group("design prior")
    tau = g.add_mutually_exclusive_group()
    tau.add_argument("--tau", type=float, help="heterogeneity standard deviation")
    tau.add_argument("--tau-d", type=float,
                     help="heterogeneity from the range d spanned by 95%% of study effects")
    tau.add_argument("--tau-i2", type=float,
                     help="heterogeneity from relative heterogeneity I^2 in [0, 1)")
    g.add_argument("--prior", default="flat",
                   help="initial prior: flat | normal:mu,sd | eb[:mu] | pilot:est,se")

    g = p.add_argument_group("design")
    g.add_argument("--target", type=float, default=0.8, help="target pors (default 0.8)")
    g.add_argument("--unit-sd", type=float, default=DEFAULT_UNIT_SD,
                   help="unit standard deviation for se = unit_sd/sqrt(n) (default 2)")
    g.add_argument("--max-n", type=int, help="flag designs needing more than this n")
    g.add_argument("--max-t1e", type=float, help="flag designs above this type I error")
    g.add_argument("--seed", type=int, default=1, help="seed for simulation (default 1)")

    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("text", "json", "csv"), default="text")
    g.add_argument("--out", metavar="FILE", help="write output to FILE")
    g.add_argument("--from-json", metavar="REPORT",
                   help="rerun the input recorded in a JSON report")
    return p


def _replication_size(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sr", type=float, help="replication standard error")
    g.add_argument("--c", type=float, help="relative sample size n_r/n_o")
    g.add_argument("--n-r", type=float, help="replication sample size")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="repssd",
        description="Bayesian sample size determination for replication studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("prior", parents=[common], help="design prior for the effect size")
    p = sub.add_parser("pors", parents=[common], help="probability of replication success")
    _replication_size(p)
    sub.add_parser("ssd", parents=[common], help="required replication sample size")
    p = sub.add_parser("curve", parents=[common], help="pors and type I error over a grid of c")
    p.add_argument("--c-grid", default=",".join(str(c) for c in DEFAULT_C_GRID),
                   help="comma-separated relative sample sizes")
    p = sub.add_parser("batch", parents=[common], help="sample sizes for a CSV of studies")
    p.add_argument("csv", nargs="?", help="CSV with id,estimate,se[,n] or group columns")
    p.add_argument("--sort-p", action="store_true",
                   help="order studies by their original one-sided p-value")
    p = sub.add_parser("multisite", parents=[common], help="multisite allocation under costs")
    p.add_argument("--cost-site", type=float, required=False, help="cost per site K_s")
    p.add_argument("--cost-case", type=float, default=1.0, help="cost per case K_c")
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=15)
    p = sub.add_parser("t1e", parents=[common], help="type I error rate of a design")
    _replication_size(p)
    p = sub.add_parser("validate-mc", parents=[common],
                       help="compare analytic pors with simulation")
    p.add_argument("--c-grid", default=",".join(str(c) for c in DEFAULT_C_GRID))
    p.add_argument("--n-draws", type=int, default=10 ** 6)
    p.add_argument("--m", type=int, help="validate the multisite pors with m sites")
    return parser


def input_from_args(args) -> dict:
    """Normalise parsed arguments into the ``input`` block of a report."""
    cmd = args.command
    inp = {"methods": parse_methods(args.method, cmd)}
    for k in ("alpha", "gamma", "margin", "same_sign_only", "target", "unit_sd",
              "max_n", "max_t1e", "seed"):
        inp[k] = getattr(args, k)
    if args.tau_d is not None:
        inp["tau"] = {"kind": "absolute", "value": args.tau_d}
    elif args.tau_i2 is not None:
        inp["tau"] = {"kind": "relative", "value": args.tau_i2}
    else:
        inp["tau"] = {"kind": "fixed", "value": args.tau if args.tau is not None else 0.0}
    inp["prior"] = parse_prior(args.prior)

    if cmd == "batch":
        if args.csv is None:
            raise UsageError("batch needs a CSV file")
        studies, skipped = read_corpus(args.csv)
        inp["studies"] = studies
        inp["skipped"] = skipped
        inp["sort_p"] = args.sort_p
    else:
        inp["study"] = _study_from_args(args)

    if cmd in ("pors", "t1e"):
        inp["size"] = _size_from_args(args)
    if cmd in ("curve", "validate-mc"):
        inp["c_grid"] = _floats(args.c_grid, what="c values")
    if cmd == "validate-mc":
        inp["n_draws"] = args.n_draws
        inp["m"] = args.m
    if cmd == "multisite":
        if args.cost_site is None:
            raise UsageError("multisite needs --cost-site")
        inp.update(cost_site=args.cost_site, cost_case=args.cost_case,
                   m_min=args.m_min, m_max=args.m_max)
    return inp


def _study_from_args(args) -> dict:
    if args.groups is not None:
        if args.estimate is not None or args.se is not None:
            raise UsageError("give either --estimate/--se or --groups, not both")
        vals = _floats(args.groups, 6, "group summaries")
        return {"id": args.id, "groups": dict(zip(GROUP_FIELDS, vals))}
    if args.estimate is None or args.se is None:
        raise UsageError("the original study needs --estimate and --se (or --groups)")
    return {"id": args.id, "estimate": args.estimate, "se": args.se, "n": args.n}


def _size_from_args(args) -> dict:
    for kind in ("sr", "c", "n_r"):
        v = getattr(args, kind)
        if v is not None:
            if not v > 0:
                raise UsageError(f"--{kind.replace('_', '-')} must be positive")
            return {"kind": kind, "value": v}
    raise UsageError("give the replication size with --sr, --c or --n-r")


def read_corpus(path: str):
    """Parse a study CSV. Returns ``(studies, skipped)``; bad rows are skipped."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = [h.strip() for h in (reader.fieldnames or [])]
            rows = list(reader)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not header:
        return [], []
    if "id" not in header:
        raise UsageError("CSV header must contain an id column")
    has_est = "estimate" in header and "se" in header
    has_groups = all(f in header for f in GROUP_FIELDS)
    if not (has_est or has_groups):
        raise UsageError("CSV needs estimate,se columns or mean1,mean2,sd1,sd2,n1,n2")
    studies, skipped, seen = [], [], set()
    for lineno, raw in enumerate(rows, start=2):
        row = {(k or "").strip(): (v or "").strip() for k, v in raw.items()}
        sid = row.get("id", "")
        try:
            if not sid:
                raise ValueError("missing id")
            if sid in seen:
                raise ValueError(f"duplicate id {sid!r}")
            if has_est and row.get("estimate") and row.get("se"):
                study = {"id": sid, "estimate": float(row["estimate"]),
                         "se": float(row["se"]),
                         "n": int(row["n"]) if row.get("n") else None}
            elif has_groups:
                study = {"id": sid, "groups": {f: float(row[f]) for f in GROUP_FIELDS}}
            else:
                raise ValueError("missing estimate or se")
            _original(study)
        except (ValueError, DomainError, KeyError) as exc:
            skipped.append({"line": lineno, "id": sid, "reason": str(exc)})
            continue
        seen.add(sid)
        studies.append(study)
    return studies, skipped


# -- model construction from the input block ---------------------------------

def _original(study: dict) -> EffectEstimate:
    if "groups" in study:
        g = dict(study["groups"])
        g["n1"], g["n2"] = int(g["n1"]), int(g["n2"])
        return smd_from_groups(GroupSummary(**g))
    return EffectEstimate(float(study["estimate"]), float(study["se"]), study.get("n"))


def _tau2(inp: dict, original: EffectEstimate) -> float:
    kind, value = inp["tau"]["kind"], inp["tau"]["value"]
    if kind == "fixed":
        if value < 0:
            raise DomainError("tau must be nonnegative")
        return value * value
    if kind == "absolute":
        return tau_absolute(value) ** 2
    if kind == "relative":
        return tau_relative(value, original.se ** 2)
    raise DomainError(f"unknown tau specification {kind!r}")


def _initial(prior: dict, original: EffectEstimate, tau2: float, sign: float) -> InitialPrior:
    kind = prior["kind"]
    if kind == "flat":
        return InitialPrior.flat()
    if kind == "normal":
        return InitialPrior.normal(sign * prior["mean"], prior["sd"] ** 2)
    if kind == "eb":
        return shrinkage_prior(original, tau2, sign * prior["mean"])
    if kind == "pilot":
        return update_with_pilot(EffectEstimate(sign * prior["estimate"], prior["se"]))
    raise DomainError(f"unknown prior kind {kind!r}")


@dataclass
class Setup:
    original: EffectEstimate
    tau2: float
    initial: InitialPrior
    dp: object
    reflected: bool


def setup_study(inp: dict, study: dict, notices: Optional[list] = None) -> Setup:
    original = _original(study)
    reflected = original.estimate < 0
    if reflected:
        original = original.reflected()
        if notices is not None:
            notices.append(f"{study.get('id', 'study')}: negative original estimate "
                           "reflected to positive; prior means reflected too")
    tau2 = _tau2(inp, original)
    initial = _initial(inp["prior"], original, tau2, -1.0 if reflected else 1.0)
    return Setup(original, tau2, initial, design_prior(original, initial, tau2), reflected)


def method_configs(inp: dict) -> list:
    return [MethodConfig.conventional(m, alpha=inp.get("alpha"), gamma=inp.get("gamma"),
                                      margin=inp.get("margin"),
                                      same_sign_only=bool(inp.get("same_sign_only")))
            for m in inp["methods"]]


def _sr_from_size(size: dict, original: EffectEstimate, unit_sd: float) -> float:
    kind, v = size["kind"], size["value"]
    if kind == "sr":
        return v
    if kind == "c":
        return original.se / math.sqrt(v)
    return unit_sd / math.sqrt(v)


def _constraints(inp) -> Constraints:
    return Constraints(inp.get("max_n"), inp.get("max_t1e"))


def _check_target(inp):
    if not 0.0 < inp["target"] < 1.0:
        raise DomainError("--target must lie in (0, 1)")
    if not inp["unit_sd"] > 0:
        raise DomainError("--unit-sd must be positive")


# -- commands ------------------------------------------------------------------

def _prior_block(s: Setup) -> dict:
    dp = s.dp
    return {"initial_prior": s.initial.describe(), "tau": math.sqrt(s.tau2),
            "g": dp.g, "shrinkage": 1.0 - dp.shrinkage, "mean": dp.mean, "sd": dp.sd,
            "variance": dp.variance}


def _study_block(s: Setup) -> dict:
    return {"estimate": s.original.estimate, "se": s.original.se, "z": s.original.z,
            "p_one_sided": s.original.p_one_sided, "reflected": s.reflected}


def cmd_prior(inp, notices) -> Report:
    s = setup_study(inp, inp["study"], notices)
    pb = _prior_block(s)
    text = "\n".join([
        "design prior for the effect size",
        f"  original: estimate = {_fmt(s.original.estimate)}, se = {_fmt(s.original.se)}",
        f"  tau = {_fmt(pb['tau'])} : heterogeneity standard deviation",
        f"  {s.initial.describe()} : initial prior",
        f"  g = {_fmt(pb['g'])} : relative prior variance",
        f"  shrinkage = {pb['shrinkage'] * 100:.1f}% : toward the initial prior mean",
        f"  N(mean = {_fmt(s.dp.mean)}, sd = {_fmt(s.dp.sd)}) : normal design prior",
    ])
    return Report("prior", inp, {"study": _study_block(s), "design_prior": pb},
                  [dict(id=inp["study"].get("id"), **pb)], text, notices)


def _pors_row(cfg, s: Setup, sr: float) -> dict:
    row = {"method": cfg.label(), "sr": sr, "c": s.original.se ** 2 / sr ** 2}
    try:
        region = success_region(cfg, s.original, sr)
        row["pors"] = pors(region, predictive(s.dp, sr))
        row["limit"] = lim_pr(cfg, s.dp)
        row["region"] = region.as_pairs()
        row["note"] = "success impossible: empty region" if region.is_empty else ""
    except InfeasibleOriginalError as exc:
        row.update(pors=None, limit=None, region=None, note=str(exc))
    return row


def cmd_pors(inp, notices) -> Report:
    s = setup_study(inp, inp["study"], notices)
    sr = _sr_from_size(inp["size"], s.original, inp["unit_sd"])
    rows = [_pors_row(cfg, s, sr) for cfg in method_configs(inp)]
    lines = [f"probability of replication success at sr = {_fmt(sr, 4)} "
             f"(c = {_fmt(s.original.se ** 2 / sr ** 2)})",
             f"  design prior N(mean = {_fmt(s.dp.mean)}, sd = {_fmt(s.dp.sd)}), "
             f"tau = {_fmt(math.sqrt(s.tau2))}"]
    for r in rows:
        lines.append(f"  {r['method']}: PoRS = {_fmt(r['pors'], 4)}, "
                     f"limit = {_fmt(r['limit'], 4)}" + (f"  [{r['note']}]" if r["note"] else ""))
    return Report("pors", inp, {"study": _study_block(s), "design_prior": _prior_block(s),
                                "methods": rows}, rows, "\n".join(lines), notices)


def _ssd_row(res, study_id=None) -> dict:
    d = res.to_dict()
    row = {"id": study_id} if study_id is not None else {}
    row.update({k: d[k] for k in ("method", "status", "feasible", "sr_star", "c", "n_r",
                                  "achieved_pors", "target", "limit", "t1e", "solver",
                                  "note")})
    row["violations"] = "; ".join(res.violations)
    return row


def _status_text(res) -> str:
    if res.status is Status.ALWAYS_SATISFIED:
        return "always satisfied: every sample size reaches the target"
    if res.status is Status.INFEASIBLE:
        return "infeasible: " + (res.note or "target not reachable")
    return (f"sr = {_fmt(res.sr_star, 4)}, c = {_fmt(res.c)}, n_r = {res.n_r}, "
            f"PoRS = {_fmt(res.achieved_pors, 4)}")


def cmd_ssd(inp, notices) -> Report:
    _check_target(inp)
    s = setup_study(inp, inp["study"], notices)
    cfgs = method_configs(inp)
    multi = ssd_all(s.dp, cfgs, inp["target"], unit_sd=inp["unit_sd"])
    results = [check_constraints(r, _constraints(inp), cfg, s.original)
               for r, cfg in zip(multi.results, cfgs)]
    rows = [_ssd_row(r) for r in results]
    lines = [
        "Bayesian sample size calculation for replication studies",
        "",
        "original data and initial prior",
        f"  to = {_fmt(s.original.estimate)} : original effect estimate",
        f"  so = {_fmt(s.original.se)} : standard error of original effect estimate",
        f"  tau = {_fmt(math.sqrt(s.tau2))} : assumed heterogeneity standard deviation",
        f"  {s.initial.describe()} : initial prior",
        "",
        "design prior",
        f"  N(mean = {_fmt(s.dp.mean)}, sd = {_fmt(s.dp.sd)}) : normal design prior",
        "",
        f"required sample size (target PoRS = {_fmt(inp['target'])}, "
        f"unit sd = {_fmt(inp['unit_sd'])})",
    ]
    for r in results:
        lines.append(f"  {r.method}: {_status_text(r)}")
        if r.feasible:
            lines.append(f"    limit = {_fmt(r.limit, 4)}, type I error = {_fmt(r.t1e, 4)}, "
                         f"{r.solver}")
        for v in r.violations:
            lines.append(f"    constraint violated: {v}")
    result = {"study": _study_block(s), "design_prior": _prior_block(s),
              "methods": [r.to_dict() for r in results]}
    if len(cfgs) > 1:
        joint = {"status": multi.status, "sr_star": multi.sr_star, "c": multi.c,
                 "n_r": multi.n_r, "binding": multi.binding}
        result["all_methods"] = joint
        lines.append(f"  all methods: {multi.status.value}" + (
            f", n_r = {multi.n_r} (c = {_fmt(multi.c)}, binding: {multi.binding})"
            if multi.status is Status.FEASIBLE else ""))
    return Report("ssd", inp, result, rows, "\n".join(lines), notices)


def cmd_curve(inp, notices) -> Report:
    s = setup_study(inp, inp["study"], notices)
    grid = inp["c_grid"]
    if not grid:
        raise DomainError("the c grid is empty")
    if any(not c > 0 for c in grid):
        raise DomainError("c values must be positive")
    cfgs = method_configs(inp)
    rows = []
    for c in grid:
        sr = s.original.se / math.sqrt(c)
        row = {"c": c, "sr": sr}
        for cfg in cfgs:
            name = cfg.method.value
            try:
                row[f"pors_{name}"] = pors_at(region_builder(cfg, s.original), s.dp, sr)
                row[f"t1e_{name}"] = type_one_error(cfg, s.original, sr)
            except InfeasibleOriginalError:
                row[f"pors_{name}"] = row[f"t1e_{name}"] = None
        rows.append(row)
    keys = list(rows[0])
    lines = ["  ".join(f"{k:>22}" for k in keys)]
    lines += ["  ".join(f"{_fmt(r[k], 4):>22}" for k in keys) for r in rows]
    return Report("curve", inp, {"study": _study_block(s), "design_prior": _prior_block(s),
                                 "methods": [c.label() for c in cfgs]},
                  rows, "\n".join(lines), notices)


def cmd_batch(inp, notices) -> Report:
    _check_target(inp)
    for sk in inp.get("skipped", []):
        notices.append(f"line {sk['line']} skipped ({sk['id'] or 'no id'}): {sk['reason']}")
    studies = list(inp["studies"])
    if not studies:
        notices.append("no studies to process")
    setups = [(st, setup_study(inp, st, notices)) for st in studies]
    if inp.get("sort_p"):
        setups.sort(key=lambda pair: pair[1].original.p_one_sided)
    cfgs = method_configs(inp)
    rows = []
    for st, s in setups:
        for cfg in cfgs:
            res = ssd(s.dp, cfg, inp["target"], unit_sd=inp["unit_sd"])
            res = check_constraints(res, _constraints(inp), cfg, s.original)
            row = _ssd_row(res, st["id"])
            row["p_o"] = s.original.p_one_sided
            rows.append(row)
    lines = [f"{'id':<16}{'p_o':>10}  {'method':<36}{'c':>10}{'n_r':>10}{'t1e':>11}  status"]
    for r in rows:
        lines.append(f"{r['id']:<16}{_fmt(r['p_o'], 3):>10}  {r['method']:<36}"
                     f"{_fmt(r['c']):>10}{str(r['n_r'] if r['n_r'] is not None else '-'):>10}"
                     f"{_fmt(r['t1e'], 3):>11}  {r['status']}")
    code = 1 if inp.get("skipped") else 0
    return Report("batch", inp, {"n_studies": len(studies),
                                 "n_skipped": len(inp.get("skipped", []))},
                  rows, "\n".join(lines), notices, code)


def cmd_multisite(inp, notices) -> Report:
    _check_target(inp)
    s = setup_study(inp, inp["study"], notices)
    if not 1 <= inp["m_min"] <= inp["m_max"]:
        raise DomainError("need 1 <= --m-min <= --m-max")
    cost = CostModel(inp["cost_site"], inp["cost_case"])
    cfgs = method_configs(inp)
    for cfg in cfgs:
        if cfg.method not in MULTISITE_METHODS:
            raise DomainError(f"multisite supports {[m.value for m in MULTISITE_METHODS]}")
    n_star = optimal_site_size(math.sqrt(s.tau2), inp["unit_sd"], cost)
    rows, summary = [], []
    lines = [f"multisite allocation, K_s = {cost.cost_site:g}, "
             f"K_c = {cost.cost_case:g}, target PoRS = {inp['target']:g}",
             f"  optimal sample size per site (variance at fixed cost): {n_star}"]
    for cfg in cfgs:
        pts = cost_curve(cfg, s.dp, inp["target"], cost,
                         range(inp["m_min"], inp["m_max"] + 1), inp["unit_sd"])
        best = optimal_m(pts)
        lines.append(f"  {cfg.label()}")
        lines.append(f"    {'m':>4}{'n_r/site':>10}{'total n':>10}{'K/K_c':>12}  status")
        for p in pts:
            row = {"method": cfg.label(), "m": p.m, "n_per_site": p.n_r, "sr": p.sr,
                   "total_n": p.total_n, "total_cost": p.total_cost,
                   "cost_ratio": None if p.total_cost is None else p.total_cost / cost.cost_case,
                   "status": p.status.value}
            rows.append(row)
            lines.append(f"    {p.m:>4}{str(p.n_r or '-'):>10}{str(p.total_n or '-'):>10}"
                         f"{_fmt(row['cost_ratio'], 1):>12}  {p.status.value}")
        if best is None:
            summary.append({"method": cfg.label(), "optimal_m": None, "n_feasible": 0})
            lines.append("    no feasible number of sites in range")
        else:
            summary.append({"method": cfg.label(), "optimal_m": best.m,
                            "n_per_site": best.n_r, "total_n": best.total_n,
                            "total_cost": best.total_cost,
                            "cost_ratio": best.total_cost / cost.cost_case,
                            "n_feasible": sum(p.feasible for p in pts)})
            lines.append(f"    optimal m = {best.m}: {best.n_r} per site, total n = "
                         f"{best.total_n}, K/K_c = {_fmt(best.total_cost / cost.cost_case, 1)}")
    result = {"study": _study_block(s), "design_prior": _prior_block(s),
              "optimal_site_size": n_star, "methods": summary}
    return Report("multisite", inp, result, rows, "\n".join(lines), notices)


def cmd_t1e(inp, notices) -> Report:
    s = setup_study(inp, inp["study"], notices)
    sr = _sr_from_size(inp["size"], s.original, inp["unit_sd"])
    rows = []
    for cfg in method_configs(inp):
        try:
            t1e, note = type_one_error(cfg, s.original, sr), ""
        except InfeasibleOriginalError as exc:
            t1e, note = None, str(exc)
        row = {"method": cfg.label(), "sr": sr, "c": s.original.se ** 2 / sr ** 2,
               "t1e": t1e, "note": note}
        if inp.get("max_t1e") is not None and t1e is not None:
            row["exceeds_max_t1e"] = t1e > inp["max_t1e"]
        rows.append(row)
    lines = [f"type I error rate at sr = {_fmt(sr, 4)} (c = {_fmt(rows[0]['c'])})"]
    lines += [f"  {r['method']}: {_fmt(r['t1e'], 4)}" + (f"  [{r['note']}]" if r["note"] else "")
              for r in rows]
    return Report("t1e", inp, {"study": _study_block(s), "methods": rows}, rows,
                  "\n".join(lines), notices)


def cmd_validate_mc(inp, notices) -> Report:
    s = setup_study(inp, inp["study"], notices)
    n, seed, m = inp["n_draws"], inp["seed"], inp.get("m")
    if n < 1000:
        raise DomainError("--n-draws must be at least 1000")
    rows = []
    for cfg in method_configs(inp):
        if m is not None and cfg.method not in MULTISITE_METHODS:
            notices.append(f"{cfg.label()} skipped: no multisite analysis")
            continue
        for c in inp["c_grid"]:
            if not c > 0:
                raise DomainError("c values must be positive")
            sr = s.original.se / math.sqrt(c)
            try:
                if m is None:
                    builder = region_builder(cfg, s.original)
                    exact = pors_at(builder, s.dp, sr)
                    est, se = pors_monte_carlo(builder, s.dp, sr, n, seed)
                else:
                    design = MultisiteDesign.balanced(m, sr)
                    exact = pors_multisite(cfg, s.dp, design)
                    est, se = pors_multisite_mc(cfg, s.dp, design, n, seed)
            except InfeasibleOriginalError as exc:
                notices.append(f"{cfg.label()} skipped: {exc}")
                break
            z = (est - exact) / se
            rows.append({"method": cfg.label(), "m": m or 1, "c": c, "sr": sr,
                         "analytic": exact, "monte_carlo": est, "mc_se": se, "z": z,
                         "within_tolerance": abs(z) <= MC_TOLERANCE_SE})
    ok = all(r["within_tolerance"] for r in rows)
    lines = [f"analytic pors against {n} simulated replications (seed {seed}, "
             f"tolerance {MC_TOLERANCE_SE:g} SE)"]
    lines += [f"  {r['method']} c = {_fmt(r['c'])}: analytic {r['analytic']:.5f}, "
              f"simulated {r['monte_carlo']:.5f} (z = {r['z']:+.2f})"
              + ("" if r["within_tolerance"] else "  OUTSIDE") for r in rows]
    lines.append(f"all within tolerance: {'yes' if ok else 'no'}")
    return Report("validate-mc", inp, {"all_within_tolerance": ok, "n_checks": len(rows)},
                  rows, "\n".join(lines), notices)


RUNNERS = {
    "prior": cmd_prior, "pors": cmd_pors, "ssd": cmd_ssd, "curve": cmd_curve,
    "batch": cmd_batch, "multisite": cmd_multisite, "t1e": cmd_t1e,
    "validate-mc": cmd_validate_mc,
}


def run(command: str, inp: dict) -> Report:
    """Compute the report for ``command`` from a normalised input block."""
    return RUNNERS[command](inp, [])


def _load_report_input(path: str, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON report {path}: {exc}") from None
    if not isinstance(doc, dict) or "input" not in doc:
        raise UsageError(f"{path} is not a report (no input block)")
    if doc.get("command") != command:
        raise UsageError(f"{path} is a {doc.get('command')!r} report, not {command!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise UsageError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return doc["input"]


def _emit(report: Report, fmt: str, out: Optional[str]):
    body = {"text": report.to_text, "json": report.to_json, "csv": report.to_csv}[fmt]()
    if fmt != "text":
        for n in report.notices:
            print(f"note: {n}", file=sys.stderr)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_json:
            inp = _load_report_input(args.from_json, args.command)
        else:
            inp = input_from_args(args)
        report = run(args.command, inp)
        _emit(report, args.format, args.out)
    except (ReplicationDesignError, ValueError, KeyError, TypeError) as exc:
        print(f"repssd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"repssd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
