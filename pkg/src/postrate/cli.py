"""Command-line runner: identity-suite, verify, contract, entropy and report.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 for malformed configs, unknown registry names or violated preconditions.

Config files are INI with these sections (all optional):

    [run]         seed, jobs, output_dir, mc_budget, check, family, suite
    [experiment]  name plus builder keyword arguments
    [prior]       name plus builder keyword arguments
    [constants]   eps, alpha, delta, beta, c, r, replicates, quantile, slope_tol, r_sweep
    [grid]        n_grid (comma separated), seeds (comma separated)

Command-line flags win over the config file; POSTRATE_JOBS overrides the
config job count but not an explicit --jobs.
"""

import argparse
import ast
import configparser
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report, rng
from .entropy import WeightedParameterSet, hausdorff_constant
from .errors import ConfigError, DegenerateESS, PostrateError, RegistryMiss
from .models import REGISTRY as MODEL_REGISTRY
from .models import build_experiment
from .priors import build_prior, grid_prior
from .verifier import battery, identities
from .verifier.checks import (
    average_hellinger_metric,
    check_lemma2,
    check_prop0_prop3,
    check_prop2,
    check_prop4,
    iid_affinity_metric,
)
from .verifier.rates import ARFamily, DiscreteFamily, GaussSeqFamily, RateCheckConfig, measure_contraction, r_sweep

COMMANDS = ("identity-suite", "verify", "contract", "entropy", "report")
SECTIONS = {
    "run": {"seed", "jobs", "output_dir", "mc_budget", "check", "family", "suite"},
    "experiment": None,
    "prior": None,
    "constants": {"eps", "alpha", "delta", "beta", "c", "r", "replicates", "quantile", "slope_tol", "theta1",
                  "r_sweep"},
    "grid": {"n_grid", "seeds"},
}
CHECKS = ("battery", "poisson-partition", "prop2", "prop0", "prop3", "prop4", "lemma2", "lemma4", "lemma5")
FAMILIES = ("gauss-seq", "ar", "bernoulli-grid")


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    jobs: int = 1
    output_dir: str = "postrate-out"
    mc_budget: int = 10_000
    check: str = "battery"
    family: str = "gauss-seq"
    suite: str = "builtin"
    experiment: dict = field(default_factory=dict)
    prior: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    n_grid: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mc_budget < 1:
            raise ConfigError("mc_budget must be >= 1")
        if self.command == "verify" and self.check not in CHECKS:
            raise ConfigError(f"unknown check {self.check!r}; choose from {CHECKS}")
        if self.command == "contract" and self.family not in FAMILIES:
            raise RegistryMiss(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.experiment.get("name") and self.experiment["name"] not in MODEL_REGISTRY:
            raise RegistryMiss(f"unknown experiment {self.experiment['name']!r}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")


def _value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def read_config(path):
    """Parse an INI file into a flat dict of RunConfig fields."""
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown config section [{sec}]")
        allowed = SECTIONS[sec]
        items = {k: _value(v) for k, v in cp.items(sec)}
        if allowed is not None:
            extra = set(items) - allowed
            if extra:
                raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
        if sec == "run":
            out.update(items)
        elif sec == "grid":
            for k, v in items.items():
                out[k] = _int_list(v)
        else:
            out[sec] = items
    return out


def build_config(args):
    cfg = read_config(args.config) if args.config else {}
    env_jobs = os.environ.get("POSTRATE_JOBS")
    if env_jobs:
        try:
            cfg["jobs"] = int(env_jobs)
        except ValueError:
            raise ConfigError(f"POSTRATE_JOBS must be an integer, got {env_jobs!r}") from None
    for key in ("seed", "jobs", "mc_budget", "check", "family", "suite"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.out is not None:
        cfg["output_dir"] = args.out
    if getattr(args, "experiment", None):
        cfg.setdefault("experiment", {})["name"] = args.experiment
    if getattr(args, "n_grid", None):
        cfg["n_grid"] = _int_list(args.n_grid)
    consts = cfg.setdefault("constants", {})
    for key in ("eps", "alpha", "delta", "beta", "c", "r", "replicates", "quantile", "slope_tol"):
        v = getattr(args, key, None)
        if v is not None:
            consts[key] = v
    if getattr(args, "r_sweep", None):
        consts["r_sweep"] = _float_list(args.r_sweep)
    try:
        return RunConfig(command=args.command, **cfg)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- commands -----------------------------------------------------------------------------


def _map(jobs, fn, items):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_identity_suite(cfg):
    if cfg.suite == "builtin":
        recs = identities.builtin_suite(cfg.seed)
    elif cfg.suite == "full":
        recs = (identities.identity_suite(seed=cfg.seed) + identities.sandwich_suite(seed=cfg.seed)
                + identities.gaussian_suite(seed=cfg.seed))
    else:
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose builtin or full")
    return [r.to_record() for r in recs], []


def _experiment(cfg, default):
    params = dict(cfg.experiment or {"name": default})
    name = params.pop("name", default)
    return build_experiment(name, **params)


def _prior(cfg, exp):
    params = dict(cfg.prior)
    name = params.pop("name", "grid")
    if name == "grid" and "points" not in params:
        params["points"] = list(range(exp.n_params))
    return build_prior(name, **params)


def run_verify(cfg):
    k = cfg.constants
    if cfg.check == "battery":
        items = battery.main_battery()
        seeds = [rng.child_seed(cfg.seed, it.label, 0) for it in items]
        checks = _map(cfg.jobs, lambda p: p[0].run(cfg.mc_budget, p[1]), list(zip(items, seeds)))
        return [c.to_record() for c in checks], []
    if cfg.check == "poisson-partition":
        inst = battery.poisson_partition_instance()
        pb = battery.poisson_battery(inst, alpha=k.get("alpha", 0.5), beta=k.get("beta", 0.5))
        recs = [pb["shell"].to_record()]
        recs.append(pb["prop3"](cfg.mc_budget, rng.child_seed(cfg.seed, "poisson-prop3", 0)).to_record())
        recs.append(pb["lemma4"](cfg.mc_budget, rng.child_seed(cfg.seed, "poisson-lemma4", 0)).to_record())
        return recs, []
    default = "two-state" if cfg.check in ("prop4", "lemma5") else "bernoulli-grid"
    exp = _experiment(cfg, default)
    prior = _prior(cfg, exp)
    eps = float(k.get("eps", 0.3))
    alpha = float(k.get("alpha", 0.25 if cfg.check == "prop4" else 0.5))
    seed = rng.child_seed(cfg.seed, cfg.check, 0)
    B = cfg.mc_budget
    if cfg.check == "prop2":
        bc = check_prop2(exp, prior, eps, alpha, float(k.get("delta", 0.25)), B, seed)
    elif cfg.check == "prop3":
        bc = check_prop0_prop3(exp, prior, eps, alpha, float(k.get("beta", 0.5)), B, seed)
    elif cfg.check == "prop0":
        bc = check_prop0_prop3(exp, prior, eps, alpha, float(k.get("beta", 0.5)), B, seed,
                               metric=iid_affinity_metric(exp))
    elif cfg.check == "prop4":
        bc = check_prop4(exp, prior, eps, alpha, k.get("delta"), B, seed)
    elif cfg.check == "lemma4":
        bc = check_lemma2(exp, prior, eps, float(k.get("c", 1.0)), B, seed, beta=float(k.get("beta", 0.5)))
    else:
        bc = check_lemma2(exp, prior, eps, float(k.get("c", 1.0)), B, seed)
    return [bc.to_record()], []


def _family(cfg):
    if cfg.family == "gauss-seq":
        return GaussSeqFamily(gamma=cfg.experiment.get("gamma", 1.0), c=cfg.constants.get("c", 1.0),
                              rho=cfg.experiment.get("rho", 0.0))
    if cfg.family == "ar":
        return ARFamily(M=cfg.experiment.get("M", 2.0))
    exp = build_experiment("bernoulli-grid")
    d = average_hellinger_metric(exp)[:, exp.truth]
    beta = float(cfg.constants.get("beta", 1.0))
    return DiscreteFamily(exp, grid_prior(range(exp.n_params)), d, lambda n: n ** -0.5, beta=beta,
                          name=f"bernoulli-grid-b{beta:g}")


DEFAULT_GRIDS = {"gauss-seq": [64, 256, 1024, 4096, 16384], "ar": [50, 100, 200, 400],
                 "bernoulli-grid": [20, 40, 80, 160]}


def run_contract(cfg):
    fam = _family(cfg)
    k = cfg.constants
    rc = RateCheckConfig(r=float(k.get("r", 4.0)), replicates=int(k.get("replicates", 20)),
                         mc_budget=cfg.mc_budget, quantile=float(k.get("quantile", 0.9)))
    grid = cfg.n_grid or DEFAULT_GRIDS[cfg.family]
    seeds = cfg.seeds or [cfg.seed]
    curves = _map(cfg.jobs, lambda s: measure_contraction(fam, grid, rc, seed=s), seeds)
    tol = k.get("slope_tol")
    checks = []
    for s, c in zip(seeds, curves):
        if cfg.family == "gauss-seq":
            t = 0.07 if tol is None else float(tol)
            ok = abs(c.slope - c.predicted) <= t
            checks.append({"name": f"rate-slope-{c.family}-seed{s}", "slope": c.slope, "predicted": c.predicted,
                           "tol": t, "verdict": "pass" if ok else "fail", "config": {"seed": s}})
        else:
            checks.append({"name": f"rate-trend-{c.family}-seed{s}", "log_tail_mass": c.log_tail_mass,
                           "verdict": "pass" if c.tail_decreasing else "fail", "config": {"seed": s}})
    rs = k.get("r_sweep")
    if rs:
        rs = _float_list(rs)
        if any(r <= 0 for r in rs):
            raise ConfigError("r_sweep values must be > 0")
        sweeps = _map(cfg.jobs, lambda s: r_sweep(fam, grid, rc, rs, seed=s), seeds)
        for s, sw in zip(seeds, sweeps):
            sw.update(name=f"{sw['name']}-seed{s}", config={"seed": s},
                      verdict="pass" if sw["smallest_r"] is not None else "fail")
            checks.append(sw)
    return checks, [c.to_record() for c in curves]


def run_entropy(cfg):
    exp = _experiment(cfg, "bernoulli-grid")
    prior = _prior(cfg, exp)
    D = average_hellinger_metric(exp)
    wset = WeightedParameterSet(list(range(len(prior.points))), prior.weights, distances=D)
    alpha = float(cfg.constants.get("alpha", 0.5))
    recs = []
    for delta in np.unique(np.round(np.linspace(0.0, D.max(), 6), 12)):
        cert = hausdorff_constant(wset, float(delta), alpha)
        lo, hi = wset.mass() ** alpha, wset.mass() ** alpha * cert.covering_number ** (1 - alpha)
        ok = lo <= cert.hausdorff_constant * (1 + 1e-12) and cert.hausdorff_constant <= hi * (1 + 1e-12)
        recs.append({"name": f"entropy-delta{float(delta):.6g}", "delta": float(delta), "alpha": alpha,
                     "covering_number": cert.covering_number, "hausdorff_constant": cert.hausdorff_constant,
                     "lower": lo, "upper": hi, "exact": cert.exact, "blocks": cert.blocks,
                     "verdict": "pass" if ok else "fail"})
    return recs, []


def run_report(cfg):
    """Re-read every record under the output directory, validate it and render plots."""
    out = Path(cfg.output_dir)
    if not out.is_dir():
        raise ConfigError(f"output directory {out} does not exist")
    checks = []
    for path in sorted(out.glob("*.jsonl")):
        if path.name == "curves.jsonl":
            continue
        for rec in report.read_jsonl(path):
            if {"lhs", "rhs"} <= set(rec) or "passes" in rec or "r_passes" in rec:
                report.validate_check(rec)
            checks.append(rec)
    curves = report.read_curves_csv(out / "curves.csv") if (out / "curves.csv").exists() else []
    for c in curves:
        report.validate_curve(c)
    return checks, curves


RUNNERS = {"identity-suite": run_identity_suite, "verify": run_verify, "contract": run_contract,
           "entropy": run_entropy, "report": run_report}
OUTPUT_NAMES = {"identity-suite": "identities.jsonl", "verify": "checks.jsonl", "contract": "rate_checks.jsonl",
                "entropy": "entropy.jsonl"}


def run(cfg):
    """Execute one command, write its artifacts and return the exit status."""
    checks, curves = RUNNERS[cfg.command](cfg)
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    if cfg.command != "report":
        path = report.write_jsonl(out / OUTPUT_NAMES[cfg.command], checks)
        for rec in report.read_jsonl(path):
            if {"lhs", "rhs"} <= set(rec) or "passes" in rec or "r_passes" in rec:
                report.validate_check(rec)
        if curves:
            report.write_curves_csv(out / "curves.csv", curves)
            report.write_jsonl(out / "curves.jsonl", curves)
            for c in report.read_curves_csv(out / "curves.csv"):
                report.validate_curve(c)
    from .plotting import rate_plot

    for c in curves:
        rate_plot(c, out / f"rate_{c['family']}.svg")
    summary = report.summary_text(checks, curves)
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    failed = [c["name"] for c in checks if c.get("verdict") == "fail"]
    if failed:
        sys.stderr.write("failing records: " + ", ".join(failed) + "\n")
        return 1
    return 0


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker threads")
    common.add_argument("--mc-budget", dest="mc_budget", type=int, help="Monte Carlo budget per check")
    p = argparse.ArgumentParser(prog="postrate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("identity-suite", parents=[common], help="exact divergence identities")
    s.add_argument("--suite", choices=("builtin", "full"))
    s = sub.add_parser("verify", parents=[common], help="bound checks")
    s.add_argument("--check", choices=CHECKS)
    s.add_argument("--experiment", help="registered experiment name")
    for key in ("eps", "alpha", "delta", "beta", "c"):
        s.add_argument(f"--{key}", type=float)
    s = sub.add_parser("contract", parents=[common], help="posterior contraction curves")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--n-grid", dest="n_grid", help="comma-separated sample sizes")
    s.add_argument("--replicates", type=int)
    for key in ("r", "quantile", "beta", "c"):
        s.add_argument(f"--{key}", type=float)
    s.add_argument("--slope-tol", dest="slope_tol", type=float)
    s.add_argument("--r-sweep", dest="r_sweep", help="comma-separated radius multipliers, e.g. 2,4,8")
    s = sub.add_parser("entropy", parents=[common], help="covering numbers and Hausdorff constants")
    s.add_argument("--experiment", help="registered experiment name")
    s.add_argument("--alpha", type=float)
    sub.add_parser("report", parents=[common], help="validate records and render plots")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return run(cfg)
    except (ConfigError, RegistryMiss) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except DegenerateESS as exc:
        sys.stderr.write(f"degenerate importance sampler: {exc}\n")
        return 1
    except PostrateError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
