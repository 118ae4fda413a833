"""Command-line front end.

Every subcommand writes one table (CSV or JSON) and, when ``--out`` names a
file, a ``<out>.meta.json`` sidecar with the configuration, ``git describe``
and the runtime. The exit code is 0 on success, 1 when an invariant check
failed (the failures are printed to stderr and stored in the sidecar) and 2
when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fixtures
from .bounds import StabilityConstants, VarianceProfile, assemble_thm1, assemble_thm2, eta_error_bound, Kind
from .errors import FeasibilityError, InapplicableError, SmcLabError
from .fk import FkModel, asymptotic_variance, inner, per_level_variances
from .io import load_local_model, load_model, load_tree, write_rows
from .local import (LocalModel, check_density_bound, check_local_mixing, level_norm, stability_chain,
                    verify_propagator_inequalities)
from .oracle import enumerate_exact_mse, exact_mse_nu
from .particles import Estimator, estimate_mse
from .sis import build_sis, degeneracy_report, run_sis, sis_exact_mse, theta_top_mse
from .theta import (alpha_assvar, alpha_sis_mse, assvar_theta1, error_bound, masses_closed, q_norm, rho,
                    z_closed, z_sum)
from .tree import TreeModel, compute_tree_constants

FIXTURE_NAMES = ("theta-example", "alpha-example", "chain-2block", "splitting", "singleton")
TOL = 1e-10


class ConfigInvalid(Exception):
    pass


@dataclass
class Source:
    name: str
    fk: FkModel
    tree: TreeModel | None = None
    local: LocalModel | None = None


# --------------------------------------------------------------------------
# argument helpers


def int_list(text: str) -> list:
    try:
        vals = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("list must be nonempty with entries >= 1")
    return vals


def float_list(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return vals


def parse_function(text: str, size: int) -> np.ndarray:
    """``one``, ``top`` (indicator of the last state), ``indicator:i`` or ``values:a,b,...``."""
    if text == "one":
        return np.ones(size)
    if text == "top":
        text = f"indicator:{size - 1}"
    kind, _, rest = text.partition(":")
    if kind == "indicator":
        try:
            i = int(rest)
        except ValueError:
            raise ConfigInvalid(f"--f {text!r}: index must be an integer") from None
        if not 0 <= i < size:
            raise ConfigInvalid(f"--f {text!r}: index outside 0..{size - 1}")
        f = np.zeros(size)
        f[i] = 1.0
        return f
    if kind == "values":
        try:
            f = np.array([float(t) for t in rest.split(",")])
        except ValueError:
            raise ConfigInvalid(f"--f {text!r}: values must be numbers") from None
        if f.size != size:
            raise ConfigInvalid(f"--f {text!r}: final level has {size} states, got {f.size} values")
        return f
    raise ConfigInvalid(f"--f {text!r}: expected one, top, indicator:i or values:a,b,...")


def resolve_source(args) -> Source:
    given = [x for x in (args.fixture, args.model, args.tree) if x is not None]
    if len(given) != 1:
        raise ConfigInvalid("give exactly one of --fixture, --model, --tree")
    if args.tree is not None:
        tree = load_tree(args.tree)
        return Source(Path(args.tree).name, tree.induce_fk_model(), tree=tree)
    if args.model is not None:
        hier = getattr(args, "hierarchy", None)
        if hier is not None:
            lm = load_local_model(args.model, hier)
            return Source(Path(args.model).name, lm.base, local=lm)
        return Source(Path(args.model).name, load_model(args.model))
    name = args.fixture
    if name == "theta-example":
        tree = fixtures.theta_example(args.n or 3, args.theta)
        return Source(name, tree.induce_fk_model(), tree=tree)
    if name == "alpha-example":
        tree = fixtures.alpha_example(args.alpha, args.variant)
        return Source(name, tree.induce_fk_model(), tree=tree)
    if name == "chain-2block":
        lm = fixtures.chain_2block(args.n or 3)
        return Source(name, lm.base, local=lm)
    if name == "splitting":
        lm = fixtures.splitting()
        return Source(name, lm.base, local=lm)
    if name == "singleton":
        return Source(name, fixtures.singleton(args.n or 2))
    tiny = fixtures.tiny_fixtures()
    if name.startswith("tiny:") and name[5:] in tiny:
        return Source(name, tiny[name[5:]][0])
    choices = list(FIXTURE_NAMES) + [f"tiny:{k}" for k in tiny]
    raise ConfigInvalid(f"unknown fixture {name!r}; choose from {', '.join(choices)}")


def bound_report(src: Source, f, N: int, p: float = 2.0):
    """``(report, note)``; the report is None when no constants are available."""
    fk = src.fk
    n = fk.n
    per_level = per_level_variances(fk, n, f)
    if src.tree is not None:
        tc = compute_tree_constants(src.tree)
        vp = VarianceProfile(v_hat=tc.v_hat_sqrt_d(), per_level=per_level)
        consts = StabilityConstants(Kind.D_KIND, tc.d, norm_label="max")
        return assemble_thm2(consts, vp, float(np.max(np.abs(f))), N), "tree"
    if src.local is not None:
        try:
            chain = stability_chain(src.local, p)
        except InapplicableError as exc:
            return None, f"inapplicable: {exc.condition}"
        f_norm = level_norm(src.local, n, p, f)
        return assemble_thm1(chain.constants(), chain.defects, chain.variance_profile(per_level), f_norm, N), \
            f"local-L{p:g}"
    return None, "no_constants"


def _flatten_report(rep, prefix="bound_"):
    if rep is None:
        return {}
    return {prefix + k: v for k, v in rep.as_record().items() if k not in ("n",)}


# --------------------------------------------------------------------------
# subcommands; each returns (rows, ledger)


def cmd_simulate(args):
    src = resolve_source(args)
    fk = src.fk
    f = parse_function(args.f, fk.sizes[-1])
    est = Estimator(args.estimator)
    mu_f = inner(fk.measures[-1], f)
    rows, ledger = [], []
    for N in args.N:
        t0 = time.perf_counter()
        res = estimate_mse(fk, f, N, args.reps, args.seed, estimator=est, threads=args.threads,
                           backend=args.backend)
        row = dict(fixture=src.name, estimator=est.value, N=N, reps=args.reps, seed=args.seed,
                   mean=res.mean, target=res.target, mse=res.mse, mse_std_error=res.std_error_of_mse)
        if est is Estimator.NU:
            exact = exact_mse_nu(fk, f, N)
        elif est is Estimator.NU_ONE:
            exact = exact_mse_nu(fk, np.ones_like(f), N)
        else:
            try:
                exact = enumerate_exact_mse(fk, f, N, max_work=2_000_000).mse_eta
            except FeasibilityError:
                exact = None
        row["exact_mse"] = exact
        row["z_score"] = None if exact is None or res.std_error_of_mse == 0 else \
            (res.mse - exact) / res.std_error_of_mse
        rep, note = bound_report(src, f, N, args.p)
        row["bound_constants"] = note
        row.update(_flatten_report(rep))
        row["bound_mse"] = None if rep is None or rep.total is None else rep.total / N
        if est is Estimator.ETA:
            fc = f - mu_f
            row["eta_error_bound"] = eta_error_bound(exact_mse_nu(fk, fc, N), exact_mse_nu(fk, np.ones_like(f), N),
                                                     float(np.max(np.abs(fc))))
        if est is Estimator.NU and rep is not None and rep.total is not None and rep.total < N * exact * (1 - 1e-12):
            ledger.append(f"{src.name} N={N}: bound {rep.total!r} below N*exact mse {N * exact!r}")
        if not np.isfinite(res.mse):
            ledger.append(f"{src.name} N={N}: non-finite mse")
        row["_runtime"] = time.perf_counter() - t0
        rows.append(row)
    return rows, ledger


def cmd_bound(args):
    src = resolve_source(args)
    f = parse_function(args.f, src.fk.sizes[-1])
    rows = []
    for N in args.N:
        rep, note = bound_report(src, f, N, args.p)
        row = dict(fixture=src.name, N=N, f=args.f, p=args.p, constants=note)
        if rep is not None:
            row.update(rep.as_record())
        else:
            row["total"] = "NOT_APPLICABLE"
        rows.append(row)
    return rows, []


def cmd_sis(args):
    if args.fixture == "theta-example" and args.x is None:
        args.x = args.n or 3
    src = resolve_source(args)
    setup = build_sis(src.tree if src.tree is not None else src.fk)
    x = 0 if args.x is None else args.x
    if not 0 <= x < setup.pi.size:
        raise ConfigInvalid(f"--x {x} outside 0..{setup.pi.size - 1}")
    f = np.zeros(setup.pi.size)
    f[x] = 1.0
    rows, ledger = [], []
    for N in args.N:
        exact = sis_exact_mse(setup, x, N)
        res = run_sis(setup, f, N, args.reps, args.seed, threads=args.threads, backend=args.backend)
        z = None if res.std_error_of_mse == 0 else (res.mse - exact) / res.std_error_of_mse
        rows.append(dict(fixture=src.name, x=x, N=N, reps=args.reps, seed=args.seed, pi_x=float(setup.pi[x]),
                         mu_x=float(setup.mu[x]), exact_mse=exact, mse=res.mse,
                         mse_std_error=res.std_error_of_mse, z_score=z))
        if not np.isfinite(res.mse):
            ledger.append(f"N={N}: non-finite SIS mse")
    return rows, ledger


def cmd_compare_sis(args):
    rows = []
    N = args.N[0]
    if args.fixture == "alpha-example":
        for variant in ("original", "prime"):
            tree = fixtures.alpha_example(args.alpha, variant)
            fk = tree.induce_fk_model()
            f = np.array([1.0, 0.0])
            av = asymptotic_variance(fk, fk.n, f)
            sis = sis_exact_mse(build_sis(tree), 0, N)
            rows.append(dict(fixture="alpha-example", variant=variant, alpha=args.alpha, N=N,
                             smc_asymptotic_variance=av, smc_leading_mse=av / N, sis_mse=sis,
                             sis_better=bool(sis < av / N)))
        ledger = []
        for r in rows:
            want = alpha_assvar(args.alpha, r["variant"])
            if abs(r["smc_asymptotic_variance"] - want) > 1e-12 * max(1.0, want):
                ledger.append(f"alpha {r['variant']}: asymptotic variance {r['smc_asymptotic_variance']!r} != {want!r}")
            want = alpha_sis_mse(args.alpha, N, r["variant"])
            if abs(r["sis_mse"] - want) > 1e-12 * max(1.0, want):
                ledger.append(f"alpha {r['variant']}: SIS mse {r['sis_mse']!r} != {want!r}")
        return rows, ledger
    theta = args.theta
    report = degeneracy_report(theta, range(1, args.n_max + 1), N)
    for row in report:
        n = row.n
        tree = fixtures.theta_example(n, theta)
        fk = tree.induce_fk_model()
        f = np.zeros(n + 1)
        f[n] = 1.0
        res = error_bound(n, theta, N)
        gen = res.generic
        av = asymptotic_variance(fk, n, f)
        rows.append(dict(theta=theta, n=n, N=N, sis_mse=row.mse, sis_ratio=row.ratio, sis_growth=row.growth,
                         smc_leading_mse=av / N, smc_bound_mse=res.generic_mse_bound,
                         smc_threshold=gen.N_threshold, smc_applicable=gen.applicable))
    return rows, []


def cmd_example_theta(args):
    n, theta, N = args.n or 3, args.theta, args.N[0]
    rows, ledger = [], []

    def add(quantity, value, applicable=True, note=""):
        rows.append(dict(n=n, theta=theta, N=N, quantity=quantity, value=value, applicable=applicable, note=note))

    zc, zs = z_closed(n, theta), z_sum(n, theta)
    add("Z_n", zc)
    if abs(zc - zs) > 1e-12 * zs:
        ledger.append(f"Z_{n}: closed form {zc!r} != sum {zs!r}")
    tree = fixtures.theta_example(n, theta)
    if np.max(np.abs(tree.masses[-1] - masses_closed(n, theta))) > 1e-12:
        ledger.append("level-n masses disagree with the closed form")
    add("mu_n(top)", float(tree.masses[-1][n]))
    if theta > 1:
        add("rho", float(rho(theta)))
    qs = [q_norm(k, n, theta) for k in range(n)]
    k_best = int(np.argmax([q.max_value for q in qs]))
    add("max_k max q_{k,n}(1)", qs[k_best].max_value, note=f"k={k_best}")
    if theta >= 1 and not all(q.max_at_top for q in qs):
        ledger.append("max of q_{k,n}(1) not attained at the top node")
    fk = tree.induce_fk_model()
    av = asymptotic_variance(fk, n, np.ones(n + 1))
    add("asymptotic variance nu_n(1)", av)
    if theta == 1:
        want = assvar_theta1(n)
        add("asymptotic variance closed form", want)
        if abs(av - want) > 1e-12 * max(want, 1e-300):
            ledger.append(f"asymptotic variance {av!r} != closed form {want!r}")
    res = error_bound(n, theta, N)
    for k, v in res.generic.as_record().items():
        if k not in ("n", "N"):
            add(f"generic.{k}", v, res.generic.applicable)
    for br in res.branches:
        for k in ("coef_a", "coef_b", "a", "b", "threshold", "value"):
            v = getattr(br, k)
            add(f"{br.name}.{k}", "NOT_APPLICABLE" if v is None else (str(v) if k in ("coef_a", "coef_b") else float(v)),
                br.applicable)
    add("sis mse top", theta_top_mse(theta, n, N))
    return rows, ledger


def cmd_verify_local_mixing(args):
    src = resolve_source(args)
    if src.local is None:
        raise ConfigInvalid("verify-local-mixing needs a local model: --fixture chain-2block|splitting "
                            "or --model M --hierarchy H")
    lm = src.local
    rows, ledger = [], []
    gamma = check_density_bound(lm)
    rep = check_local_mixing(lm, beta_grid=(0.0, 0.5, 1.0))
    rows.append(dict(fixture=src.name, item="gamma", value=gamma))
    for b, a in rep.alpha_min.items():
        rows.append(dict(fixture=src.name, item=f"alpha_min(beta={b:g})", value=a))
    rows.append(dict(fixture=src.name, item="rho", value=rep.rho))
    rows.append(dict(fixture=src.name, item="sufficient_pair_margin", value=rep.sufficient_pair_margin,
                     status="pass" if rep.sufficient_pair_ok else "fail"))
    if not rep.sufficient_pair_ok:
        ledger.append(f"pair ((1-rho)gamma, rho) fails the mixing check by {-rep.sufficient_pair_margin:.3g}")
    p_list = tuple(sorted({1} | {int(p) if float(p).is_integer() else p for p in args.p}))
    for p in args.p:
        if p < 2:
            continue
        try:
            chain = stability_chain(lm, p)
        except InapplicableError as exc:
            rows.append(dict(fixture=src.name, item=f"chain p={p:g}", status="inapplicable",
                             note=exc.condition))
            continue
        led = verify_propagator_inequalities(lm, chain, p_list=p_list, trials=args.trials, seed=args.seed)
        rows.append(dict(fixture=src.name, item=f"chain p={p:g}", value=float(np.nanmax(chain.c)),
                         status="certified" if chain.certified else "uncertified",
                         note=f"alpha={chain.alpha:.6g} gamma={chain.gamma:.6g}"))
        for name in sorted(led.checked):
            fails = sum(1 for x in led.failures if x["check"] == name)
            rows.append(dict(fixture=src.name, item=f"p={p:g} {name}", value=led.checked[name],
                             status="pass" if fails == 0 else f"fail({fails})"))
        for name, reason in sorted(led.skipped.items()):
            rows.append(dict(fixture=src.name, item=f"p={p:g} {name}", status="skipped", note=reason))
        ledger.extend(f"p={p:g} {x}" for x in led.failures)
    return rows, ledger


def cmd_oracle(args):
    src = resolve_source(args)
    fk = src.fk
    f = parse_function(args.f, fk.sizes[-1])
    mu_f = inner(fk.measures[-1], f)
    rows, ledger = [], []
    scale = max(1.0, abs(mu_f))
    for N in args.N:
        mom = exact_mse_nu(fk, f, N)
        row = dict(fixture=src.name, N=N, mu_f=mu_f, mse_nu_moment=mom)
        try:
            ex = enumerate_exact_mse(fk, f, N, max_work=args.max_work)
        except FeasibilityError as exc:
            row["enumeration"] = "infeasible"
            row["note"] = str(exc)
            rows.append(row)
            continue
        row.update(enumeration="done", work=ex.work, mean_nu=ex.mean_nu, mse_nu=ex.mse_nu, mean_eta=ex.mean_eta,
                   mse_eta=ex.mse_eta, mse_nu_one=ex.mse_nu_one, varrep=ex.varrep,
                   martingale_error=ex.martingale_error)
        rows.append(row)
        if abs(ex.mean_nu - mu_f) > TOL * scale:
            ledger.append(f"N={N}: E[nu(f)] = {ex.mean_nu!r} != mu(f) = {mu_f!r}")
        if abs(ex.mse_nu - mom) > TOL * max(1.0, mom):
            ledger.append(f"N={N}: enumeration mse {ex.mse_nu!r} != moment recursion {mom!r}")
        if abs(ex.mse_nu - ex.varrep) > TOL * max(1.0, mom):
            ledger.append(f"N={N}: enumeration mse {ex.mse_nu!r} != variance decomposition {ex.varrep!r}")
        if ex.martingale_error > TOL:
            ledger.append(f"N={N}: martingale identity off by {ex.martingale_error!r}")
    return rows, ledger


COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "sis": cmd_sis,
    "compare-sis": cmd_compare_sis,
    "example-theta": cmd_example_theta,
    "verify-local-mixing": cmd_verify_local_mixing,
    "oracle": cmd_oracle,
}


# --------------------------------------------------------------------------
# parser


def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=d(1))
    parser.add_argument("--out", default=d(None), help="output file; stdout when omitted")
    parser.add_argument("--format", choices=("csv", "json"), default=d("csv"))


def _source_flags(p, fixture_default=None):
    p.add_argument("--fixture", default=fixture_default)
    p.add_argument("--model", help="model document (JSON)")
    p.add_argument("--tree", help="tree document (JSON)")
    p.add_argument("--n", type=int, default=None, help="levels for the staircase/chain/singleton fixtures")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--variant", choices=("original", "prime"), default="original")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smclab", description=__doc__.splitlines()[0])
    _global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("simulate", "Monte Carlo mse of the particle estimator over an N sweep")
    _source_flags(p)
    p.add_argument("--N", type=int_list, default=[100, 1000])
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--estimator", choices=[e.value for e in Estimator], default="nu")
    p.add_argument("--f", default="one")
    p.add_argument("--p", type=float, default=2.0, help="local L_p exponent for chain fixtures")
    p.add_argument("--backend", choices=("python", "compiled"), default=None)

    p = add("bound", "error bound components without simulation")
    _source_flags(p)
    p.add_argument("--N", type=int_list, default=[1000])
    p.add_argument("--f", default="one")
    p.add_argument("--p", type=float, default=2.0)

    p = add("sis", "sequential importance sampling: exact vs empirical mse")
    _source_flags(p, "theta-example")
    p.add_argument("--N", type=int_list, default=[100, 1000])
    p.add_argument("--reps", type=int, default=20000)
    p.add_argument("--x", type=int, default=None, help="final-level state (default: top node)")
    p.add_argument("--backend", choices=("python", "compiled"), default=None)

    p = add("compare-sis", "SIS error against the particle bound per n")
    p.add_argument("--fixture", choices=("theta-example", "alpha-example"), default="theta-example")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--N", type=int_list, default=[10000])

    p = add("example-theta", "closed forms and bounds for the staircase tree")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--N", type=int_list, default=[10000])

    p = add("verify-local-mixing", "check mixing constants and norm inequalities on a partitioned model")
    _source_flags(p, None)
    p.add_argument("--hierarchy", help="hierarchy document (JSON), used with --model")
    p.add_argument("--p", type=float_list, default=[2.0])
    p.add_argument("--trials", type=int, default=200)

    p = add("oracle", "exact moments by enumeration and moment recursion")
    _source_flags(p)
    p.add_argument("--N", type=int_list, default=[2])
    p.add_argument("--f", default="one")
    p.add_argument("--max-work", type=int, default=10_000_000)
    return ap


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _validate(args):
    if args.threads < 1:
        raise ConfigInvalid("--threads must be >= 1")
    if getattr(args, "reps", 2) < 2:
        raise ConfigInvalid("--reps must be >= 2")
    if getattr(args, "trials", 1) < 1:
        raise ConfigInvalid("--trials must be >= 1")
    if getattr(args, "n_max", 1) < 1:
        raise ConfigInvalid("--n-max must be >= 1")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        _validate(args)
        rows, ledger = COMMANDS[args.command](args)
    except (ConfigInvalid, SmcLabError, ValueError) as exc:
        print(f"smclab {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    runtimes = [r.pop("_runtime") for r in rows if "_runtime" in r]
    config = {k: v for k, v in vars(args).items()}
    sidecar = dict(command=args.command, argv=list(sys.argv[1:] if argv is None else argv), config=config,
                   git_describe=_git_describe(), runtime_seconds=time.perf_counter() - t0,
                   row_runtimes=runtimes, ledger=ledger)
    write_rows(rows, args.out, args.format, sidecar=sidecar)
    for entry in ledger:
        print(f"smclab {args.command}: invariant violated: {entry}", file=sys.stderr)
    return 1 if ledger else 0


if __name__ == "__main__":
    sys.exit(main())
