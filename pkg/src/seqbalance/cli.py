"""Command-line interface: ``seqbalance {gen,assign,discrepancy,rates,ate,verify}``.

Every command accepts ``--config file.json`` holding flat keys named like
the long flags (``gamma_lb`` or ``gamma-lb``). Flags given on the command
line override the file. Unknown keys are rejected.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .atesim import DgpConfig, ate_study, sample_size_sweep
from .core import ArrivalSequence, CovariateSpace, header_for, read_sequence_csv, write_sequence_csv
from .designs import DESIGNS, Partition, crd_assign, matched_pair_assign, pigeonhole_assign, write_trace_csv
from .errors import BadConfig, DegenerateInput, SeqBalanceError
from .harness import (
    MIN_REPORTED_R,
    DesignSpec,
    InstanceSpec,
    crd_halfzero_asymptotic,
    crd_halfzero_binomial_model,
    crd_halfzero_exact,
    fit_rate,
    fmt,
    run_mc,
)
from .instances import INSTANCES
from .matching import discrepancy

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2

PARTITION_CHOICES = ("uniform1d", "grid", "natural", "mixed", "clustered")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_T_list(text: str) -> list[int]:
    """``"16,64,256"`` or a doubling range ``"64..16384"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            if lo < 2 or hi < lo:
                raise ValueError
            out = []
            T = lo
            while T <= hi:
                out.append(T)
                T *= 2
            return out
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot read horizon list {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--seed", type=int, default=None, help="base seed (falls back to $SEQBALANCE_SEED, then 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for replication loops")
    g.add_argument("--out", default=None, help="output file (stdout when omitted)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--config", default=None, help="JSON file of flat option keys")
    g.add_argument("--no-timestamp", action="store_true", help="omit the generation timestamp")


def _design_opts(p: argparse.ArgumentParser, default: str | None = "pigeonhole") -> None:
    g = p.add_argument_group("design")
    g.add_argument("--design", choices=DESIGNS, default=default)
    g.add_argument("--partition", choices=PARTITION_CHOICES, default="uniform1d")
    g.add_argument("--eta", type=float, default=0.5)
    g.add_argument("--phi", type=float, default=None)
    g.add_argument("--c", type=float, default=2.0)
    g.add_argument("--gamma-lb", type=float, default=None)


def _instance_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--instance", choices=INSTANCES, default="uniform")
    g.add_argument("--p", type=int, default=1, help="continuous dimensions")
    g.add_argument("--q", type=int, default=0, help="binary dimensions (discrete instance)")
    g.add_argument("--K", type=int, default=None, help="cells of the alternating instance")
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--gamma", type=float, default=0.8, help="cluster diameter exponent")
    g.add_argument("--shuffle", action="store_true", help="shuffle grid arrival order")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqbalance", description="Sequential experiment balancing designs and studies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write an arrival sequence as CSV")
    _instance_opts(p)
    p.add_argument("--T", type=int, default=None)
    _common(p)

    p = sub.add_parser("assign", help="run one design on one sequence")
    p.add_argument("--input", default=None, help="sequence CSV (else generate from --instance)")
    _instance_opts(p)
    p.add_argument("--T", type=int, default=None)
    _design_opts(p)
    _common(p)

    p = sub.add_parser("discrepancy", help="score a control group against a treated group")
    p.add_argument("--control", required=True, help="control group CSV")
    p.add_argument("--treated", required=True, help="treated group CSV")
    _common(p)

    p = sub.add_parser("rates", help="Monte Carlo discrepancy over a horizon grid, with a log-log fit")
    _instance_opts(p)
    _design_opts(p, default="crd")
    p.add_argument("--T", default="64..16384", help="comma list or doubling range a..b")
    p.add_argument("--R", type=int, default=200)
    _common(p)

    p = sub.add_parser("ate", help="average-treatment-effect variance study")
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--marginals", type=float, default=0.5)
    p.add_argument("--coef-scale", type=float, default=1.0)
    p.add_argument("--intercept", type=float, default=0.05)
    p.add_argument("--boost-top-k", type=int, default=5)
    p.add_argument("--boost-factor", type=float, default=3.0)
    p.add_argument("--noise-upper", type=float, default=None)
    p.add_argument("--population-seed", type=int, default=0)
    p.add_argument("--R", type=int, default=2000)
    p.add_argument("--samples-out", default=None, help="also write per-replication estimates as CSV")
    p.add_argument("--sweep", action="store_true", help="add the sample-size sweep")
    _common(p)

    p = sub.add_parser("verify", help="run the golden-value self-check")
    _common(p)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise ConfigError(f"unknown command {command!r}")


def _coerce(action: argparse.Action, key: str, value):
    if isinstance(action, argparse._StoreTrueAction):
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be true or false")
        return value
    if value is not None and action.type is not None:
        try:
            value = action.type(value) if not isinstance(value, bool) else None
        except (TypeError, ValueError):
            value = None
        if value is None:
            raise ConfigError(f"config key {key!r} has a value of the wrong type")
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"config key {key!r} must be one of {sorted(action.choices)}")
    return value


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
        sp = _subparser(parser, args.command)
        actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
        resolved = {}
        for key, value in data.items():
            action = actions.get(key.replace("-", "_"))
            if action is None or isinstance(value, (dict, list)):
                raise ConfigError(f"unknown or non-scalar config key {key!r}")
            resolved[action.dest] = _coerce(action, key, value)
        sp.set_defaults(**resolved)
        args = parser.parse_args(argv)
    return args


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SEQBALANCE_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SEQBALANCE_SEED={env!r} is not an integer") from None
    return 0


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "config"}


def _stamp(args) -> str | None:
    if args.no_timestamp:
        return None
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _preamble(args) -> list[str]:
    lines = [f"config: {json.dumps(resolved_config(args), sort_keys=True)}"]
    stamp = _stamp(args)
    if stamp:
        lines.append(f"generated: {stamp}")
    return lines


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_doc(args, payload: dict) -> str:
    doc = {"config": resolved_config(args), **payload}
    stamp = _stamp(args)
    if stamp:
        doc["generated"] = stamp
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _instance_spec(args) -> InstanceSpec:
    return InstanceSpec(
        args.instance,
        p=args.p,
        q=args.q,
        K=args.K,
        n_clusters=args.clusters,
        gamma=args.gamma,
        shuffle=args.shuffle,
    )


def _design_spec(args) -> DesignSpec:
    return DesignSpec(args.design, args.partition, args.eta, args.phi, args.c, args.gamma_lb)


# --- commands --------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.T is None:
        raise ConfigError("gen needs --T")
    seed = resolve_seed(args)
    args.seed = seed
    seq = _instance_spec(args).generate(args.T, np.random.SeedSequence([seed, args.T]))
    if args.format == "json":
        _emit(args, _json_doc(args, {"header": header_for(seq.space), "rows": seq.X.tolist()}))
    else:
        _emit(args, write_sequence_csv(seq, preamble=_preamble(args)))
    return EXIT_OK


def _load_or_generate(args, seed: int) -> ArrivalSequence:
    if args.input:
        return read_sequence_csv(args.input)
    if args.T is None:
        raise ConfigError("assign needs --input or --T")
    return _instance_spec(args).generate(args.T, np.random.SeedSequence([seed, args.T]))


def cmd_assign(args) -> int:
    seed = resolve_seed(args)
    args.seed = seed
    seq = _load_or_generate(args, seed)
    design = _design_spec(args)
    design_seed = np.random.SeedSequence([seed, seq.T, 0]).spawn(2)[1]
    keys = None
    if design.name == "matchedpair":
        trace, _ = matched_pair_assign(seq, design_seed)
    elif design.name == "crd":
        trace = crd_assign(seq, design_seed)
    else:
        partition = design.build_partition(seq.space, seq.T)
        trace = pigeonhole_assign(seq, partition, design_seed)
        keys = partition.keys(seq)
    cost = discrepancy(seq.X[trace.control], seq.X[trace.treated]).cost
    if args.format == "json":
        _emit(args, _json_doc(args, {"T": seq.T, "tau": trace.tau, "discrepancy": float(fmt(cost)), "w": trace.w.tolist()}))
    else:
        lines = _preamble(args) + [f"discrepancy: {fmt(cost)}", f"tau: {trace.tau}"]
        _emit(args, write_trace_csv(trace, keys, preamble=lines))
    return EXIT_OK


def cmd_discrepancy(args) -> int:
    args.seed = resolve_seed(args)
    A = read_sequence_csv(args.control, check=False)
    B = read_sequence_csv(args.treated, check=False)
    for name, grp in (("control", A), ("treated", B)):
        if np.any((grp.X < 0) | (grp.X > 1)):
            raise ConfigError(f"{name} group has coordinates outside [0, 1]")
    m = discrepancy(A.X, B.X)
    if args.format == "json":
        text = _json_doc(args, {"cost": float(fmt(m.cost)), "pairs": [list(p) for p in m.pairs]})
    else:
        text = fmt(m.cost) + "\n"
    _emit(args, text)
    if args.out and args.format == "csv":
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rates(args) -> int:
    seed = resolve_seed(args)
    args.seed = seed
    if args.R < MIN_REPORTED_R:
        raise ConfigError(f"reported rows need R >= {MIN_REPORTED_R}, got {args.R}")
    Ts = parse_T_list(args.T)
    design, instance = _design_spec(args), _instance_spec(args)
    report = run_mc(design, instance, Ts, args.R, seed, jobs=max(1, args.jobs))
    fit, fit_note = None, "fewer than 4 horizons"
    if len(set(report.Ts)) >= 4:
        try:
            fit = fit_rate(report)
        except DegenerateInput as exc:
            fit_note = str(exc)
    reference = {}
    if design.name == "crd" and instance.kind == "halfzero":
        for T in report.Ts:
            reference[str(T)] = {
                "hypergeometric_exact": crd_halfzero_exact(T),
                "binomial_model": crd_halfzero_binomial_model(T),
                "sqrt_T_over_pi": crd_halfzero_asymptotic(T),
            }
    if args.format == "json":
        payload = report.to_dict()
        payload.pop("config")
        payload["fit"] = {"skipped": fit_note} if fit is None else {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
        if reference:
            payload["reference"] = reference
        _emit(args, _json_doc(args, payload))
    else:
        lines = _preamble(args)
        if fit is not None:
            lines.append(f"fit: slope={fmt(fit.slope)} intercept={fmt(fit.intercept)} r2={fmt(fit.r2)}")
        else:
            lines.append(f"fit: skipped ({fit_note})")
        for T, ref in reference.items():
            lines.append(
                f"reference T={T}: exact={fmt(ref['hypergeometric_exact'])} "
                f"binomial_model={fmt(ref['binomial_model'])} sqrt_T_over_pi={fmt(ref['sqrt_T_over_pi'])}"
            )
        _emit(args, report.to_csv(preamble=lines))
    return EXIT_OK


def cmd_ate(args) -> int:
    seed = resolve_seed(args)
    args.seed = seed
    try:
        cfg = DgpConfig(
            T=args.T,
            d=args.d,
            marginals=args.marginals,
            intercept=args.intercept,
            coef_scale=args.coef_scale,
            boost_top_k=args.boost_top_k,
            boost_factor=args.boost_factor,
            noise_upper=args.noise_upper,
            seed=args.population_seed,
        )
    except BadConfig as exc:
        raise ConfigError(str(exc)) from None
    report = ate_study(cfg, R=args.R, seed=seed)
    sweep = sample_size_sweep(cfg, R=args.R, seed=seed) if args.sweep else None
    if args.samples_out:
        Path(args.samples_out).write_text(report.samples_csv())
    payload = report.to_dict()
    payload.pop("config")
    if sweep is not None:
        payload["sweep"] = {
            "T": list(sweep.Ts),
            "pigeonhole_var": list(sweep.pigeonhole_var),
            "crd_var_full_T": sweep.crd_var,
            "crossing_T": sweep.crossing_T,
        }
    if args.format == "json":
        _emit(args, _json_doc(args, payload))
    else:
        lines = _preamble(args) + [f"tau: {fmt(report.tau)}", f"reduction: {fmt(report.reduction)}", f"log_ratio_z: {fmt(report.log_ratio_z)}"]
        body = ["design,R,mean,var"]
        for name, s in report.stats.items():
            body.append(f"{name},{s.R},{fmt(s.mean)},{fmt(s.var)}")
        if sweep is not None:
            body.append("sweep_T,pigeonhole_var")
            body += [f"{T},{fmt(v)}" for T, v in zip(sweep.Ts, sweep.pigeonhole_var)]
            lines.append(f"crossing_T: {sweep.crossing_T if sweep.crossing_T is None else fmt(sweep.crossing_T)}")
        _emit(args, "".join(f"# {ln}\n" for ln in lines) + "\n".join(body) + "\n")
    return EXIT_OK


def golden_checks() -> list[tuple[str, float, float, float]]:
    """``(name, got, expected, tolerance)`` for the self-check suite."""
    from .harness import binomial_mad, exact_expected_discrepancy
    from .matching import discrepancy_bruteforce, min_weight_pairing, pairing_bruteforce

    line = CovariateSpace.continuous(1)
    ex = ArrivalSequence(line, [0.1, 0.7, 0.4, 0.9])
    halves = ArrivalSequence(line, [0.0, 0.0, 1.0, 1.0])
    two_cells = Partition.uniform(2)
    checks = [
        ("discrepancy {0.1,0.4} vs {0.7,0.9}", discrepancy([0.1, 0.4], [0.7, 0.9]).cost, 1.1, 1e-9),
        ("discrepancy {0.1,0.7} vs {0.4,0.9}", discrepancy([0.1, 0.7], [0.4, 0.9]).cost, 0.5, 1e-9),
        ("matched pair on 0.1,0.7,0.4,0.9", exact_expected_discrepancy("matchedpair", ex), 0.5, 1e-9),
        ("exact CRD on 0.1,0.7,0.4,0.9", exact_expected_discrepancy("crd", ex), 0.7, 1e-9),
        ("exact pigeonhole, two cells", exact_expected_discrepancy("pigeonhole", ex, two_cells), 0.5, 1e-9),
        ("exact CRD on 0,0,1,1", exact_expected_discrepancy("crd", halves), 2.0 / 3.0, 1e-9),
        ("exact single cell on 0,0,1,1", exact_expected_discrepancy("single", halves), 0.0, 1e-9),
        ("hypergeometric CRD at T=4", crd_halfzero_exact(4), 2.0 / 3.0, 1e-12),
        ("pairing of 2x2 grid centers", min_weight_pairing([[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]]).cost, 1.0, 1e-9),
        ("binomial MAD n=2", binomial_mad(2, 0.5), 0.5, 1e-12),
        ("binomial MAD n=100 vs sqrt(50/pi)", binomial_mad(100, 0.5) / math.sqrt(50 / math.pi), 1.0, 0.02),
    ]
    # forced-coin trajectory: first arrival treated, second control
    ids, n = two_cells.cell_ids(ex.X)
    w, _ = kernels.pigeonhole_run(ids, np.array([1, 0, 0, 0], dtype=np.uint8), n)
    checks.append(("forced trajectory labels", float(np.abs(w - np.array([1, 0, 0, 1])).sum()), 0.0, 0.0))
    checks.append(("forced trajectory discrepancy", discrepancy(ex.X[w == 0], ex.X[w == 1]).cost, 0.5, 1e-9))
    rng = np.random.default_rng(20240607)
    worst = 0.0
    for _ in range(50):
        A, B = rng.random((4, 2)), rng.random((4, 2))
        worst = max(worst, abs(discrepancy(A, B).cost - discrepancy_bruteforce(A, B).cost))
        P = rng.random((8, 2))
        worst = max(worst, abs(min_weight_pairing(P).cost - pairing_bruteforce(P).cost))
    checks.append(("solvers vs brute force (max abs gap)", worst, 0.0, 1e-9))
    if "compiled" in kernels.available_backends():
        comp, py = kernels.load_backend("compiled"), kernels.load_backend("python")
        cells = rng.integers(0, 7, size=200).astype(np.int64)
        coins = rng.integers(0, 2, size=200, dtype=np.uint8)
        a, b = comp.pigeonhole_run(cells, coins, 7), py.pigeonhole_run(cells, coins, 7)
        C = rng.random((30, 30))
        same = np.array_equal(a[0], b[0]) and a[1] == b[1] and np.array_equal(comp.assignment(C)[0], py.assignment(C)[0])
        checks.append(("compiled and python kernels agree", float(not same), 0.0, 0.0))
    return checks


def cmd_verify(args) -> int:
    args.seed = resolve_seed(args)
    failures = 0
    rows = []
    for name, got, want, tol in golden_checks():
        ok = abs(got - want) <= tol
        failures += not ok
        rows.append({"check": name, "got": got, "expected": want, "tolerance": tol, "pass": ok})
    if args.format == "json":
        _emit(args, _json_doc(args, {"backend": kernels.BACKEND, "checks": rows, "failures": failures}))
    else:
        out = [f"# backend: {kernels.BACKEND}"]
        for r in rows:
            out.append(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}: got {fmt(r['got'])}, expected {fmt(r['expected'])}")
        out.append(f"{len(rows) - failures}/{len(rows)} checks passed")
        _emit(args, "\n".join(out) + "\n")
    return EXIT_VERIFY_FAILED if failures else EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "assign": cmd_assign,
    "discrepancy": cmd_discrepancy,
    "rates": cmd_rates,
    "ate": cmd_ate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (ConfigError, SeqBalanceError) as exc:
        sys.stderr.write(f"seqbalance: error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
