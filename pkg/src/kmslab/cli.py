"""Experiment driver: reproducible sweeps with CSV tables and JSON summaries.

Each subcommand runs one named experiment, checks the experiment's invariant
suite, and writes ``<experiment>.csv`` (deterministic body, 17 significant
digits) plus ``<experiment>.summary.json`` (parameters, per-invariant
verdicts, wall time, timestamp). Exit status: 0 all invariants pass,
1 invariant failure, 2 configuration error, 3 numerical failure.

Configuration files are sectioned key = value text::

    [experiment]
    name = decay-sweep
    seed = 7

    [parameters]
    h = 1.0
    lambda_grid = 5, 10, 20, 50

Unknown keys are rejected. The seed fixes all randomness; reruns with the
same configuration and seed produce byte-identical CSV bodies.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import decay, fock, kms, phasespace, quasifree, toychain
from .quadrature import QuadratureError
from .tables import csv_body

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _random_state(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (raw + raw.conj().T)


def _random_operator(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


# ---------------------------------------------------------------------------
# experiment runners: params -> (header, rows, invariants)

def _run_fermi_dirac(params: dict, seed: int, jobs: int):
    p0_grid = params["p0_grid"]
    mu = params["mu"]
    b_seq = params["b_sequence"]
    if any(b2 > b1 for b1, b2 in zip(b_seq, b_seq[1:])):
        raise ConfigError("b_sequence must be non-increasing")
    rows = []
    formula_ok = True
    widths_ok = True
    for p0 in p0_grid:
        limit = kms.sandwich_limit_check(p0, mu, b_seq + [0.0])
        ham = (p0 * p0 + mu) * (fock.creator(0, 1) @ fock.annihilator(0, 1))
        ens = fock.gibbs_state(ham, beta=1.0)
        measured = fock.expectation(ens.rho, fock.creator(0, 1) @ fock.annihilator(0, 1)).real
        formula_ok &= abs(measured - limit) <= 1e-12
        prev_width = math.inf
        for b in b_seq:
            s = kms.fermi_dirac_sandwich(p0, mu, b)
            widths_ok &= s.width <= prev_width + 1e-15
            prev_width = s.width
            rows.append([p0, mu, b, s.w_lower, s.w_upper, limit])
    header = ["p0", "mu", "b", "w_lower", "w_upper", "w_limit"]
    invariants = {
        "gibbs_occupation_matches_formula": bool(formula_ok),
        "sandwich_widths_monotone": bool(widths_ok),
    }
    return header, rows, invariants


def _run_kms_gap(params: dict, seed: int, jobs: int):
    modes_list = [int(m) for m in params["modes"]]
    betas = params["betas"]
    n_h = int(params["n_hamiltonians"])
    n_a = int(params["n_observables"])
    tol = params["gap_tol"]

    points = [(m, trial) for m in modes_list for trial in range(n_h)]

    def run_point(point):
        m, trial = point
        dim = 2**m
        rng = _random_state(seed, m, trial)
        ham = fock.FockOperator(_random_hermitian(rng, dim), m)
        out = []
        for beta in betas:
            ens = fock.gibbs_state(ham, beta)
            gaps = []
            mismatches = []
            for _ in range(n_a):
                op = fock.FockOperator(_random_operator(rng, dim), m)
                rep = kms.kms_gap(ens, op)
                gaps.append(rep.gap)
                mismatches.append(rep.form_mismatch)
            out.append([m, beta, trial, min(gaps), max(mismatches)])
        return out

    chunks = _pmap(run_point, points, jobs)
    rows = [row for chunk in chunks for row in chunk]
    min_gap = min(row[3] for row in rows)
    max_mismatch = max(row[4] for row in rows)
    invariants = {
        "gap_nonnegative_on_gibbs": bool(min_gap >= -tol),
        "left_side_forms_agree": bool(max_mismatch <= 1e-9),
    }
    header = ["modes", "beta", "trial", "min_gap", "max_form_mismatch"]
    return header, rows, invariants


def _run_decay_sweep(params: dict, seed: int, jobs: int):
    lam_grid = params["lambda_grid"]
    h = params["h"]
    shift = params["shift"]
    queries = decay.bounded_occupation_curve(lam_grid, h, shift)
    rows = [[q.lam, q.h, q.shift, q.y_min, q.w_bound, int(q.vacuous)] for q in queries]
    residual = 0.0
    for q in queries:
        if not q.vacuous:
            residual = max(residual, abs((q.lam - q.shift)
                                         - q.h * math.sqrt(q.y_min) - math.log(q.y_min)))
    w_col = [q.w_bound for q in queries]
    invariants = {
        "w_bound_monotone_nonincreasing": bool(
            all(b <= a + 1e-15 for a, b in zip(w_col, w_col[1:]))),
        "solver_residual_below_1e-10": bool(residual <= 1e-10),
    }
    header = ["lambda", "h", "shift", "y_min", "w_bound", "vacuous_flag"]
    return header, rows, invariants


def _run_toy_chain(params: dict, seed: int, jobs: int):
    if params["chain_config"]:
        spec = toychain.load_chain_spec(params["chain_config"])
    else:
        coupling = toychain.exponential_coupling(
            int(params["local_dim"]), params["coupling_strength"], params["coupling_rate"])
        spec = toychain.ToyChainSpec(
            int(params["n_sites"]), int(params["local_dim"]), coupling, params["beta"])
    profile = toychain.occupation_profile(spec)
    deriv_residual = max(
        toychain.local_derivative(spec, k).residual for k in range(spec.local_dim))
    entropy = toychain.local_entropy_report(
        spec, list(range(1, spec.n_sites + 1)))
    rows = [
        [int(k), occ, tail, q.w_bound, int(q.vacuous)]
        for k, occ, tail, q in zip(profile.levels, profile.occupations,
                                   profile.tail_sums, profile.bounds)
    ]
    invariants = {
        "occupations_below_nonvacuous_bounds": bool(profile.satisfied()),
        "translation_invariance_below_1e-10": bool(profile.translation_spread <= 1e-10),
        "derivative_split_residual_below_1e-10": bool(deriv_residual <= 1e-10),
        "window_entropies_subadditive": bool(entropy.subadditive()),
    }
    header = ["level", "occupation", "tail_sum", "w_bound", "vacuous_flag"]
    return header, rows, invariants


def _run_lemma1(params: dict, seed: int, jobs: int):
    v = phasespace.GaussianPotential(params["strength_v"], params["width_v"])
    w = phasespace.GaussianPotential(params["strength_w"], params["width_w"])
    c = params["c"]
    probes = params["p0_probes"]
    values = _pmap(lambda p0: phasespace.lemma1_value_at(p0, v, w, c), probes, jobs)
    rows = [[p0, val] for p0, val in zip(probes, values)]
    mean = float(np.mean(values))
    spread = (max(values) - min(values)) / mean if mean > 0 else 0.0
    invariants = {"momentum_uniform_to_1e-6": bool(spread <= 1e-6)}
    header = ["p0", "interaction_norm_bound"]
    return header, rows, invariants


def _run_cutoff(params: dict, seed: int, jobs: int):
    x_grid = np.linspace(params["x_min"], params["x_max"], int(params["x_points"]))
    report = phasespace.cutoff_collapse_check(params["gammas"], params["q"], x_grid)
    rows = [[g, d] for g, d in zip(report.gammas, report.distances)]
    invariants = {"kernel_distance_strictly_decreasing": bool(report.strictly_decreasing)}
    header = ["gamma", "kernel_distance"]
    return header, rows, invariants


def _run_entropy_dominance(params: dict, seed: int, jobs: int):
    modes = int(params["modes"])
    n_states = int(params["n_states"])
    dim = 2**modes
    base_rng = _random_state(seed, 0)
    sym_raw = _random_hermitian(base_rng, modes)
    evals = np.linalg.eigvalsh(sym_raw)
    sym = quasifree.QuasifreeSymbol(
        (sym_raw - evals.min() * np.eye(modes)) / (evals.max() - evals.min() + 1e-12))

    def run_trial(trial: int):
        rng = _random_state(seed, 1, trial)
        g = _random_operator(rng, dim)
        state = g @ g.conj().T
        state /= np.trace(state).real
        s_rho, s_pinched, ok = quasifree.entropy_dominance_check(state, sym)
        rel = quasifree.relative_entropy(state, quasifree.pinch(state, sym))
        residual = abs(rel - (s_pinched - s_rho))
        return [trial, s_rho, s_pinched, rel, residual, int(ok)]

    rows = _pmap(run_trial, range(n_states), jobs)
    invariants = {
        "pinching_never_lowers_entropy": bool(all(r[5] for r in rows)),
        "entropy_gap_equals_relative_entropy_1e-9": bool(
            max(r[4] for r in rows) <= 1e-9),
    }
    header = ["trial", "entropy", "pinched_entropy", "relative_entropy",
              "identity_residual", "dominated"]
    return header, rows, invariants


def _run_certificate(params: dict, seed: int, jobs: int):
    if params["symbol_file"]:
        symbol = quasifree.load_symbol(params["symbol_file"])
    else:
        symbol = quasifree.fermi_dirac_symbol(
            params["dispersion"], params["beta"], params["mu"])
    cert = quasifree.trace_class_certificate(symbol, params["c"], params["epsilon"])
    rho_n = symbol.sorted_eigenvalues()
    rows = [
        [int(n), val, params["c"] * float(n) ** -(1.0 + params["epsilon"])]
        for n, val in zip(range(1, rho_n.size + 1), rho_n)
    ]
    invariants = {"certificate_evaluated": True}
    expect = params["expect"].strip().lower()
    if expect:
        if expect not in ("pass", "fail"):
            raise ConfigError("expect must be 'pass' or 'fail'")
        invariants["certificate_outcome_as_expected"] = bool(
            cert.passed == (expect == "pass"))
    else:
        invariants["certificate_passed"] = bool(cert.passed)
    header = ["n", "rho_n", "bound_n"]
    return header, rows, invariants, {"certificate": json.loads(cert.to_json())}


EXPERIMENTS = {
    "fermi-dirac": {
        "claim": "free-gas occupation recovery and perturbation sandwich",
        "defaults": {"p0_grid": [0.0, 0.5, 1.0, 2.0], "mu": 0.0,
                     "b_sequence": [1.0, 0.5, 0.25, 0.125]},
        "run": _run_fermi_dirac,
    },
    "kms-gap": {
        "claim": "equilibrium inequality gap is nonnegative on Gibbs states",
        "defaults": {"modes": [2, 3, 4], "betas": [0.2, 1.0, 5.0],
                     "n_hamiltonians": 20, "n_observables": 50, "gap_tol": 1e-8},
        "run": _run_kms_gap,
    },
    "decay-sweep": {
        "claim": "high-frequency occupation bound over an eigenvalue grid",
        "defaults": {"lambda_grid": [float(x) for x in range(5, 51)],
                     "h": 1.0, "shift": 0.0},
        "run": _run_decay_sweep,
    },
    "toy-chain": {
        "claim": "chain occupations dominated by the generic decay bound",
        "defaults": {"n_sites": 3, "local_dim": 4, "beta": 1.0,
                     "coupling_strength": 0.02, "coupling_rate": 1.0,
                     "chain_config": ""},
        "run": _run_toy_chain,
    },
    "lemma1": {
        "claim": "interaction-norm bound uniform in the packet momentum",
        "defaults": {"c": 1.0, "width_v": 1.0, "strength_v": 1.0,
                     "width_w": 1.0, "strength_w": 1.0,
                     "p0_probes": [0.0, 5.0, 20.0]},
        "run": _run_lemma1,
    },
    "cutoff": {
        "claim": "momentum-cutoff kernel collapses onto the multiplication kernel",
        "defaults": {"gammas": [0.5, 0.25, 0.125], "q": 0.0,
                     "x_min": -6.0, "x_max": 6.0, "x_points": 481},
        "run": _run_cutoff,
    },
    "entropy-dominance": {
        "claim": "pinching onto occupation projectors never lowers entropy",
        "defaults": {"modes": 3, "n_states": 1000},
        "run": _run_entropy_dominance,
    },
    "certificate": {
        "claim": "power-law eigenvalue decay certifies finite local entropy",
        "defaults": {"dispersion": [float(k) for k in range(8)], "beta": 1.0,
                     "mu": 0.0, "c": 2.0, "epsilon": 1.0,
                     "symbol_file": "", "expect": ""},
        "run": _run_certificate,
    },
}


# ---------------------------------------------------------------------------
# configuration

def _parse_value(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, list):
            if not raw:
                return []
            return [float(tok) for tok in raw.replace(",", " ").split()]
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse parameter {key!r} from {raw!r}: {exc}") from exc


def load_config(path, experiment: str) -> tuple[dict, int | None]:
    """Parameters and optional seed from a sectioned key = value file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known_sections = {"experiment", "parameters"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    seed = None
    if "experiment" in parser:
        section = parser["experiment"]
        extra = set(section) - {"name", "seed"}
        if extra:
            raise ConfigError(f"unknown [experiment] keys: {sorted(extra)}")
        name = section.get("name", experiment).strip()
        if name != experiment:
            raise ConfigError(
                f"config names experiment {name!r} but {experiment!r} was requested")
        if "seed" in section:
            try:
                seed = section.getint("seed")
            except ValueError as exc:
                raise ConfigError(f"bad seed: {exc}") from exc

    defaults = EXPERIMENTS[experiment]["defaults"]
    params = dict(defaults)
    if "parameters" in parser:
        for key, raw in parser["parameters"].items():
            if key not in defaults:
                raise ConfigError(
                    f"unknown parameter {key!r} for experiment {experiment!r}")
            params[key] = _parse_value(key, raw, defaults[key])
    return params, seed


# ---------------------------------------------------------------------------
# driver

def run_experiment(experiment: str, params: dict, seed: int, jobs: int,
                   output_dir: Path) -> int:
    spec = EXPERIMENTS[experiment]
    started = time.perf_counter()
    result = spec["run"](params, seed, jobs)
    header, rows, invariants = result[:3]
    extra = result[3] if len(result) > 3 else {}
    wall = time.perf_counter() - started

    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / f"{experiment}.csv"
    csv_path.write_text(csv_body(header, rows), encoding="ascii")
    passed = all(invariants.values())
    summary = {
        "experiment": experiment,
        "claim": spec["claim"],
        "parameters": params,
        "seed": seed,
        "invariants": invariants,
        "passed": passed,
        "rows": len(rows),
        "csv": csv_path.name,
        "wall_time_s": wall,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        **extra,
    }
    summary_path = output_dir / f"{experiment}.summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                            encoding="ascii")
    for name, ok in invariants.items():
        print(f"{experiment}: {name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if passed else EXIT_INVARIANT


def run_report(paths) -> int:
    rows = []
    worst = EXIT_OK
    for path in paths:
        p = Path(path)
        if not p.exists():
            print(f"missing summary file: {p}", file=sys.stderr)
            return EXIT_CONFIG
        data = json.loads(p.read_text(encoding="ascii"))
        rows.append((data["experiment"], data["passed"],
                     sum(1 for v in data["invariants"].values() if not v)))
        if not data["passed"]:
            worst = EXIT_INVARIANT
    width = max([len(r[0]) for r in rows], default=10)
    print(f"{'experiment'.ljust(width)}  verdict  failing")
    for name, passed, failing in rows:
        print(f"{name.ljust(width)}  {'PASS' if passed else 'FAIL':7}  {failing}")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmslab",
        description="thermal-state experiments: sweeps, invariant checks, CSV/JSON output",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in EXPERIMENTS.items():
        p = sub.add_parser(name, help=spec["claim"])
        p.add_argument("--config", type=Path, default=None,
                       help="sectioned key = value parameter file")
        p.add_argument("--output", type=Path, default=Path("."),
                       help="directory for the CSV table and JSON summary")
        p.add_argument("--seed", type=int, default=None,
                       help="seed fixing all randomness (default 0)")
        p.add_argument("--jobs", type=int, default=1,
                       help="concurrent evaluation of independent points")
    rep = sub.add_parser("report", help="consolidated pass/fail matrix of summaries")
    rep.add_argument("summaries", nargs="*", help="summary JSON files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return run_report(args.summaries)
    try:
        params = dict(EXPERIMENTS[args.command]["defaults"])
        config_seed = None
        if args.config is not None:
            params, config_seed = load_config(args.config, args.command)
        seed = args.seed if args.seed is not None else (
            config_seed if config_seed is not None else 0)
        jobs = max(1, args.jobs)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_experiment(args.command, params, seed, jobs, args.output)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
