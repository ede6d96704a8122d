"""Command-line front end: ``eaqmac {region,optimize,simulate,verify}``.

Exit codes: 0 success, 1 a verified property failed, 2 input error,
3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .capacity import (
    OptimizerConfig,
    corner_points,
    ea_capacity_single,
    region_for_inputs,
    sum_rate_bound,
    union_hull,
    union_region_sample,
    verify_dephasing_maximizer,
)
from .channels import (
    QuantumChannel,
    identity_channel,
    load_channel,
    mac_tensor_power,
    make_collective_phase_flip,
    make_completely_dephasing,
    make_cq_channel,
    make_depolarizing,
    make_generalized_pauli,
    random_channel,
)
from .codesim import (
    build_srm_decoder,
    gentle_measurement_check,
    hayashi_nagaoka_run,
    simulate_packing,
    superdense_check,
)
from .entropy import verify_entropy_lemmas
from .errors import ConsistencyError, DimensionCap, EAQMACError
from .qmath import (
    DensityOperator,
    diag_state,
    kron_all,
    maximally_entangled,
    maximally_mixed,
    random_density,
    substream,
)
from .typicality import verify_typicality_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3

TOLERANCES = {
    "hermitian": 1e-9, "trace": 1e-9, "psd": 1e-9, "entropy_floor": 1e-12, "kraus_completeness": 1e-9,
    "srm_pinv": 1e-10, "optimizer_tol": 1e-9, "fd_step": 1e-5,
}

QUBIT_STATES = {
    "0": [1, 0], "1": [0, 1], "+": [1, 1], "-": [1, -1], "+i": [1, 1j], "-i": [1, -1j],
}


class InputError(EAQMACError, ValueError):
    """Malformed command-line specification."""


# spec grammar -------------------------------------------------------------------

def parse_spec(text: str) -> tuple[str, dict[str, list[str]]]:
    """``name:key=v1,v2,key2=v`` -> (name, {key: [values]}); bare tokens extend the previous key."""
    name, _, rest = text.partition(":")
    if name == "file":
        return name, {"path": [rest]}
    params: dict[str, list[str]] = {}
    key = None
    for tok in filter(None, rest.split(",")):
        if "=" in tok:
            key, _, val = tok.partition("=")
            params[key] = [val]
        elif key is None:
            raise InputError(f"value {tok!r} in {text!r} has no key")
        else:
            params[key].append(tok)
    return name, params


def _ints(params, key, default=None) -> list[int]:
    if key not in params:
        if default is None:
            raise InputError(f"missing parameter {key!r}")
        return list(default)
    try:
        return [int(v) for v in params[key]]
    except ValueError as exc:
        raise InputError(f"parameter {key!r} must be integers") from exc


def _floats(params, key, default=None) -> list[float]:
    if key not in params:
        if default is None:
            raise InputError(f"missing parameter {key!r}")
        return list(default)
    try:
        return [float(v) for v in params[key]]
    except ValueError as exc:
        raise InputError(f"parameter {key!r} must be numbers") from exc


def _qubit_state(label: str) -> np.ndarray:
    if label not in QUBIT_STATES:
        raise InputError(f"unknown qubit state {label!r}; use one of {sorted(QUBIT_STATES)}")
    v = np.asarray(QUBIT_STATES[label], dtype=complex)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def build_channel(text: str) -> QuantumChannel:
    name, params = parse_spec(text)
    if name == "identity":
        dims = _ints(params, "dims") if "dims" in params else _ints(params, "d", [2])
        return identity_channel(tuple(dims))
    if name == "dephasing":
        return make_completely_dephasing(_ints(params, "d", [2])[0])
    if name == "depolarizing":
        return make_depolarizing(_ints(params, "d", [2])[0], _floats(params, "q", [1.0])[0])
    if name == "phase-flip":
        d = _ints(params, "d", [2])[0]
        return make_collective_phase_flip(d, _floats(params, "p", [1.0 / d] * d))
    if name == "cq":
        return make_cq_channel([_qubit_state(s) for s in params.get("states", ["0", "+"])])
    if name == "random":
        ins = _ints(params, "in", [2])
        rng = substream(_ints(params, "seed", [0])[0], 99)
        return random_channel(math.prod(ins), _ints(params, "out", [2])[0], rng,
                              _ints(params, "k", [2])[0], tuple(ins))
    if name == "file":
        path = params["path"][0]
        if not Path(path).is_file():
            raise InputError(f"channel file {path!r} not found")
        return load_channel(path)
    raise InputError(f"unknown channel {name!r}")


def build_state(text: str, d: int) -> DensityOperator:
    name, params = parse_spec(text)
    if name in ("maximally-mixed", "pi"):
        return maximally_mixed(d)
    if name == "diag":
        p = _floats(params, "p")
        if len(p) != d:
            raise InputError(f"diag state needs {d} entries")
        return diag_state(p)
    if name == "random":
        return random_density(d, substream(_ints(params, "seed", [0])[0], 98))
    raise InputError(f"unknown input state {name!r}")


def build_inputs(text: str, dims: Sequence[int]) -> list[DensityOperator]:
    parts = text.split("/")
    if len(parts) == 1:
        parts = parts * len(dims)
    if len(parts) != len(dims):
        raise InputError(f"{len(parts)} input specs for {len(dims)} senders")
    return [build_state(p, d) for p, d in zip(parts, dims)]


# output ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def render_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def render_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r1", "r2"])
    for x, y in points:
        w.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()


def _envelope(args, argv) -> dict:
    return {"tool": "eaqmac", "version": __version__, "command": args.command, "argv": list(argv),
            "seed": args.seed, "tolerances": TOLERANCES}


def _write(args, report: dict, csv_points=None) -> None:
    if args.out:
        base = Path(args.out)
        base.with_suffix(".json").write_text(render_json(report), encoding="utf-8")
        if csv_points is not None:
            base.with_suffix(".csv").write_text(render_csv(csv_points), encoding="utf-8")
    elif args.format == "csv" and csv_points is not None:
        sys.stdout.write(render_csv(csv_points))
    else:
        sys.stdout.write(render_json(report))


# commands -----------------------------------------------------------------------------

def _opt_config(args) -> OptimizerConfig:
    return OptimizerConfig(starts=args.starts, seed=args.seed)


def cmd_region(args, argv) -> int:
    ch = build_channel(args.channel)
    if len(ch.in_dims) != 2:
        raise InputError("region needs a two-sender channel (declare in_dims with two factors)")
    level = args.level
    if not 1 <= level <= 2:
        raise InputError("--level must be 1 or 2")
    m = mac_tensor_power(ch, level) if level > 1 else ch
    if args.samples > 0:
        pents = union_region_sample(m, args.samples, _opt_config(args), seed=args.seed, refine=not args.no_refine)
    else:
        rho1, rho2 = build_inputs(args.inputs, ch.in_dims)
        if level > 1:
            rho1 = DensityOperator(kron_all([rho1.mat] * level))
            rho2 = DensityOperator(kron_all([rho2.mat] * level))
        pents = [region_for_inputs(m, rho1, rho2)]
    scale = 1.0 / level
    scaled = [type(p)(p.r1 * scale, p.r2 * scale, p.rsum * scale) for p in pents]
    hull = union_hull(scaled)
    head = scaled[0]
    report = _envelope(args, argv)
    report.update({
        "label": f"level-{level} inner bound",
        "channel": args.channel, "level": level, "samples": args.samples,
        "r1": head.r1, "r2": head.r2, "rsum": head.rsum,
        "corners": {k: list(v) for k, v in corner_points(head).items()},
        "pentagons": [p.as_dict() for p in scaled],
        "hull": [list(v) for v in hull],
        "pentagon_invariants": all(p.is_consistent() for p in scaled),
    })
    _write(args, report, hull)
    if args.out:
        print(f"pentagon r1={head.r1:.6f} r2={head.r2:.6f} rsum={head.rsum:.6f}")
        for k, (x, y) in corner_points(head).items():
            print(f"  {k} = ({x:.6f}, {y:.6f})")
        print(f"hull vertices: {len(hull)}")
    return EXIT_OK if report["pentagon_invariants"] else EXIT_FAIL


def cmd_optimize(args, argv) -> int:
    ch = build_channel(args.channel)
    objective = args.objective or ("sum-rate" if len(ch.in_dims) == 2 else "ea-single")
    cfg = _opt_config(args)
    if objective == "sum-rate":
        res = sum_rate_bound(ch, cfg)
    elif objective == "ea-single":
        res = ea_capacity_single(ch, cfg)
    else:
        raise InputError(f"unknown objective {objective!r}")
    report = _envelope(args, argv)
    report.update({"channel": args.channel, "objective": objective, **res.as_dict()})
    _write(args, report)
    if args.out:
        print(f"{objective}: {res.value:.9f} (converged={res.converged})")
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    ch = build_channel(args.channel)
    (rho,) = build_inputs(args.inputs, (ch.dim_in,))
    res = simulate_packing(ch, rho.mat, args.n, args.rate, args.gamma, args.delta, args.trials,
                           seed=args.seed, codebook=args.codebook, delta_theta=args.delta_theta)
    report = _envelope(args, argv)
    report.update({k: v for k, v in res.items() if not k.startswith("_")})
    report["channel"] = args.channel
    ok = res["pass_fraction"] is not None and res["pass_fraction"] >= 0.95
    report["pass"] = ok
    _write(args, report)
    if args.out:
        print(f"avg success {res['avg_success']:.6f}, min {res['min_success']:.6f}, bound {res['bound']:.6f}")
    return EXIT_OK if ok else EXIT_FAIL


def _suite_randomization(trials: int, seed: int) -> dict:
    worst = 0.0
    for d in (2, 3, 4, 5):
        phi = maximally_entangled(d).amplitudes
        avg = np.zeros((d * d, d * d), dtype=complex)
        for u in make_generalized_pauli(d):
            v = np.kron(u, np.eye(d)) @ phi
            avg += np.outer(v, v.conj())
        worst = max(worst, float(np.max(np.abs(avg / d**2 - np.eye(d * d) / d**2))))
    return {"max_entry_error": worst, "pass": worst <= 1e-12}


def _suite_gentle(trials: int, seed: int) -> dict:
    rows = []
    for t in range(trials):
        rng = substream(seed, 30, t)
        dim = int(rng.integers(2, 7))
        k = int(rng.integers(2, dim + 1))
        states = [random_density(dim, rng, rank=1).mat for _ in range(k)]
        povm = build_srm_decoder(None, states)
        rows.append(gentle_measurement_check(states, povm))
    worst = max((r["disturbance"] - r["bound"] for c in rows for r in c["states"]), default=None)
    return {"trials": trials, "max_excess": worst, "pass": all(c["pass"] for c in rows)}


def _suite_typicality(trials: int, seed: int) -> dict:
    rep = verify_typicality_suite(diag_state([0.75, 0.25]), [4, 6, 8], 0.1, 0.25)
    return {k: v for k, v in rep.items()}


SUITES = {
    "lemmas": lambda t, s: verify_entropy_lemmas(t, 3, s, ssa_trials=0),
    "ssa": lambda t, s: verify_entropy_lemmas(0, 3, s, ssa_trials=t),
    "typicality": _suite_typicality,
    "hn": lambda t, s: hayashi_nagaoka_run(t, 8, s),
    "gentle": _suite_gentle,
    "dephasing": lambda t, s: verify_dephasing_maximizer(make_completely_dephasing(2), t, s),
    "randomization": _suite_randomization,
    "superdense": lambda t, s: superdense_check(2),
}


def _suite_pass(rep: dict) -> bool:
    if "pass" in rep:
        return bool(rep["pass"])
    return all(v.get("pass", True) for v in rep.values() if isinstance(v, dict))


def cmd_verify(args, argv) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = {}
    if args.trials > 0:
        for name in names:
            rep = SUITES[name](args.trials, args.seed)
            rep["pass"] = _suite_pass(rep)
            results[name] = rep
    report = _envelope(args, argv)
    report.update({"suites": results, "trials": args.trials, "pass": all(r["pass"] for r in results.values())})
    _write(args, report)
    if args.out:
        for name, rep in results.items():
            print(f"{'PASS' if rep['pass'] else 'FAIL'} {name}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


# entry point --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eaqmac", description="Entanglement-assisted QMAC capacity toolkit")
    p.add_argument("--version", action="version", version=f"eaqmac {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel_default):
        sp.add_argument("--channel", default=channel_default, help="builtin spec name:key=value,... or file:path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output path stem; writes <out>.json (and <out>.csv)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    r = sub.add_parser("region", help="rate pentagon(s) and convex hull")
    common(r, "phase-flip:d=2,p=0.5,0.5")
    r.add_argument("--inputs", default="maximally-mixed")
    r.add_argument("--samples", type=int, default=0)
    r.add_argument("--level", type=int, default=1)
    r.add_argument("--starts", type=int, default=8)
    r.add_argument("--no-refine", action="store_true", help="skip the sum-rate optimizer in sampled mode")

    o = sub.add_parser("optimize", help="EA capacity or sum-rate bound")
    common(o, "identity:d=2")
    o.add_argument("--objective", choices=("ea-single", "sum-rate"), default=None)
    o.add_argument("--starts", type=int, default=8)

    s = sub.add_parser("simulate", help="packing-lemma code simulation")
    common(s, "identity:d=2")
    s.add_argument("--inputs", default="maximally-mixed")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--rate", type=float, default=1.0)
    s.add_argument("--gamma", type=float, default=0.01)
    s.add_argument("--delta", type=float, default=0.25)
    s.add_argument("--delta-theta", type=float, default=None)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--codebook", choices=("random", "superdense"), default="random")

    v = sub.add_parser("verify", help="lemma and property suites")
    common(v, "identity:d=2")
    v.add_argument("--suite", choices=("all", *SUITES), default="all")
    v.add_argument("--trials", type=int, default=100)
    return p


COMMANDS = {"region": cmd_region, "optimize": cmd_optimize, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, argv)
    except DimensionCap as exc:
        print(f"error: resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConsistencyError as exc:
        print(f"error: consistency check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (EAQMACError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
