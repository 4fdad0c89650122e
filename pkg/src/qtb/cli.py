"""Command-line experiment runner.

Each subcommand writes one tidy CSV: a ``#`` comment line carrying the
SHA-256 of the resolved configuration, a header row, then data rows with
numbers printed to 12 significant digits. Exit codes: 0 success,
2 validation failure, 3 invariant violation during the run, 4 I/O error.
"""
import argparse
import hashlib
import io as _stdio
import json
import os
import sys

import numpy as np

from . import channels, measure, postselect, qmath, thermo, weight
from .channels import AccountingMode, KrausChannel
from .errors import QtbError
from .io import JsonFormatError, atomic_write_text, load_json, matrix_from_json
from .measure import Measurement
from .optimize import OptConfig

EXIT_OK, EXIT_VALIDATION, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4

BENEFIT_TOL = 1e-6
BOUND_TOL = 1e-6

COMMON_DEFAULTS = {
    "temp": 1.0,
    "seed": 0,
    "restarts": 16,
    "tol": 1e-7,
    "max_iter": 500,
    "out": None,
    "energies": None,
    "dim": 2,
    "mode": "battery",
}

COMMAND_DEFAULTS = {
    "channel-benefit": {"channel": "werner-holevo"},
    "measure-benefit": {"measurement": "basis2"},
    "conditional-work": {"measurement": "basis2", "state": "maximally-mixed"},
    "postselect-scan": {"measurement": "basis2", "success": "0", "da_max": 64},
    "weight-converge": {"channel": "random", "family": "tophat", "c": 1.0, "lengths": "10,100,1000,10000"},
    "weight-compare": {"measurement": "random", "state": "random", "length": 1e4},
    "protocol-steps": {"n_steps": 64, "purity": 0.999},
    "classify": {"channel": "werner-holevo"},
}


class ValidationError(QtbError):
    """One or more configuration preconditions failed."""


class InvariantViolation(Exception):
    """A numerical invariant failed while an experiment was running."""


# formatting

def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % (float(v) + 0.0)
    return str(v)


def config_hash(cfg):
    """Hash of every setting that affects the numbers; the output path is excluded."""
    cfg = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def render_csv(cfg, header, rows):
    buf = _stdio.StringIO()
    buf.write(f"# command={cfg['command']} config_sha256={config_hash(cfg)}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


# input resolution

def _hamiltonian(cfg, d):
    if cfg["energies"] is None:
        return np.zeros((d, d), dtype=np.complex128)
    e = [float(x) for x in str(cfg["energies"]).split(",")]
    if len(e) != d:
        raise ValidationError(f"--energies has {len(e)} values but the system dimension is {d}")
    return np.diag(e).astype(np.complex128)


def _name_arg(spec):
    name, _, arg = str(spec).partition(":")
    return name, arg


def _float_arg(name, arg):
    try:
        return float(arg)
    except ValueError:
        raise ValidationError(f"'{name}' needs a numeric parameter, e.g. {name}:0.5") from None


def resolve_channel(spec, d, rng):
    name, arg = _name_arg(spec)
    if name == "identity":
        return channels.identity_channel(d)
    if name == "werner-holevo":
        return channels.werner_holevo()
    if name == "depolarizing":
        return channels.depolarizing(_float_arg(name, arg), d)
    if name == "dephasing":
        return channels.dephasing(_float_arg(name, arg), d)
    if name == "reset-to-ground":
        return channels.reset_to_ground(d)
    if name == "random":
        from .sampling import random_channel
        return random_channel(rng, d, 2)
    if name == "mixed-unitary":
        obj = load_json(arg)
        if not isinstance(obj, dict) or "unitaries" not in obj or "probs" not in obj:
            raise JsonFormatError(f"{arg}: mixed-unitary JSON needs 'unitaries' and 'probs'")
        us = [matrix_from_json(u, f"unitaries[{i}]") for i, u in enumerate(obj["unitaries"])]
        return channels.mixed_unitary_channel(us, obj["probs"])
    if os.path.exists(spec) or spec.endswith(".json"):
        return KrausChannel.from_json(load_json(spec))
    raise ValidationError(f"unknown channel '{spec}'")


def resolve_measurement(spec, d, rng):
    name, arg = _name_arg(spec)
    if name.startswith("basis") and name[5:].isdigit():
        return measure.basis_measurement(int(name[5:]))
    if name == "povm":
        q = _float_arg(name, arg)
        if not 0.0 <= q <= 1.0:
            raise ValidationError("povm:q needs 0 <= q <= 1")
        succ = np.diag([np.sqrt(1 - q), np.sqrt(q)]).astype(np.complex128)
        fail = np.diag([np.sqrt(q), np.sqrt(1 - q)]).astype(np.complex128)
        return Measurement.from_kraus([[succ], [fail]])
    if name == "random":
        from .sampling import random_measurement
        return random_measurement(rng, d, 2, 1)
    if os.path.exists(spec) or spec.endswith(".json"):
        return Measurement.from_json(load_json(spec))
    raise ValidationError(f"unknown measurement '{spec}'")


def resolve_state(spec, d, rng):
    name, _ = _name_arg(spec)
    if name == "maximally-mixed":
        return qmath.maximally_mixed(d)
    if name == "plus":
        return qmath.proj(np.ones(d) / np.sqrt(d))
    if name == "random":
        from .sampling import random_state
        return random_state(rng, d, d)
    if os.path.exists(spec) or spec.endswith(".json"):
        obj = load_json(spec)
        return qmath.check_density(matrix_from_json(obj.get("rho") if isinstance(obj, dict) else obj, "rho"))
    raise ValidationError(f"unknown state '{spec}'")


def validate(cfg):
    problems = []
    if not (isinstance(cfg["temp"], (int, float)) and cfg["temp"] > 0):
        problems.append(f"temp must be positive (got {cfg['temp']!r})")
    if not (isinstance(cfg["restarts"], int) and cfg["restarts"] >= 0):
        problems.append(f"restarts must be a non-negative integer (got {cfg['restarts']!r})")
    if not (isinstance(cfg["tol"], (int, float)) and cfg["tol"] > 0):
        problems.append(f"tol must be positive (got {cfg['tol']!r})")
    if not (isinstance(cfg["max_iter"], int) and cfg["max_iter"] >= 1):
        problems.append(f"max_iter must be >= 1 (got {cfg['max_iter']!r})")
    if not (isinstance(cfg["seed"], int) and cfg["seed"] >= 0):
        problems.append(f"seed must be a non-negative integer (got {cfg['seed']!r})")
    if not (isinstance(cfg["dim"], int) and cfg["dim"] >= 1):
        problems.append(f"dim must be a positive integer (got {cfg['dim']!r})")
    if cfg["mode"] not in ("battery", "internal"):
        problems.append(f"mode must be 'battery' or 'internal' (got {cfg['mode']!r})")
    cmd = cfg["command"]
    if cmd == "postselect-scan" and not (isinstance(cfg["da_max"], int) and cfg["da_max"] >= 2):
        problems.append("da_max must be an integer >= 2")
    if cmd == "protocol-steps":
        if not (isinstance(cfg["n_steps"], int) and cfg["n_steps"] >= 1):
            problems.append("n_steps must be >= 1")
        if not (isinstance(cfg["purity"], (int, float)) and 0.5 <= cfg["purity"] < 1.0):
            problems.append("purity must lie in [0.5, 1)")
    if cmd == "weight-converge":
        if cfg["family"] not in ("tophat", "triangular"):
            problems.append("family must be 'tophat' or 'triangular'")
        if not (isinstance(cfg["c"], (int, float)) and cfg["c"] > 0):
            problems.append("c must be positive")
    if cmd == "weight-compare" and not (isinstance(cfg["length"], (int, float)) and cfg["length"] > 0):
        problems.append("length must be positive")
    if problems:
        raise ValidationError("invalid configuration:\n  - " + "\n  - ".join(problems))


def _opt(cfg):
    return OptConfig(n_restarts=cfg["restarts"], tol=cfg["tol"], max_iter=cfg["max_iter"], seed=cfg["seed"])


def _mode(cfg):
    return AccountingMode(cfg["mode"])


# experiments

def run_channel_benefit(cfg, rng):
    c = resolve_channel(cfg["channel"], cfg["dim"], rng)
    d = c.dim_in
    h = _hamiltonian(cfg, d)
    ctx = thermo.ThermalContext(cfg["temp"])
    res = channels.work_benefit(c, ctx, _opt(cfg), _mode(cfg), h if _mode(cfg) is AccountingMode.INTERNAL_POWER else None)
    unital = channels.is_unital(c)
    if res.value < -BENEFIT_TOL:
        raise InvariantViolation(f"work benefit {res.value:.3e} is negative")
    if unital and _mode(cfg) is AccountingMode.BATTERY_POWERED and abs(res.value) > BENEFIT_TOL:
        raise InvariantViolation(f"unital channel shows nonzero benefit {res.value:.3e}")
    header = ["channel", "mode", "temperature", "W", "converged", "unital"]
    return header, [[cfg["channel"], cfg["mode"], cfg["temp"], res.value, res.converged, unital]]


def run_measure_benefit(cfg, rng):
    m = resolve_measurement(cfg["measurement"], cfg["dim"], rng)
    h = _hamiltonian(cfg, m.dim)
    ctx = thermo.ThermalContext(cfg["temp"])
    internal = _mode(cfg) is AccountingMode.INTERNAL_POWER
    res = measure.work_benefit_measurement(m, ctx, _opt(cfg), _mode(cfg), h if internal else None)
    forget = channels.KrausChannel(tuple(k for o in m.outcomes for k in o.kraus))
    chan = channels.work_benefit(forget, ctx, _opt(cfg), _mode(cfg), h if internal else None)
    if res.value < chan.value - BENEFIT_TOL:
        raise InvariantViolation(f"measurement benefit {res.value:.6g} below channel benefit {chan.value:.6g}")
    header = ["measurement", "mode", "temperature", "W", "W_channel", "converged"]
    return header, [[cfg["measurement"], cfg["mode"], cfg["temp"], res.value, chan.value, res.converged]]


def run_conditional_work(cfg, rng):
    m = resolve_measurement(cfg["measurement"], cfg["dim"], rng)
    d = m.dim
    h = _hamiltonian(cfg, d)
    rho = resolve_state(cfg["state"], d, rng)
    if rho.shape[0] != d:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match measurement dimension {d}")
    ctx = thermo.ThermalContext(cfg["temp"])
    recs = measure.outcome_records(m, rho)
    total = sum(r.probability for r in recs)
    if abs(total - 1.0) > 1e-9:
        raise InvariantViolation(f"outcome probabilities sum to {total:.12g}")
    rows = []
    h_a = np.zeros((1, 1), dtype=np.complex128)
    for r in recs:
        if r.post_state is None:
            rows.append([r.index, r.probability, "nan", "nan", "nan"])
            continue
        s_post = qmath.von_neumann_entropy(r.post_state, check=False)
        w_app = measure.conditional_apply_work(m, rho, h, r.index)
        w_tot = measure.conditional_total_work(m, rho, (d, 1), h, h_a, ctx, r.index, _mode(cfg))
        rows.append([r.index, r.probability, s_post, w_app, w_tot])
    return ["i", "p_i", "S_post", "W_cond_apply", "W_cond_total"], rows


def run_postselect_scan(cfg, rng):
    m = resolve_measurement(cfg["measurement"], cfg["dim"], rng)
    try:
        success = tuple(int(s) for s in str(cfg["success"]).split(","))
    except ValueError:
        raise ValidationError("success must be a comma-separated list of outcome indices") from None
    ps = postselect.PostSelection(m, success)
    h = _hamiltonian(cfg, m.dim)
    ctx = thermo.ThermalContext(cfg["temp"])
    d_as = [2 ** k for k in range(1, int(np.log2(cfg["da_max"])) + 1)]
    rows = postselect.scaling_experiment(ps, h, ctx, d_as, _mode(cfg))
    if _mode(cfg) is AccountingMode.BATTERY_POWERED:
        for r in rows:
            if r.w_actual < r.w_bound - BOUND_TOL:
                raise InvariantViolation(f"d_a={r.d_a}: W={r.w_actual:.6g} below bound {r.w_bound:.6g}")
    header = ["d_a", "ln_da", "W_actual", "W_bound", "slope_running"]
    return header, [[r.d_a, r.ln_da, r.w_actual, r.w_bound, r.slope_running] for r in rows]


def _weight(family, length):
    return weight.TopHat(length) if family == "tophat" else weight.Triangular(length)


def run_weight_converge(cfg, rng):
    c = resolve_channel(cfg["channel"], cfg["dim"], rng)
    dil = channels.dilate(c)
    h = _hamiltonian(cfg, c.dim_in) if cfg["energies"] is not None else np.diag(np.arange(c.dim_in, dtype=float)).astype(complex)
    try:
        lengths = [float(x) for x in str(cfg["lengths"]).split(",")]
    except ValueError:
        raise ValidationError("lengths must be a comma-separated list of numbers") from None
    if any(L <= 0 for L in lengths):
        raise ValidationError("every weight length must be positive")
    rows = []
    for L in lengths:
        w = _weight(cfg["family"], L)
        eps = cfg["c"] / np.sqrt(L)
        choi = weight.explicit_channel(dil, h, w)
        if not choi.is_cp():
            raise InvariantViolation(f"explicit channel at L={L:g} is not completely positive")
        dist = weight.explicit_vs_implicit_distance(dil, h, w)
        if cfg["family"] == "tophat":
            delta = weight.tophat_delta_bound(L, cfg["c"])
        else:
            delta = weight.momentum_concentration(w, eps)
        rows.append([L, dist, delta, eps])
    return ["L", "trace_distance", "delta_bound", "eps"], rows


def run_weight_compare(cfg, rng):
    m = resolve_measurement(cfg["measurement"], cfg["dim"], rng)
    d = m.dim
    h = _hamiltonian(cfg, d) if cfg["energies"] is not None else np.diag(np.arange(d, dtype=float)).astype(complex)
    rho = resolve_state(cfg["state"], d, rng)
    dil, projs = measure.measurement_dilation(m)
    L = float(cfg["length"])
    top = weight.explicit_outcomes(dil, projs, rho, h, weight.TopHat(L))
    tri = weight.explicit_outcomes(dil, projs, rho, h, weight.Triangular(L))
    elems = measure.povm_elements(m)
    rows = []
    for i, (a, b) in enumerate(zip(top, tri)):
        p = float(np.trace(elems[i] @ rho).real)
        if a[1] is None or b[1] is None or p <= measure.P_FLOOR:
            rows.append([i, "nan", "nan", "nan", "nan"])
            continue
        corr = weight.coherence_correction(elems[i], rho, h, p)
        rows.append([i, a[1], b[1], corr, abs(b[1] - a[1] - corr)])
    return ["outcome", "W_tophat", "W_triangular", "correction_formula", "abs_err"], rows


def run_protocol_steps(cfg, rng):
    d = 2
    h = _hamiltonian(cfg, d)
    ctx = thermo.ThermalContext(cfg["temp"])
    a = cfg["purity"]
    start = np.diag([a, 1.0 - a]).astype(np.complex128)
    trace = thermo.swap_protocol(start, qmath.maximally_mixed(d), h, ctx, cfg["n_steps"])
    bound = thermo.optimal_work(start, qmath.maximally_mixed(d), h, ctx)
    if trace.total_work > bound + 1e-9:
        raise InvariantViolation(f"protocol extracted {trace.total_work:.9g} > optimal {bound:.9g}")
    return ["step", "work_increment", "cumulative_work", "bath_dF"], [list(r) for r in trace.csv_rows()]


def run_classify(cfg, rng):
    c = resolve_channel(cfg["channel"], cfg["dim"], rng)
    d = c.dim_in
    h = _hamiltonian(cfg, d)
    ctx = thermo.ThermalContext(cfg["temp"])
    unital = channels.is_unital(c)
    gibbs = channels.is_gibbs_preserving(c, h, ctx) if c.dim_in == c.dim_out else False
    catalytic = False
    if c.dim_in == c.dim_out:
        dil = channels.dilate(c)
        from .sampling import random_state
        probes = [random_state(rng, d, d) for _ in range(3)]
        found = channels.catalytic_fixed_point(dil.V, probes, dil.dims[1], channels.IterConfig(max_iter=2000))
        catalytic = found is not None
    header = ["channel", "unital", "gibbs_preserving", "catalytic_dilation_found"]
    return header, [[cfg["channel"], unital, gibbs, catalytic]]


RUNNERS = {
    "channel-benefit": run_channel_benefit,
    "measure-benefit": run_measure_benefit,
    "conditional-work": run_conditional_work,
    "postselect-scan": run_postselect_scan,
    "weight-converge": run_weight_converge,
    "weight-compare": run_weight_compare,
    "protocol-steps": run_protocol_steps,
    "classify": run_classify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qtb", description="Work-cost experiments for quantum channels and measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of settings; command-line flags take precedence")
        p.add_argument("--temp", type=float, help="bath temperature (default 1.0)")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--restarts", type=int, help="random optimizer restarts (default 16)")
        p.add_argument("--tol", type=float, help="optimizer tolerance (default 1e-7)")
        p.add_argument("--max-iter", dest="max_iter", type=int, help="optimizer iteration cap (default 500)")
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--energies", help="comma-separated energy levels of the diagonal Hamiltonian")
        p.add_argument("--dim", type=int, help="dimension for named channels and random inputs (default 2)")
        p.add_argument("--mode", choices=["battery", "internal"], help="work accounting (default battery)")

    p = sub.add_parser("channel-benefit", help="maximal single-use work benefit of a channel")
    common(p)
    p.add_argument("--channel", help="identity | werner-holevo | depolarizing:p | dephasing:p | reset-to-ground | mixed-unitary:FILE | random | FILE.json")
    p = sub.add_parser("measure-benefit", help="maximal work benefit of a measurement")
    common(p)
    p.add_argument("--measurement", help="basisN | povm:q | random | FILE.json")
    p = sub.add_parser("conditional-work", help="per-outcome conditional work table")
    common(p)
    p.add_argument("--measurement")
    p.add_argument("--state", help="maximally-mixed | plus | random | FILE.json")
    p = sub.add_parser("postselect-scan", help="post-selected work against ancilla size")
    common(p)
    p.add_argument("--measurement")
    p.add_argument("--success", help="comma-separated successful outcome indices (default 0)")
    p.add_argument("--da-max", dest="da_max", type=int, help="largest ancilla dimension, powers of two from 2 (default 64)")
    p = sub.add_parser("weight-converge", help="explicit-battery channel against implicit channel")
    common(p)
    p.add_argument("--channel")
    p.add_argument("--family", choices=["tophat", "triangular"])
    p.add_argument("--c", type=float, help="momentum window eps = c / sqrt(L) (default 1)")
    p.add_argument("--lengths", help="comma-separated weight widths L")
    p = sub.add_parser("weight-compare", help="top-hat against triangular conditional work")
    common(p)
    p.add_argument("--measurement")
    p.add_argument("--state")
    p.add_argument("--length", type=float, help="weight width L (default 1e4)")
    p = sub.add_parser("protocol-steps", help="stepwise swap protocol from a near-pure qubit to I/2")
    common(p)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--purity", type=float, help="largest eigenvalue of the initial state (default 0.999)")
    p = sub.add_parser("classify", help="unital / Gibbs-preserving / catalytic report for a channel")
    common(p)
    p.add_argument("--channel")
    return parser


def resolve_config(args):
    cmd = args.command
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[cmd])
    if args.config:
        loaded = load_json(args.config)
        if not isinstance(loaded, dict):
            raise JsonFormatError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = cmd
    return cfg


def run(cfg):
    """Run one experiment; returns the CSV text."""
    validate(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg["seed"]))
    header, rows = RUNNERS[cfg["command"]](cfg, rng)
    return render_csv(cfg, header, rows)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        text = run(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (QtbError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if cfg["out"]:
            atomic_write_text(cfg["out"], text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
