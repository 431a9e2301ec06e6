"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import allen_cahn as ac
from .dominance import classify, find_s0
from .exceptions import ConvergenceError, DomainError, MonitorViolation
from .io import emit_csv, emit_json
from .kernel import S_MAX, KernelParams, stiffness_first_row
from .poisson import convergence_sweep
from .toeplitz import condition_scaling

COMMANDS = ("matrix", "dominance", "spectrum", "poisson", "ac-run", "ac-converge")

RECIPES = """\
reproduction recipes:
  N0 table (one s per call):
    fraclap dominance --s 0.10
  condition-number scaling:
    fraclap spectrum --s 0.75 --sizes 64,128,256,512,1024
  Poisson errors and rates (h = 2^-5 .. 2^-9):
    fraclap poisson --s 0.5 --n 3
  Allen-Cahn spatial errors (both schemes):
    fraclap ac-converge --mode space --scheme semi_implicit --tau 1e-5
    fraclap ac-converge --mode space --scheme crank_nicolson --tau 1e-4
  Allen-Cahn temporal errors (tau = 1/5 .. 1/80, h = 2^-9):
    fraclap ac-converge --mode time --scheme crank_nicolson --h 0.001953125
  phase separation / monitors:
    fraclap ac-run --s 0.7 --eps 0.01 --tau 0.01 --T 12 --N 4096 --domain -2 2 --init gauss45
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    return [int(v) for v in vals]


# flag name -> (type, nargs) shared by every subcommand that accepts it
_COMMON = {
    "s": dict(type=float), "N": dict(type=int), "h": dict(type=float),
    "n": dict(type=int), "eps": dict(type=float), "tau": dict(type=float),
    "T": dict(type=float), "scheme": dict(choices=ac.SCHEMES),
    "domain": dict(type=float, nargs=2, metavar=("A", "B")),
    "out": dict(type=str), "seed": dict(type=int), "config": dict(type=str),
}

_EXTRA = {
    "matrix": {},
    "dominance": {},
    "spectrum": {"sizes": dict(type=_ints)},
    "poisson": {"load": dict(choices=("nodal", "gauss")), "levels": dict(type=_ints)},
    "ac-run": {"init": dict(choices=("gauss", "gauss45", "step", "random", "zero")),
               "record-every": dict(type=int), "snapshot-times": dict(type=_floats),
               "solver": dict(choices=ac.SOLVERS)},
    "ac-converge": {"mode": dict(choices=("space", "time")), "levels": dict(type=_ints),
                    "taus": dict(type=_floats), "ref-tau": dict(type=float),
                    "solver": dict(choices=ac.SOLVERS)},
}

_DEFAULTS = {
    "matrix": {"domain": (-1.0, 1.0)},
    "dominance": {"N": 64, "domain": (-1.0, 1.0)},
    "spectrum": {"sizes": [64, 128, 256, 512, 1024], "domain": (-1.0, 1.0)},
    "poisson": {"n": 1, "load": "nodal", "levels": [5, 6, 7, 8, 9]},
    "ac-run": {"eps": 0.01, "tau": 0.01, "T": 1.0, "N": 1024, "domain": (-10.0, 10.0),
               "scheme": "semi_implicit", "init": "gauss", "record-every": 1,
               "snapshot-times": [], "solver": "cg"},
    "ac-converge": {"s": 0.8, "eps": 0.1, "T": 1.6, "domain": (-1.0, 1.0), "scheme": "semi_implicit",
                    "mode": "space", "levels": [5, 6, 7, 8, 9],
                    "taus": [0.2, 0.1, 0.05, 0.025, 0.0125], "h": 2.0 ** -9,
                    "ref-tau": 1.0 / 2560, "solver": "dense"},
}

_HELP = {
    "matrix": "first row of the stiffness matrix (columns p, entry)",
    "dominance": "row deficits, regime and N0 values as JSON",
    "spectrum": "extreme eigenvalues and condition numbers (N, lambda_min, lambda_max, cond)",
    "poisson": "manufactured Poisson errors and rates (h, max_error, rate)",
    "ac-run": "Allen-Cahn run; monitor trace (t, min_u, max_u, energy)",
    "ac-converge": "manufactured Allen-Cahn errors and rates in space or time",
}


def build_parser():
    p = _Parser(prog="fraclap", description="Fractional Laplacian stiffness matrices and solvers.",
                epilog=RECIPES, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=_HELP[cmd], description=_HELP[cmd], epilog=RECIPES,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        for name, kw in {**_COMMON, **_EXTRA[cmd]}.items():
            sp.add_argument(f"--{name}", dest=name.replace("-", "_"), default=None, **kw)
    return p


def read_config_file(path, command):
    """Flat ``key=value`` lines; ``#`` starts a comment.  Returns raw strings."""
    allowed = set(_COMMON) | set(_EXTRA[command])
    allowed.discard("config")
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} for {command}")
        out[key] = val
    return out


def _coerce(command, key, text):
    kw = {**_COMMON, **_EXTRA[command]}[key]
    parts = text.split()
    conv = kw.get("type", str)
    try:
        if kw.get("nargs") == 2:
            if len(parts) != 2:
                raise ValueError
            return tuple(conv(v) for v in parts)
        val = conv(text)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"invalid value {text!r} for key {key!r}")
    if "choices" in kw and val not in kw["choices"]:
        raise UsageError(f"invalid value {text!r} for key {key!r}; choose from {kw['choices']}")
    return val


def parse_config(argv, config_file=None):
    """Merge defaults, config file values and flags (flags win) into a dict."""
    ns = build_parser().parse_args(argv)
    command = ns.command
    cfg = dict(_DEFAULTS[command])
    cfg.setdefault("seed", 0)
    explicit = set()
    path = config_file or ns.config
    if path:
        for k, v in read_config_file(path, command).items():
            cfg[k] = _coerce(command, k, v)
            explicit.add(k)
    for name in {**_COMMON, **_EXTRA[command]}:
        v = getattr(ns, name.replace("-", "_"))
        if v is not None and name != "config":
            cfg[name] = tuple(v) if name == "domain" else v
            explicit.add(name)
    cfg["command"] = command
    _validate(cfg, explicit)
    return cfg


def _need(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{cfg['command']}: missing --{', --'.join(missing)}")


def _validate(cfg, explicit=()):
    cmd = cfg["command"]
    if cmd in ("matrix", "dominance", "spectrum", "poisson", "ac-run"):
        _need(cfg, "s")
    s = cfg.get("s")
    if s is not None and not 0 < s < S_MAX:
        raise UsageError(f"--s {s} outside the admissible range s in (0, {S_MAX})")
    if cmd in ("matrix", "dominance"):
        _need(cfg, "N")
    if cfg.get("N") is not None and cfg["N"] < 2:
        raise UsageError("--N must be at least 2")
    for k in ("eps", "tau", "T", "h"):
        if cfg.get(k) is not None and not cfg[k] > 0:
            raise UsageError(f"--{k} must be positive")
    if cmd == "matrix" and cfg.get("h") is not None:
        if "domain" in explicit:
            a, b = cfg["domain"]
            if not np.isclose((b - a) / cfg["N"], cfg["h"], rtol=1e-12, atol=0):
                raise UsageError(f"--h {cfg['h']} disagrees with (b-a)/N = {(b - a) / cfg['N']}")
        else:
            # h without a domain: an interval of length N h centred at 0
            cfg["domain"] = (-0.5 * cfg["N"] * cfg["h"], 0.5 * cfg["N"] * cfg["h"])
    a, b = cfg.get("domain", (-1.0, 1.0))
    if not a < b:
        raise UsageError(f"--domain {a} {b} is empty")


# ----------------------------------------------------------------- commands

def _comments(cfg, *extra):
    keys = [k for k in sorted(cfg) if k not in ("command", "out", "seed")]
    items = " ".join(f"{k}={_show(cfg[k])}" for k in keys)
    return [f"fraclap {cfg['command']}", f"seed={cfg['seed']}", items, *extra]


def _show(v):
    if isinstance(v, (list, tuple)):
        return ",".join(format(x, ".17g") if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def cmd_matrix(cfg):
    a, b = cfg["domain"]
    params = KernelParams(cfg["s"], cfg["N"], a, b)
    sym = stiffness_first_row(params)
    rows = [(p, e) for p, e in enumerate(sym.entries)]
    emit_csv(["p", "entry"], rows, cfg.get("out"),
             _comments(cfg, f"branch={sym.branch} h={params.h!r}"))


def cmd_dominance(cfg):
    a, b = cfg["domain"]
    rep = classify(KernelParams(cfg["s"], cfg["N"], a, b))
    out = {**rep.as_dict(), "s0": find_s0(), "seed": cfg["seed"]}
    emit_json(out, cfg.get("out"))


def cmd_spectrum(cfg):
    a, b = cfg["domain"]
    rep = condition_scaling(cfg["s"], cfg["sizes"], a, b)
    emit_csv(["N", "lambda_min", "lambda_max", "cond"], rep.rows(), cfg.get("out"),
             _comments(cfg, f"e_min={rep.e_min:.17g} e_max={rep.e_max:.17g} e_cond={rep.e_cond:.17g}"))


def cmd_poisson(cfg):
    tab = convergence_sweep(cfg["s"], cfg["n"], [2.0 ** -k for k in cfg["levels"]], load=cfg["load"])
    emit_csv(["h", "max_error", "rate"], tab.rows(), cfg.get("out"), _comments(cfg))


def _initial(cfg):
    kind, seed = cfg["init"], cfg["seed"]
    if kind == "gauss":
        return lambda x: np.exp(-x * x)
    if kind == "gauss45":
        return lambda x: 0.8 * np.exp(-x * x)
    if kind == "step":
        return lambda x: (np.abs(x) < 2.0).astype(float)
    if kind == "zero":
        return np.zeros_like
    return lambda x: np.random.default_rng(seed).random(x.shape)


def _snapshot_path(out, t):
    stem = out[:-4] if out.endswith(".csv") else out
    return f"{stem}_t{format(t, 'g')}.csv"


def cmd_ac_run(cfg):
    _need(cfg, "eps", "tau", "T", "N")
    if cfg["snapshot-times"] and not cfg.get("out"):
        raise UsageError("--snapshot-times needs --out to name the snapshot files")
    a, b = cfg["domain"]
    config = ac.ACConfig(s=cfg["s"], epsilon=cfg["eps"], tau=cfg["tau"], T=cfg["T"], N=cfg["N"],
                         a=a, b=b, scheme=cfg["scheme"], initial_condition=_initial(cfg),
                         solver=cfg["solver"])
    state, trace, snaps = ac.run(config, record_every=cfg["record-every"],
                                 snapshot_times=cfg["snapshot-times"])
    note = f"guaranteed={config.guaranteed()} step_bound={config.step_bound():.17g}"
    emit_csv(["t", "min_u", "max_u", "energy"], trace.rows(), cfg.get("out"),
             _comments(cfg, note))
    if snaps:
        x = config.params.nodes()
        for t, U in sorted(snaps.items()):
            emit_csv(["x", "u"], zip(x, U), _snapshot_path(cfg["out"], t),
                     _comments(cfg, f"t={t:.17g}"))


def cmd_ac_converge(cfg):
    a, b = cfg["domain"]
    if not np.isclose(a, -b):
        raise UsageError("ac-converge needs a symmetric domain (-L, L)")
    L = b
    common = dict(s=cfg["s"], epsilon=cfg["eps"], lam=10.0, L=L, T=cfg["T"], solver=cfg["solver"])
    if cfg["mode"] == "space":
        tau = cfg["tau"] if cfg.get("tau") is not None else 1e-4
        tab = ac.spatial_sweep(cfg["scheme"], [2.0 ** -k for k in cfg["levels"]], tau, **common)
    else:
        tab = ac.temporal_sweep(cfg["scheme"], cfg["taus"], cfg["h"], cfg["ref-tau"], **common)
    emit_csv([tab.label, "max_error", "rate"], tab.rows(), cfg.get("out"), _comments(cfg))


_DISPATCH = {"matrix": cmd_matrix, "dominance": cmd_dominance, "spectrum": cmd_spectrum,
             "poisson": cmd_poisson, "ac-run": cmd_ac_run, "ac-converge": cmd_ac_converge}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        _DISPATCH[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"fraclap: usage error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"fraclap: usage error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, MonitorViolation, FloatingPointError) as exc:
        print(f"fraclap: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fraclap: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
