"""Command-line harness: ``cosetldpc <command> --config run.json``.

Every command reads one JSON configuration, validates it against
:data:`CONFIG_SCHEMA` and writes CSV (or JSON) files into ``--out``. Each
output starts with a ``#`` line (a ``_meta`` key for JSON) carrying the
command, the SHA-256 of the canonical configuration, the seed and the
worker count, so a file can always be traced back to the run that made it.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 infeasible design LP.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from .decoder import BPDecoder
from .density import mc_density_evolution, stability_margin
from .ensemble import CosetCode, DegreeDist, encode_small, sample_coset, sample_graph, sample_labels
from .errors import ConfigError, InfeasibleError, NumericalError
from .exit import (
    CurveSet,
    DomainError,
    ExitContext,
    design_grid,
    design_lambda,
    design_rho,
    fit_J,
    mix_curves,
    default_epsilon,
    tunnel_open,
)
from .gf import FieldError, GaloisField
from .modulation import (
    AWGN,
    DMC,
    Mapping,
    delta_param,
    equiprobable_capacity,
    nonuniform_constellation,
    pam_constellation,
    quantization_mapping,
    snr_for_capacity,
    unconstrained_limit,
)

log = logging.getLogger(__name__)

COMMANDS = ("capacity", "simulate", "de", "exit", "design", "stability", "field-check")

_DEGREES = {"type": "object", "patternProperties": {"^[0-9]+$": {"type": "number", "minimum": 0}},
            "additionalProperties": False, "minProperties": 1}
_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1}
_NUM_OR_LIST = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["seed"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "q": {"oneOf": [{"type": "integer", "minimum": 2},
                        {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1}]},
        "dd": {
            "type": "object", "additionalProperties": False,
            "properties": {"lambda": _DEGREES, "rho": _DEGREES, "normalize": {"type": "boolean"},
                           "regular": {"type": "array", "items": {"type": "integer", "minimum": 2},
                                       "minItems": 2, "maxItems": 2}},
        },
        "mapping": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["nonuniform", "pam", "quantization", "explicit"]},
                           "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                           "table": {"type": "array", "items": {"type": "number"}}},
        },
        "channel": {
            "type": "object", "additionalProperties": False, "required": ["type"],
            "properties": {"type": {"enum": ["awgn", "dmc"]},
                           "snr_db": _NUM_OR_LIST,
                           "sigma": {"type": "number", "exclusiveMinimum": 0},
                           "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                           "file": {"type": "string"}},
        },
        "target_bits": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "N": {"type": "integer", "minimum": 2},
        "max_iters": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "early_stop": {"type": "boolean"},
        "mode": {"enum": ["all-zero", "encoded"]},
        "samples": {"type": "integer", "minimum": 1000},
        "iters": {"type": "integer", "minimum": 0},
        "method": {"enum": [1, 2]},
        "exit": {
            "type": "object", "additionalProperties": False,
            "properties": {"n_grid": {"type": "integer", "minimum": 10},
                           "n_samples": {"type": "integer", "minimum": 1000},
                           "n_points": {"type": "integer", "minimum": 5},
                           "check_samples": {"type": "integer", "minimum": 500},
                           "sigma_max": {"type": "number", "exclusiveMinimum": 0},
                           "step": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1}},
        },
        "design": {
            "type": "object", "additionalProperties": False,
            "properties": {"left_degrees": _INT_LIST, "right_degrees": _INT_LIST,
                           "max_left_degree": {"type": "integer", "minimum": 2},
                           "rounds": {"type": "integer", "minimum": 1},
                           "epsilon": {"oneOf": [{"enum": ["default"]}, {"type": "number", "minimum": 0}]}},
        },
    },
}


# --- configuration -----------------------------------------------------------

def load_config(path, seed: int | None = None) -> dict:
    """Read and validate a configuration; ``seed`` overrides the file's value."""
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if seed is not None:
        cfg["seed"] = seed
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {e.message}") from e


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _need(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(missing)}")


def build_dd(cfg: dict) -> DegreeDist:
    _need(cfg, "dd")
    d = cfg["dd"]
    try:
        if "regular" in d:
            return DegreeDist.regular(*d["regular"])
        if "lambda" not in d or "rho" not in d:
            raise ConfigError("dd needs lambda and rho, or regular")
        lam = {int(k): v for k, v in d["lambda"].items()}
        rho = {int(k): v for k, v in d["rho"].items()}
        return DegreeDist.normalized(lam, rho) if d.get("normalize") else DegreeDist(lam, rho)
    except ValueError as e:
        raise ConfigError(f"bad degree distribution: {e}") from e


def build_mapping(cfg: dict) -> Mapping:
    _need(cfg, "mapping")
    m = cfg["mapping"]
    kind = m["kind"]
    if kind == "explicit":
        if "table" not in m:
            raise ConfigError("explicit mapping needs a table")
        mapping = Mapping(np.asarray(m["table"]), "explicit")
    else:
        _need(cfg, "q")
        q = cfg["q"]
        if not isinstance(q, int):
            raise ConfigError("this command needs a single field order q")
        if kind == "nonuniform":
            mapping = nonuniform_constellation(q)
        elif kind == "pam":
            mapping = pam_constellation(q)
        else:
            if "counts" not in m:
                raise ConfigError("quantization mapping needs counts")
            try:
                mapping = quantization_mapping(q, m["counts"])
            except ValueError as e:
                raise ConfigError(str(e)) from e
    if "q" in cfg and isinstance(cfg["q"], int) and cfg["q"] != mapping.q:
        raise ConfigError(f"mapping has {mapping.q} entries but q = {cfg['q']}")
    return mapping


def snr_list(cfg: dict) -> list:
    ch = cfg.get("channel", {})
    if ch.get("type") != "awgn" or "snr_db" not in ch:
        return []
    s = ch["snr_db"]
    return list(s) if isinstance(s, list) else [s]


def build_channels(cfg: dict, mapping: Mapping) -> list:
    """``[(label, channel)]``; AWGN SNR is ``E_s / sigma**2`` with ``E_s`` the mapping energy."""
    _need(cfg, "channel")
    ch = cfg["channel"]
    if ch["type"] == "dmc":
        if "matrix" in ch:
            P = ch["matrix"]
        elif "file" in ch:
            try:
                P = json.loads(Path(ch["file"]).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read DMC file: {e}") from e
        else:
            raise ConfigError("dmc channel needs matrix or file")
        try:
            chan = DMC(np.asarray(P, dtype=float))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if mapping.table.dtype.kind not in "iu" or mapping.table.max() >= chan.P.shape[0]:
            raise ConfigError("DMC mappings must index channel inputs")
        return [("dmc", chan)]
    if "sigma" in ch:
        return [(f"sigma={ch['sigma']}", AWGN(ch["sigma"]))]
    snrs = snr_list(cfg)
    if not snrs:
        raise ConfigError("awgn channel needs snr_db or sigma")
    return [(s, AWGN.from_snr_db(s, mapping.energy)) for s in snrs]


def single_channel(cfg: dict, mapping: Mapping):
    chans = build_channels(cfg, mapping)
    if len(chans) != 1:
        raise ConfigError("this command takes a single channel (one snr_db value)")
    return chans[0]


# --- output ------------------------------------------------------------------

class Output:
    def __init__(self, out_dir, cmd: str, cfg: dict, workers: int):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.meta = {"cmd": cmd, "config_sha256": config_hash(cfg), "seed": cfg["seed"], "workers": workers}
        self.header = " ".join(f"{k}={v}" for k, v in self.meta.items())
        self.written = []

    def csv(self, name: str, columns, rows) -> Path:
        lines = [f"# {self.header}", ",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return self.text(name, "\n".join(lines) + "\n")

    def text(self, name: str, body: str) -> Path:
        path = self.dir / name
        path.write_text(body)
        self.written.append(path)
        return path

    def json(self, name: str, obj: dict) -> Path:
        return self.text(name, json.dumps({"_meta": self.meta, **obj}, indent=2) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


# --- commands ----------------------------------------------------------------

def cmd_capacity(cfg, out: Output, workers: int, method: int | None):
    mapping = build_mapping(cfg)
    rows = []
    if cfg.get("channel", {}).get("type") == "dmc" or snr_list(cfg) or "sigma" in cfg.get("channel", {}):
        for label, chan in build_channels(cfg, mapping):
            rows.append((label, equiprobable_capacity(chan, mapping)))
    out.csv("capacity.csv", ["snr_db", "capacity_bits"], rows)
    limits = []
    for bits in cfg.get("target_bits", []):
        try:
            eq = snr_for_capacity(mapping, bits)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        # one real dimension per channel use
        un = unconstrained_limit(bits)
        limits.append((bits, eq, un, eq - un))
    out.csv("limits.csv", ["bits", "equiprobable_snr_db", "unconstrained_snr_db", "gap_db"], limits)
    for r in rows:
        print(f"SNR {r[0]} dB: C = {r[1]:.6f} bits")
    for r in limits:
        print(f"{r[0]} bits: equiprobable limit {r[1]:.3f} dB, unconstrained {r[2]:.3f} dB")


def _simulate_trial(args):
    graph, mapping, chan, mode, max_iters, early_stop, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    g = sample_labels(graph, rng)
    code = CosetCode(g, sample_coset(g.N, g.q, rng), mapping)
    word = encode_small(g, rng=rng) if mode == "encoded" else np.zeros(g.N, dtype=np.int64)
    sent = mapping.table[code.transmit_symbols(word)]
    y = chan.sample(sent, rng)
    res = BPDecoder(code, chan).decode(y, max_iters, early_stop, reference=word, rng=rng)
    return res.symbol_errors[-1], res.iterations


def cmd_simulate(cfg, out: Output, workers: int, method: int | None):
    """Random-coset simulation: one graph, fresh labels and coset per trial."""
    _need(cfg, "N", "trials")
    dd = build_dd(cfg)
    mapping = build_mapping(cfg)
    chans = build_channels(cfg, mapping)
    root = np.random.SeedSequence(cfg["seed"])
    graph_seq, trial_root = root.spawn(2)
    E = int(round(cfg["N"] / dd.int_lambda))
    graph = sample_graph(dd, E, np.random.default_rng(graph_seq), q=mapping.q)
    mode = cfg.get("mode", "all-zero")
    max_iters = cfg.get("max_iters", 50)
    early_stop = cfg.get("early_stop", True)
    summary, per_trial = [], []
    for (label, chan), snr_seq in zip(chans, trial_root.spawn(len(chans))):
        jobs = [(graph, mapping, chan, mode, max_iters, early_stop, s) for s in snr_seq.spawn(cfg["trials"])]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_simulate_trial, jobs))
        else:
            results = [_simulate_trial(j) for j in jobs]
        errs = np.array([r[0] for r in results])
        its = np.array([r[1] for r in results])
        for t, (e, it) in enumerate(results):
            per_trial.append((label, t, e, e / graph.N, it))
        ser = errs.sum() / (graph.N * len(results))
        summary.append((label, len(results), int(errs.sum()), ser, its.mean()))
        print(f"SNR {label}: {len(results)} trials, SER {ser:.3e}, mean iterations {its.mean():.1f}")
    out.csv("simulate.csv", ["snr_db", "trials", "symbol_errors", "ser", "avg_iterations"], summary)
    out.csv("simulate_trials.csv", ["snr_db", "trial", "symbol_errors", "ser", "iterations"], per_trial)


def cmd_de(cfg, out: Output, workers: int, method: int | None):
    dd = build_dd(cfg)
    mapping = build_mapping(cfg)
    _, chan = single_channel(cfg, mapping)
    trace = mc_density_evolution(dd, mapping, chan, n_samples=cfg.get("samples", 100_000),
                                 iters=cfg.get("iters", 50), rng=cfg["seed"], workers=workers)
    out.text("de.csv", trace.to_csv(out.header))
    print(f"final Pe {trace.pe[-1]:.3e} (stderr {trace.pe_stderr[-1]:.1e}) after {trace.iterations} iterations")


def _exit_setup(cfg, method: int | None, extra_left=(), extra_right=()):
    mapping = build_mapping(cfg)
    _, chan = single_channel(cfg, mapping)
    if not isinstance(chan, AWGN):
        raise ConfigError("EXIT charts are defined for AWGN channels only")
    m = method or cfg.get("method", 2)
    e = cfg.get("exit", {})
    root = np.random.SeedSequence(cfg["seed"])
    s_j, s_ctx, s_cnd = root.spawn(3)
    J, _ = fit_J(mapping.q, e.get("n_grid", 200), e.get("n_samples", 200_000), np.random.default_rng(s_j),
                 sigma_max=e.get("sigma_max", 10.0))
    ctx = ExitContext.build(mapping, chan.sigma, m, J=J, n_grid=e.get("n_grid", 200),
                            n_samples=e.get("n_samples", 200_000), rng=np.random.default_rng(s_ctx))
    return ctx, e, s_cnd


def cmd_exit(cfg, out: Output, workers: int, method: int | None):
    dd = build_dd(cfg)
    ctx, e, s_cnd = _exit_setup(cfg, method)
    curves = CurveSet(ctx, dd.lam, dd.rho, e.get("n_points", 41), e.get("check_samples", 20_000),
                      np.random.default_rng(s_cnd))
    step = e.get("step", 1e-3)
    grid = design_grid(0.0, step)
    vnd = mix_curves({i: curves.vnd(grid, i) for i in dd.lam}, dd.lam, grid, ctx.method, "vnd")
    lo, hi = curves.cnd_domain
    cgrid = grid[(grid >= lo) & (grid <= hi)]
    cnd = mix_curves({j: curves.cnd(cgrid, j) for j in dd.rho}, dd.rho, cgrid, ctx.method, "cnd")
    out.text("exit_vnd.csv", vnd.to_csv(out.header))
    out.text("exit_cnd.csv", cnd.to_csv(out.header))
    is_open, gap, where = tunnel_open(dd, curves, step)
    out.csv("tunnel.csv", ["method", "I0", "open", "min_gap", "argmin_I"], [(ctx.method, ctx.I0, is_open, gap, where)])
    fits = {"J": ctx.J.to_dict(), "I0": ctx.I0, "method": ctx.method}
    if ctx.JR is not None:
        fits["JR"] = ctx.JR.to_dict()
        fits["cnd"] = {str(j): c.fit.to_dict() for j, c in curves.cnd_fits.items()}
    out.json("exit_fits.json", fits)
    print(f"tunnel {'open' if is_open else 'closed'}: min gap {gap:.3e} at I = {where:.3f}")


def cmd_design(cfg, out: Output, workers: int, method: int | None):
    """Alternate LP steps starting from ``dd``'s rho: lambda, rho, lambda, ..."""
    dd0 = build_dd(cfg)
    d = cfg.get("design", {})
    left = d.get("left_degrees") or list(range(2, d.get("max_left_degree", max(dd0.lam)) + 1))
    right = d.get("right_degrees") or sorted(dd0.rho)
    eps = default_epsilon if d.get("epsilon", "default") == "default" else d["epsilon"]
    ctx, e, s_cnd = _exit_setup(cfg, method)
    step = e.get("step", 1e-3)
    curves = CurveSet(ctx, left, right, e.get("n_points", 41), e.get("check_samples", 20_000),
                      np.random.default_rng(s_cnd))
    lam, rho = dict(dd0.lam), dict(dd0.rho)
    history = []
    for r in range(d.get("rounds", 1)):
        if r % 2 == 0:
            lam = design_lambda(rho, curves, left, eps, step)
        else:
            rho = design_rho(lam, curves, right, eps, step)
        dd = DegreeDist(lam, rho)
        history.append({"step": "lambda" if r % 2 == 0 else "rho", "design_rate": dd.design_rate})
    is_open, gap, where = tunnel_open(dd, curves, step)
    out.json("design.json", {**dd.to_dict(), "design_rate": dd.design_rate, "tunnel_open": is_open,
                             "min_gap": gap, "argmin_I": where, "history": history, "method": ctx.method})
    print(f"design rate {dd.design_rate:.4f}, tunnel {'open' if is_open else 'closed'} (min gap {gap:.2e})")


def cmd_stability(cfg, out: Output, workers: int, method: int | None):
    dd = build_dd(cfg)
    mapping = build_mapping(cfg)
    rows = []
    for label, chan in build_channels(cfg, mapping):
        delta = delta_param(chan, mapping)
        margin = stability_margin(dd, delta)
        rows.append((label, dd.lambda2, dd.rho_prime_1, delta, margin, "stable" if margin < 1 else "unstable"))
        print(f"{label}: margin {margin:.4f} ({rows[-1][-1]})")
    out.csv("stability.csv", ["channel", "lambda2", "rho_prime_1", "delta", "margin", "verdict"], rows)


def field_check(q: int) -> tuple[bool, str]:
    """Exhaustive axiom check of the GF(q) lookup tables."""
    F = GaloisField(q)
    add, mul, neg, inv = F.add_table, F.mul_table, F.neg_table, F.inv_table
    e = np.arange(q)
    problems = []
    if not (np.all(add[0] == e) and np.all(add == add.T) and np.all(add[e, neg] == 0)):
        problems.append("additive group")
    if not (np.all(mul[1] == e) and np.all(mul == mul.T) and np.all(mul[0] == 0)
            and np.all(mul[e[1:], inv[1:]] == 1)):
        problems.append("multiplicative group")
    if q <= 64:
        a, b, c = np.meshgrid(e, e, e, indexing="ij")
        if not np.array_equal(add[add[a, b], c], add[a, add[b, c]]):
            problems.append("additive associativity")
        if not np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]]):
            problems.append("multiplicative associativity")
        if not np.array_equal(mul[a, add[b, c]], add[mul[a, b], mul[a, c]]):
            problems.append("distributivity")
    else:
        # rows are permutations and the distributive law holds along a sample of triples
        rng = np.random.default_rng(q)
        a, b, c = rng.integers(0, q, size=(3, 200_000))
        if not np.array_equal(mul[a, add[b, c]], add[mul[a, b], mul[a, c]]):
            problems.append("distributivity")
    if not all(len(set(row)) == q for row in add) or not all(len(set(row)) == q - 1 for row in mul[1:, 1:]):
        problems.append("latin-square structure")
    return not problems, "; ".join(problems) or "ok"


def cmd_field_check(cfg, out: Output, workers: int, method: int | None):
    _need(cfg, "q")
    qs = cfg["q"] if isinstance(cfg["q"], list) else [cfg["q"]]
    rows = []
    for q in qs:
        try:
            ok, detail = field_check(q)
            F = GaloisField(q)
            rows.append((q, F.p, F.m, " ".join(map(str, F.poly)), F.primitive, ok, detail))
        except FieldError as e:
            raise ConfigError(str(e)) from e
        print(f"GF({q}): {detail}")
    out.csv("field_check.csv", ["q", "p", "m", "poly", "primitive", "ok", "detail"], rows)
    if not all(r[5] for r in rows):
        raise NumericalError("field tables failed the axiom check")


HANDLERS = {
    "capacity": cmd_capacity, "simulate": cmd_simulate, "de": cmd_de, "exit": cmd_exit,
    "design": cmd_design, "stability": cmd_stability, "field-check": cmd_field_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosetldpc", description="Coset GF(q) LDPC toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    p.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1, metavar="N")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p.add_argument("--method", type=int, choices=(1, 2), help="EXIT method (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg = load_config(args.config, args.seed)
        out = Output(args.out, args.command, cfg, args.workers)
        HANDLERS[args.command](cfg, out, args.workers, args.method)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except InfeasibleError as e:
        print(f"design infeasible: {e}", file=sys.stderr)
        return 4
    except (NumericalError, DomainError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
