"""Command line front end.

Subcommands: solve, check-el, legendre, dubois, oracle, sweep.  Problems
are described in TOML configs; candidate trajectories travel as JSON
files carrying psi samples (reconstructed by barycentric interpolation
per smooth panel).  stdout carries only the result payload; diagnostics
go to stderr.  Exit codes: 0 success, 1 config or schema error,
2 runtime numerical error, 3 condition violated / NoExtremal,
4 Unsupported.
"""

from __future__ import annotations

import argparse
import bisect
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, DimensionError, FvcError, ParseError, SchemaError
from .expr import parse as parse_expr
from .fracops import CalphaFunction
from .legendre import legendre_check, second_variation_probe
from .solver import direct_minimize, solve_separable
from .variational import ProblemSpec, dubois_variation, el_residual

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VIOLATED = 3
EXIT_UNSUPPORTED = 4

SWEEP_COLUMNS = ["alpha", "beta", "regime", "status", "J", "k", "max_residual", "legendre", "diagnosis"]


# ---------------------------------------------------------------------------
# Config


class RunConfig:
    def __init__(self, raw: dict, path: str):
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a table")
        self.raw = raw
        prob = raw.get("problem")
        if not isinstance(prob, dict):
            raise ConfigError(f"{path}: missing [problem] table")
        self.problem_raw = prob
        quad = raw.get("quadrature", {})
        self.n_quad = int(quad.get("n", 64))
        self.n_nodes = int(raw.get("nodes", {}).get("n_nodes", 33))
        tols = raw.get("tolerances", {})
        self.tol_residual = float(tols.get("residual", 1e-7))
        self.tol_psd = float(tols.get("psd", 1e-9))
        self.sweep = raw.get("sweep")
        self.legendre = raw.get("legendre", {})
        self.dubois = raw.get("dubois", {})
        self.oracle = raw.get("oracle", {})
        out = raw.get("output", {})
        self.out_path = out.get("path")
        self.out_format = out.get("format")
        if self.out_format is not None and self.out_format not in ("json", "csv"):
            raise ConfigError(f"{path}: output format must be json or csv")

    def problem(self, alpha: float | None = None, beta: float | None = None) -> ProblemSpec:
        prob = self.problem_raw
        try:
            n = int(prob["n"])
            lag = parse_expr(str(prob["lagrangian"]), n)
            term = prob.get("terminant")
            term_e = parse_expr(str(term), n) if term is not None else None
            x0 = prob.get("x0")
            x1 = prob.get("x1")
            return ProblemSpec(
                variant=str(prob["variant"]),
                alpha=float(prob["alpha"] if alpha is None else alpha),
                beta=float(prob["beta"] if beta is None else beta),
                t0=float(prob["t0"]),
                t1=float(prob["t1"]),
                n=n,
                lagrangian=lag,
                terminant=term_e,
                x0_fixed=None if x0 is None else np.asarray(x0, dtype=float),
                x1_fixed=None if x1 is None else np.asarray(x1, dtype=float),
            )
        except KeyError as exc:
            raise ConfigError(f"[problem] missing required key {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[problem] invalid value: {exc}") from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: malformed TOML: {exc}") from exc
    return RunConfig(raw, path)


# ---------------------------------------------------------------------------
# Serialization: floats with 17 significant digits everywhere


def _f(v: float) -> str:
    return f"{float(v):.17g}"


def _json_text(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _f(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _json_text(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_text(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_text(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# Trajectory files


def _bary_weights(nodes: np.ndarray) -> np.ndarray:
    m = len(nodes)
    if m == 1:
        return np.ones(1)
    scale = (nodes[-1] - nodes[0]) / 4.0
    w = np.empty(m)
    for i in range(m):
        d = (nodes[i] - np.delete(nodes, i)) / scale
        w[i] = 1.0 / np.prod(d)
    return w


def load_trajectory(path: str, p: ProblemSpec) -> CalphaFunction:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read trajectory {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON: {exc}") from exc
    required = {"t0", "t1", "alpha", "x0", "psi_nodes", "psi_values", "jumps"}
    missing = required - set(data)
    if missing:
        raise SchemaError(f"{path}: missing fields {sorted(missing)}")
    x0 = np.asarray(data["x0"], dtype=float)
    if x0.shape != (p.n,):
        raise SchemaError(f"{path}: x0 has dimension {x0.shape}, problem needs ({p.n},)")
    nodes = np.asarray(data["psi_nodes"], dtype=float)
    values = np.asarray(data["psi_values"], dtype=float)
    if values.shape != (len(nodes), p.n):
        raise SchemaError(
            f"{path}: psi_values shape {values.shape} does not match "
            f"({len(nodes)}, {p.n})"
        )
    if len(nodes) and np.any(np.diff(nodes) <= 0):
        raise SchemaError(f"{path}: psi_nodes must be strictly increasing")
    jumps = tuple(float(j) for j in data["jumps"])
    t0, t1 = float(data["t0"]), float(data["t1"])
    alpha = float(data["alpha"])

    # one barycentric interpolant per smooth panel
    bounds = [t0] + list(jumps) + [t1]
    panels = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = (nodes >= lo) & (nodes <= hi) if lo == t0 else (nodes > lo) & (nodes <= hi)
        pn, pv = nodes[mask], values[mask]
        if len(pn) == 0:
            raise SchemaError(f"{path}: no psi samples inside panel [{lo}, {hi}]")
        panels.append((pn, pv, _bary_weights(pn)))

    def psi(t: float) -> np.ndarray:
        idx = bisect.bisect_left(list(jumps), t)
        pn, pv, w = panels[min(idx, len(panels) - 1)]
        d = t - pn
        hit = np.nonzero(d == 0.0)[0]
        if hit.size:
            return pv[hit[0]].copy()
        q = w / d
        return (q @ pv) / q.sum()

    return CalphaFunction(t0=t0, t1=t1, alpha=alpha, x0=x0, psi_smooth=psi, jumps=jumps)


def write_trajectory(path: str, traj: CalphaFunction, m: int = 65) -> None:
    i = np.arange(m)
    theta = (2 * i + 1) * np.pi / (2 * m)
    nodes = np.sort(0.5 * (traj.t0 + traj.t1) + 0.5 * (traj.t1 - traj.t0) * np.cos(theta))
    payload = {
        "t0": traj.t0,
        "t1": traj.t1,
        "alpha": traj.alpha,
        "x0": traj.x0,
        "psi_nodes": nodes,
        "psi_values": [traj.caputo(float(t)) for t in nodes],
        "jumps": list(traj.jumps),
    }
    with open(path, "w") as fh:
        fh.write(_json_text(payload) + "\n")


# ---------------------------------------------------------------------------
# Commands


def _sampled(traj: CalphaFunction, n_quad: int, count: int = 101) -> dict:
    ts = np.linspace(traj.t0, traj.t1, count)
    return {"t": ts, "x": [traj(float(t), n=n_quad) for t in ts]}


def _outcome_payload(out, n_quad: int) -> dict:
    payload = {
        "status": out.status,
        "diagnosis": out.diagnosis,
        "J": out.J,
        "constants": {k: v for k, v in out.constants.items()},
    }
    if out.trajectory is not None:
        payload["trajectory"] = _sampled(out.trajectory, n_quad)
    return payload


def _outcome_exit(out) -> int:
    if out.status == "Extremal":
        return EXIT_OK
    if out.status == "NoExtremal":
        return EXIT_VIOLATED
    return EXIT_UNSUPPORTED


def cmd_solve(cfg: RunConfig, args) -> int:
    p = cfg.problem()
    out = solve_separable(p, n_quad=cfg.n_quad)
    if out.status != "Extremal":
        print(f"solve: {out.status} ({out.diagnosis})", file=sys.stderr)
    _emit(_json_text(_outcome_payload(out, cfg.n_quad)), args.out)
    if args.trajectory and out.trajectory is not None:
        write_trajectory(args.trajectory, out.trajectory)
    return _outcome_exit(out)


def _report_payload(rep) -> dict:
    return {
        "regime": rep.regime,
        "node_ts": rep.node_ts,
        "residual_el": rep.residual_el,
        "inferred_k": rep.inferred_k,
        "fit_residual": rep.fit_residual,
        "residual_transversality": {k: v for k, v in rep.residual_transversality.items()},
        "max_abs": rep.max_abs,
        "note": rep.note,
    }


def cmd_check_el(cfg: RunConfig, args) -> int:
    if not args.trajectory:
        raise ConfigError("check-el requires --trajectory")
    p = cfg.problem()
    traj = load_trajectory(args.trajectory, p)
    rep = el_residual(p, traj, n_nodes=cfg.n_nodes, n_quad=cfg.n_quad)
    _emit(_json_text(_report_payload(rep)), args.out)
    if rep.max_abs > cfg.tol_residual:
        print(f"check-el: max_abs {rep.max_abs:.3e} exceeds {cfg.tol_residual:.3e}", file=sys.stderr)
        return EXIT_VIOLATED
    return EXIT_OK


def cmd_legendre(cfg: RunConfig, args) -> int:
    if not args.trajectory:
        raise ConfigError("legendre requires --trajectory")
    p = cfg.problem()
    traj = load_trajectory(args.trajectory, p)
    rep = legendre_check(p, traj, n_nodes=cfg.n_nodes, tol=cfg.tol_psd, n_quad=cfg.n_quad)
    payload = {
        "verdict": rep.verdict,
        "tol": rep.tol,
        "node_ts": rep.node_ts,
        "min_eigenvalues": rep.min_eigenvalues,
    }
    if rep.verdict == "Fail":
        payload["witness"] = {
            "t": rep.witness_t,
            "eigenvalue": rep.witness_eigenvalue,
            "vector": rep.witness_vector,
        }
    sigma = cfg.legendre.get("sigma")
    if sigma is not None:
        probes = second_variation_probe(p, traj, float(sigma), n_quad=cfg.n_quad)
        payload["second_variation_probe"] = [{"eps": e, "delta2J": v} for e, v in probes]
    _emit(_json_text(payload), args.out)
    return EXIT_OK if rep.verdict == "Pass" else EXIT_VIOLATED


def cmd_dubois(cfg: RunConfig, args) -> int:
    p = cfg.problem()
    f_text = cfg.dubois.get("f", "t")
    f_expr = parse_expr(str(f_text), p.n)
    bad = {k for k, _ in f_expr.variables()} - {"t"}
    if bad:
        raise ConfigError(f"[dubois] f may only depend on t, found {sorted(bad)}")
    from .expr import evaluate as _eval

    f = lambda t: _eval(f_expr, t=t)
    h, k_const = dubois_variation(f, (p.alpha, p.beta, p.t0, p.t1), n_quad=cfg.n_quad)
    dense = min(8 * cfg.n_quad, 512)
    payload = {
        "regime": "case_two" if p.beta <= p.alpha else "case_one",
        "k_const": k_const,
        "h_t0": h.x0,
        "h_t1": h(p.t1, n=dense),
    }
    _emit(_json_text(payload), args.out)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, args) -> int:
    p = cfg.problem()
    o = cfg.oracle
    out = direct_minimize(
        p,
        m=int(o.get("m", 32)),
        tol=float(o.get("tol", 1e-9)),
        max_iter=int(o.get("max_iter", 500)),
        n_quad=cfg.n_quad,
    )
    if out.status != "Extremal":
        print(f"oracle: {out.status} ({out.diagnosis})", file=sys.stderr)
    _emit(_json_text(_outcome_payload(out, cfg.n_quad)), args.out)
    return _outcome_exit(out)


def _grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0.0:
        raise ConfigError(f"sweep step must be positive, got {step}")
    vals = []
    v = start
    while v <= stop + 1e-9:
        vals.append(round(v, 12))
        v = start + (len(vals)) * step
    if not vals:
        raise ConfigError("sweep range is empty")
    return vals


def _sweep_cell(cfg: RunConfig, alpha: float, beta: float) -> list[str]:
    regime = "case_two" if beta <= alpha + 1e-12 else "case_one"
    try:
        p = cfg.problem(alpha=alpha, beta=beta)
        out = solve_separable(p, n_quad=cfg.n_quad)
    except FvcError as exc:
        return [_f(alpha), _f(beta), regime, "Error", "", "", "", "", str(exc)]
    if out.status != "Extremal":
        return [_f(alpha), _f(beta), regime, out.status, "", "", "", "", out.diagnosis]
    rep = el_residual(p, out.trajectory, n_nodes=cfg.n_nodes, n_quad=cfg.n_quad)
    leg = legendre_check(p, out.trajectory, n_nodes=cfg.n_nodes, tol=cfg.tol_psd, n_quad=cfg.n_quad)
    k = ";".join(_f(v) for v in out.constants["k"])
    return [
        _f(alpha),
        _f(beta),
        regime,
        out.status,
        _f(out.J),
        k,
        _f(rep.max_abs),
        leg.verdict,
        out.diagnosis,
    ]


def cmd_sweep(cfg: RunConfig, args) -> int:
    sw = cfg.sweep
    if not isinstance(sw, dict):
        raise ConfigError("sweep requires a [sweep] table")
    try:
        alphas = _grid(float(sw["alpha_start"]), float(sw["alpha_stop"]), float(sw["alpha_step"]))
        betas = _grid(float(sw["beta_start"]), float(sw["beta_stop"]), float(sw["beta_step"]))
    except KeyError as exc:
        raise ConfigError(f"[sweep] missing required key {exc.args[0]!r}") from exc
    for a in alphas:
        if not (0.0 < a <= 1.0):
            raise ConfigError(f"sweep alpha {a} outside (0, 1]")
    for b in betas:
        if b <= 0.0:
            raise ConfigError(f"sweep beta {b} must be positive")

    cells = [(a, b) for a in alphas for b in betas]
    threads = args.threads or int(os.environ.get("FVC_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda ab: _sweep_cell(cfg, *ab), cells))
    else:
        rows = [_sweep_cell(cfg, a, b) for a, b in cells]

    fmt = args.format or cfg.out_format or "csv"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            buf.write(",".join(row) + "\n")
        _emit(buf.getvalue(), args.out)
    else:
        payload = [dict(zip(SWEEP_COLUMNS, row)) for row in rows]
        _emit(_json_text(payload), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point

_COMMANDS = {
    "solve": cmd_solve,
    "check-el": cmd_check_el,
    "legendre": cmd_legendre,
    "dubois": cmd_dubois,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fvc", description="Fractional variational toolkit")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="TOML problem configuration")
    ap.add_argument("--trajectory", help="JSON trajectory file (input, or output for solve)")
    ap.add_argument("--out", help="write the payload here instead of stdout")
    ap.add_argument("--format", choices=["json", "csv"], help="sweep output format")
    ap.add_argument("--quad-n", type=int, help="override quadrature node count")
    ap.add_argument("--threads", type=int, help="sweep worker threads (default $FVC_THREADS)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.quad_n:
            cfg.n_quad = args.quad_n
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, SchemaError, ParseError, DimensionError) as exc:
        print(f"fvc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FvcError as exc:
        print(f"fvc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except np.linalg.LinAlgError as exc:
        print(f"fvc: linear algebra failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
