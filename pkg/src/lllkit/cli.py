"""Command-line interface.

Every subcommand prints (or writes to ``--out``) one JSON report with
``"schema": 1`` and the full run configuration. Reports are deterministic
for a fixed input, seed and flag set; wall-clock timings are only added with
``--timing``.

Exit codes: 0 success, 1 input or usage error, 2 resampling cap exceeded or
retries exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .errors import CapExceeded, LLLError, RetriesExhausted

SCHEMA = 1
SEED_ENV = "LLLKIT_SEED"
EXIT_OK, EXIT_INPUT, EXIT_CAP = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    input: str | None
    seed: int
    trials: int
    policy: str
    cap_factor: float
    params: dict = field(default_factory=dict)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _chunks(total: int, parts: int) -> list:
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    out, start = [], 0
    for i in range(parts):
        size = base + (i < extra)
        out.append(range(start, start + size))
        start += size
    return out


# ------------------------------------------------------------ subcommands

def _maxsat_trial(args):
    from .maxsat import solve_beyond_threshold
    from .rng import derive_rng
    formula, alpha, seed, t = args
    rep = solve_beyond_threshold(formula, alpha, derive_rng(seed, t))
    d = rep.to_dict()
    d["trial"] = t
    return d


def cmd_maxsat(ns, cfg: RunConfig) -> dict:
    from .maxsat import clause_degrees, degree_threshold, parse_dimacs
    formula = parse_dimacs(_read(ns.input))
    alpha = ns.alpha
    if alpha is None:
        k = formula.k
        if k is None:
            raise UsageError("mixed-width formula; pass --alpha")
        degs = clause_degrees(formula)
        alpha = max(degs, default=0) / degree_threshold(k)
    cfg.params["alpha"] = alpha
    jobs = [(formula, alpha, cfg.seed, t) for t in range(cfg.trials)]
    runs = _map(_maxsat_trial, jobs, ns.parallel)
    totals = [r["violated_total"] for r in runs]
    mean = sum(totals) / len(totals)
    return {
        "n": formula.n, "m": formula.m, "k": formula.k, "alpha": alpha,
        "runs": runs,
        "mean_violated": mean,
        "mean_fraction": mean / formula.m if formula.m else 0.0,
        "bound": runs[0]["bound"],
        "core_always_satisfied": all(r["violated_core"] == 0 for r in runs),
    }


def _map(fn, jobs, parallel: int):
    if parallel and parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _load_graph(path):
    from .graphs import parse_edge_list
    try:
        return parse_edge_list(_read(path))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write_coloring(path, coloring):
    from .graphs import coloring_lines
    if path:
        Path(path).write_text(coloring_lines(coloring))


def cmd_acyclic(ns, cfg: RunConfig) -> dict:
    from .acyclic import find_acyclic_violation, mt_acyclic_16, mt_acyclic_girth
    from .rng import derive_rng
    g = _load_graph(ns.input)
    cfg.params.update({"colors": ns.colors, "palette": ns.palette, "girth_coeff": ns.girth_coeff})
    rng = derive_rng(cfg.seed)
    if ns.colors == "16d":
        res = mt_acyclic_16(g, rng, palette=ns.palette, cap_factor=cfg.cap_factor, seed=cfg.seed)
        extra = {}
    else:
        res = mt_acyclic_girth(g, rng, coeff=ns.girth_coeff, cap_factor=cfg.cap_factor, seed=cfg.seed)
        extra = {k: v for k, v in res.info.items() if k != "stage1"}
        extra["girth"] = None if math.isinf(extra["girth"]) else extra["girth"]
    _write_coloring(ns.coloring_out, res.coloring)
    return {
        "n": g.n, "m": g.m, "max_degree": g.max_degree,
        "palette": res.palette, "colors_used": res.colors_used,
        "verified": find_acyclic_violation(g, res.coloring) is None,
        "run": res.report.to_dict(ns.timing) | {"per_event": len(res.report.per_event)},
        "coloring": res.coloring,
        **extra,
    }


def cmd_nonrep(ns, cfg: RunConfig) -> dict:
    from .nonrep import FULL_VERIFY_LIMIT, find_repetitive_path, mt_nonrep, verify_nonrepetitive_full
    from .rng import derive_rng
    g = _load_graph(ns.input)
    cfg.params.update({"eps_prime": ns.eps, "palette": ns.palette, "L": ns.L})
    res = mt_nonrep(g, ns.eps, derive_rng(cfg.seed), ns.palette, L=ns.L, cap_factor=cfg.cap_factor,
                    seed=cfg.seed)
    _write_coloring(ns.coloring_out, res.coloring)
    full = verify_nonrepetitive_full(g, res.coloring) if g.m <= FULL_VERIFY_LIMIT else None
    return {
        "n": g.n, "m": g.m, "max_degree": g.max_degree,
        "palette": res.palette, "L": res.info["L"], "base_palette": res.info["base_palette"],
        "resample_count": res.report.resample_count,
        "core_verified": find_repetitive_path(g, res.coloring, res.info["L"]) is None,
        "full_verified": full,
        "coloring": res.coloring,
    }


def cmd_santa(ns, cfg: RunConfig) -> dict:
    from .santa import KLBSystem, solve
    try:
        S = KLBSystem.from_json(_read(ns.input))
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"{ns.input}: {exc}") from None
    cfg.params.update({"c": ns.c, "retries": ns.retries})
    res = solve(S, cfg.seed, c=ns.c, retries=ns.retries)
    return {"p": S.p, "l": S.l, "k": S.k, "beta": S.beta} | res.to_dict()


def _distlab_chunk(args):
    from .analysis import ever_true_counts
    from .instances import ExplicitInstance
    data, cap_factor, trials, seed, policy = args
    inst = ExplicitInstance.from_dict(data)
    params = inst.params(cap_factor)
    return ever_true_counts(inst.space, inst.events, inst.core_ids(), list(inst.events) + inst.monitors,
                            trials, seed, params, policy=policy, graph=inst.graph)


def cmd_distlab(ns, cfg: RunConfig) -> dict:
    from functools import reduce
    from .analysis import distribution_report
    from .core import check_lll
    from .instances import ExplicitInstance
    try:
        data = json.loads(_read(ns.input))
        inst = ExplicitInstance.from_dict(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{ns.input}: {exc}") from None
    params = inst.params(cfg.cap_factor)
    core = inst.core_ids()
    chk = check_lll(inst.events, inst.graph, params, restrict_to=core)
    jobs = [(data, cfg.cap_factor, r, cfg.seed, cfg.policy) for r in _chunks(cfg.trials, ns.parallel or 1)]
    counts = reduce(lambda a, b: a + b, _map(_distlab_chunk, jobs, ns.parallel))
    monitors = list(inst.events) + inst.monitors
    rep = distribution_report(inst.space, inst.events, core, monitors, counts, params, graph=inst.graph)
    out = rep.to_dict()
    for entry in out["monitors"]:
        entry["kind"] = "event" if entry["monitor"] < len(inst.events) else "monitor"
    out.update({"lll_ok": chk.ok, "lll_margins": list(chk.margins), "passed": rep.passed,
                "delta": params.delta, "T": params.T})
    return out


def cmd_gen(ns, cfg: RunConfig) -> dict:
    from .rng import derive_rng
    rng = derive_rng(cfg.seed)
    kind = ns.kind
    cfg.params.update({"kind": kind, "n": ns.n, "m": ns.m, "k": ns.k, "max_degree": ns.max_degree,
                       "p": ns.p, "l": ns.l, "beta": ns.beta})
    if kind == "cnf":
        from .maxsat import regular_kcnf, to_dimacs
        text = to_dimacs(regular_kcnf(ns.n, ns.m, ns.k, rng))
    elif kind == "graph":
        from .graphs import random_bounded_degree_graph, to_edge_list
        text = to_edge_list(random_bounded_degree_graph(ns.n, ns.max_degree, rng))
    elif kind == "santa":
        from .santa import gen_system
        text = json.dumps(gen_system(ns.p, ns.l, ns.k, ns.beta, rng).to_dict()) + "\n"
    else:
        from .instances import random_instance
        text = json.dumps(random_instance(rng).to_dict(), indent=1) + "\n"
    if ns.instance_out:
        Path(ns.instance_out).write_text(text)
        return {"written": ns.instance_out, "bytes": len(text)}
    return {"instance": text}


def _parse_assignment(text: str, n: int) -> list:
    vals = [None] * n
    for tok in text.replace("\n", " ").split():
        if tok in ("v", "s", "SATISFIABLE", "UNSATISFIABLE"):
            continue
        lit = int(tok)
        if lit == 0:
            continue
        if abs(lit) > n:
            raise UsageError(f"literal {lit} out of range")
        vals[abs(lit) - 1] = 1 if lit > 0 else 0
    if None in vals:
        raise UsageError("assignment does not set every variable")
    return vals


def _parse_coloring(text: str, m: int) -> list:
    col = [None] * m
    for line in text.splitlines():
        if not line.strip():
            continue
        e, c = (int(t) for t in line.split())
        if not 0 <= e < m:
            raise UsageError(f"edge index {e} out of range")
        col[e] = c
    if None in col:
        raise UsageError("colouring does not cover every edge")
    return col


def cmd_check(ns, cfg: RunConfig) -> dict:
    cfg.params["kind"] = ns.kind
    cfg.params["solution"] = ns.solution
    sol = _read(ns.solution)
    if ns.kind == "cnf":
        from .maxsat import count_violated, parse_dimacs
        formula = parse_dimacs(_read(ns.input))
        counts = count_violated(formula, _parse_assignment(sol, formula.n))
        return {"m": formula.m, "violated": counts.total}
    if ns.kind in ("acyclic", "nonrep"):
        g = _load_graph(ns.input)
        col = _parse_coloring(sol, g.m)
        if ns.kind == "acyclic":
            from .acyclic import find_acyclic_violation
            v = find_acyclic_violation(g, col)
            return {"ok": v is None, "violation": None if v is None else
                    {"kind": v.kind, "edges": list(v.edges), "colors": list(v.colors)}}
        from .nonrep import FULL_VERIFY_LIMIT, find_repetitive_path, verify_nonrepetitive_full
        L = ns.L or max(1, g.m // 2)
        path = find_repetitive_path(g, col, L)
        full = verify_nonrepetitive_full(g, col) if g.m <= FULL_VERIFY_LIMIT else None
        return {"ok": path is None and full is not False, "repetitive_path": None if path is None else list(path),
                "L": L, "full_verified": full}
    from .santa import KLBSystem, verify_assignment
    S = KLBSystem.from_json(_read(ns.input))
    result = json.loads(sol)
    res = result.get("result", result)
    f, shares = res["f"], res["assignment"]
    q = res.get("quota", min((len(s) for s in shares), default=0))
    try:
        verify_assignment(S, f, shares, q)
        return {"ok": True, "quota": q}
    except AssertionError as exc:
        return {"ok": False, "quota": q, "reason": str(exc)}


COMMANDS = {
    "maxsat": cmd_maxsat, "acyclic": cmd_acyclic, "nonrep": cmd_nonrep, "santa": cmd_santa,
    "distlab": cmd_distlab, "gen": cmd_gen, "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"root seed (default ${SEED_ENV} or 0)")
    common.add_argument("--trials", type=int, default=1)
    common.add_argument("--policy", choices=("first", "uniform"), default="first")
    common.add_argument("--cap-factor", type=float, default=50.0)
    common.add_argument("--parallel", type=int, default=1)
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall-clock timings")

    p = _Parser(prog="lllkit", description="Constructive local lemma toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("maxsat", parents=[common], help="beyond-threshold MAX-k-SAT on a DIMACS file")
    s.add_argument("input")
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--seeds", type=int, default=None, help="alias for --trials")

    for name, helptext in (("acyclic", "acyclic edge colouring"), ("nonrep", "non-repetitive colouring")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("input", help="edge list file")
        s.add_argument("--palette", type=int, default=None)
        s.add_argument("--coloring-out", default=None)
        if name == "acyclic":
            s.add_argument("--colors", choices=("16d", "girth"), default="16d")
            s.add_argument("--girth-coeff", type=float, default=2.0)
        else:
            s.add_argument("--eps", type=float, default=0.2)
            s.add_argument("--L", type=int, default=None)

    s = sub.add_parser("santa", parents=[common], help="(k,l,β)-system pipeline")
    s.add_argument("input")
    s.add_argument("--c", type=int, default=8)
    s.add_argument("--retries", type=int, default=2)

    s = sub.add_parser("distlab", parents=[common], help="output distribution vs bounds on an explicit instance")
    s.add_argument("input")

    s = sub.add_parser("gen", parents=[common], help="generate an instance")
    s.add_argument("kind", choices=("cnf", "graph", "santa", "events"))
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--m", type=int, default=100)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--max-degree", type=int, default=4)
    s.add_argument("--p", type=int, default=10)
    s.add_argument("--l", type=int, default=8)
    s.add_argument("--beta", type=float, default=2.0)
    s.add_argument("--instance-out", default=None)

    s = sub.add_parser("check", parents=[common], help="verify a solution file")
    s.add_argument("kind", choices=("cnf", "acyclic", "nonrep", "santa"))
    s.add_argument("input")
    s.add_argument("solution")
    s.add_argument("--L", type=int, default=None)
    return p


def _config(ns) -> RunConfig:
    seed = ns.seed if ns.seed is not None else _default_seed()
    trials = ns.trials
    if getattr(ns, "seeds", None) is not None:
        trials = ns.seeds
    if seed < 0 or trials < 1:
        raise UsageError("seed must be non-negative and trials positive")
    if ns.cap_factor <= 0:
        raise UsageError("--cap-factor must be positive")
    if ns.parallel < 1:
        raise UsageError("--parallel must be at least 1")
    return RunConfig(ns.subcommand, getattr(ns, "input", None), seed, trials, ns.policy, ns.cap_factor)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=1, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(obj):
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _config(ns)
    except UsageError as exc:
        sys.stderr.write(f"lllkit: {exc}\n")
        return EXIT_INPUT
    report = {"schema": SCHEMA, "config": asdict(cfg), "status": "ok"}
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        report["result"] = COMMANDS[ns.subcommand](ns, cfg)
    except (CapExceeded, RetriesExhausted) as exc:
        report["status"] = "cap_exceeded" if isinstance(exc, CapExceeded) else "retries_exhausted"
        report["error"] = str(exc)
        code = EXIT_CAP
    except (UsageError, LLLError, ValueError, KeyError) as exc:
        sys.stderr.write(f"lllkit: {exc}\n")
        return EXIT_INPUT
    report["config"] = asdict(cfg)
    if ns.timing:
        report["timing"] = {"wall_seconds": time.perf_counter() - t0}
    _emit(report, ns.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
