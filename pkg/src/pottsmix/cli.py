"""Command-line interface.

Settings are resolved per key as: command-line flag, then the ``--config``
JSON file, then the built-in default. Every output starts with ``#`` lines
giving the seed and a SHA-256 hash of the resolved experiment spec.

Exit codes: 0 success, 2 parameter error, 3 capacity error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

from . import acceptance, blocks, bounds, conductance, dynamics, gibbs, graph
from .budgets import DEFAULTS as BUDGET_DEFAULTS, budget
from .errors import CapacityError, ParameterError

DEFAULT_SEED = 0x90775

EXIT_OK, EXIT_PARAM, EXIT_CAPACITY, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS: dict[str, Any] = {
    "graph": {"kind": "path", "n": 4},
    "lam": "2",
    "q": 2,
    "dynamics": "glauber",
    "blocks": None,
    "seed": DEFAULT_SEED,
    "output": None,
    "format": "text",
    "params": {},
}


@dataclass
class ExperimentSpec:
    subcommand: str
    graph: dict = field(default_factory=lambda: dict(DEFAULTS["graph"]))
    lam: str = "2"
    q: int = 2
    dynamics: str = "glauber"
    blocks: dict | None = None
    seed: int = DEFAULT_SEED
    budgets: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "text"
    params: dict = field(default_factory=dict)

    def render(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def parse(cls, text: str) -> "ExperimentSpec":
        return cls(**json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()

    def model(self) -> gibbs.ModelParams:
        return gibbs.ModelParams(gibbs.as_activity(self.lam), int(self.q))


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    started: str
    finished: str
    outputs: Any
    budgets: dict

    def to_json(self) -> str:
        return json.dumps({"spec": asdict(self.spec), "started": self.started, "finished": self.finished,
                           "outputs": self.outputs, "budgets": self.budgets}, indent=2, default=str)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Exact rationals as a/b, floats as shortest round-trip decimals."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def header(spec: ExperimentSpec) -> str:
    return f"# seed={spec.seed}\n# spec_hash={spec.digest()}\n# spec={spec.render()}\n"


def build_graph(src: dict) -> graph.Graph:
    kind = src.get("kind")
    if kind == "torus":
        return graph.toroidal_grid(int(src["L"]))
    if kind == "regular":
        return graph.random_regular(int(src["n"]), int(src["delta"]), int(src.get("seed", DEFAULT_SEED)))
    if kind == "extremal":
        return graph.extremal_graph(int(src["n"]), int(src["m"]), int(src["delta"]))
    if kind == "path":
        return graph.path_graph(int(src["n"]))
    if kind == "cycle":
        return graph.cycle_graph(int(src["n"]))
    if kind == "complete":
        return graph.complete_graph(int(src["n"]))
    if kind == "star":
        return graph.star_graph(int(src["leaves"]))
    if kind == "file":
        return graph.read_edge_list(src["path"])
    raise ParameterError(f"unknown graph kind {kind!r}")


def build_blocks(G: graph.Graph, src: dict | None) -> blocks.BlockSystem | None:
    if src is None:
        return None
    kind = src.get("kind")
    if kind == "singleton":
        return blocks.singleton_blocks(G)
    if kind == "kblock":
        return blocks.k_block_bfs(G, int(src["k"]))
    if kind == "grid":
        return blocks.grid_blocks(G, int(src["r"]))
    if kind == "edge":
        return blocks.edge_blocks(G)
    if kind == "whole":
        return blocks.custom_blocks(G, [range(G.n)], kind="whole")
    if kind == "file":
        with open(src["path"]) as fh:
            return blocks.BlockSystem.from_json(fh.read())
    raise ParameterError(f"unknown block-system kind {kind!r}")


def parse_start(text: str | None, n: int, q: int) -> tuple[int, ...]:
    if text in (None, "", "mono"):
        return (0,) * n
    X = gibbs.parse_configuration(text)
    if len(X) != n:
        raise ParameterError(f"start has {len(X)} colours, graph has {n} vertices")
    return X


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(float(x)) for x in str(text).split(",")]


def _lams(text) -> list:
    if isinstance(text, (list, tuple)):
        return [gibbs.as_activity(x) for x in text]
    return [gibbs.as_activity(x) for x in str(text).split(",")]


def _kv(pairs: list[tuple[str, Any]]) -> str:
    return "".join(f"{k}={fmt(v)}\n" for k, v in pairs)


# ---------------------------------------------------------------------------
# subcommand bodies: each takes a resolved spec and returns the output text
# ---------------------------------------------------------------------------


def cmd_gen_graph(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    return header(spec) + graph.format_edge_list(G)


def cmd_exact(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    p = spec.model()
    Z = gibbs.partition_function(G, p)
    rows = [("n", G.n), ("m", G.m), ("q", p.q), ("lambda", p.lam), ("mode", p.mode)]
    if p.exact:
        rows += [("Z", Z), ("logZ", math.log(Z))]
        rows.append(("pi_monochromatic", gibbs.gibbs_prob(G, p, (0,) * G.n)))
    else:
        rows += [("logZ", Z)]
        rows.append(("pi_monochromatic", gibbs.gibbs_prob(G, p, (0,) * G.n)))
    rows.append(("extremal_bound", gibbs.extremal_bound(G.n, G.m, max(G.max_degree, 1), p)
                 if G.max_degree else p.q**G.n))
    if p.lam > 1 and p.q**G.n <= budget("dense"):
        P = dynamics.transition_operator(G, p)
        pi = gibbs.gibbs_vector(G, p)
        if p.exact:
            rows.append(("detailed_balance", not dynamics.detailed_balance_violations(P, pi)))
            rows.append(("stationary", dynamics.is_stationary(P, pi)))
    return header(spec) + _kv(rows)


def run_simulate_text(graph: dict, lam: str, q: int, steps: int, seed: int, thin: int = 1,
                      start: str | None = None) -> str:
    """``simulate`` for an in-process caller; returns exactly what the CLI writes."""
    argv = ["simulate", "--lambda", str(lam), "--q", str(q), "--steps", str(steps),
            "--seed", str(seed)]
    if thin != 1:
        argv += ["--thin", str(thin)]
    if start is not None:
        argv += ["--start", start]
    flags = {"kind": "--graph", "n": "--n", "m": "--m", "L": "--L", "leaves": "--leaves",
             "delta": "--graph-delta", "seed": "--graph-seed", "path": "--file"}
    for key, value in graph.items():
        argv += [flags[key], str(value)]
    return cmd_simulate(resolve_spec(make_parser().parse_args(argv)))


def cmd_simulate(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    p = spec.model()
    prm = spec.params
    system = build_blocks(G, spec.blocks) if spec.dynamics == "block" else None
    start = parse_start(prm.get("start"), G.n, p.q)
    if prm.get("tv_max") is not None:
        curve = dynamics.tv_curve(G, p, start, int(prm["tv_max"]), system,
                                  exact=prm.get("exact"))
        return header(spec) + curve.to_csv()
    seed = spec.seed
    if prm.get("replica") is not None:
        seed = dynamics.replica_rng(spec.seed, int(prm["replica"]))
    traj = dynamics.run_chain(G, p, start, int(prm.get("steps", 100)), seed,
                              int(prm.get("thin", 1)), system)
    return header(spec) + traj.to_csv()


def cmd_coupling(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    p = spec.model()
    d = max(G.max_degree, 1)
    limit = 1 - Fraction(1, (d + 1) * G.n) if p.exact else 1 - 1 / ((d + 1) * G.n)
    rows = [("n", G.n), ("max_degree", G.max_degree), ("q", p.q), ("lambda", p.lam)]
    if p.q**G.n <= budget("dense"):
        vals = [dynamics.contraction_exact(G, p, pair) for pair in dynamics.adjacent_pairs(G.n, p.q)]
        rows += [("pairs", "all"), ("count", len(vals))]
    else:
        rng = dynamics.make_rng(spec.seed)
        vals = []
        for _ in range(int(spec.params.get("samples", 1000))):
            A = tuple(int(c) for c in rng.integers(p.q, size=G.n))
            u = int(rng.integers(G.n))
            c = (A[u] + 1 + int(rng.integers(p.q - 1))) % p.q
            B = A[:u] + (c,) + A[u + 1:]
            vals.append(dynamics.contraction_exact(G, p, dynamics.AdjacentPair(A, B, u)))
        rows += [("pairs", "sampled"), ("count", len(vals))]
    worst = max(vals)
    rows += [("max_contraction", worst), ("mean_contraction", sum(vals) / len(vals)),
             ("target", limit), ("hypothesis_q_ge_threshold",
                                  G.max_degree >= 2 and p.lam > 1
                                  and p.q >= bounds.rapid_threshold_glauber(G.max_degree, p.lam)),
             ("contracts", worst <= limit)]
    return header(spec) + _kv(rows)


def cmd_blocks(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    system = build_blocks(G, spec.blocks or {"kind": "singleton"})
    q_cap = spec.params.get("q_cap")
    prm = blocks.block_params(G, system, None if q_cap is None else int(q_cap))
    lam = gibbs.as_activity(spec.lam)
    out = {"system": json.loads(system.to_json()), "params": prm.as_dict(),
           "partial_plus_value": str(blocks.partial_plus_value(G, system)),
           "log_q_threshold": bounds.block_threshold(prm.s, prm.log_partial_plus, prm.Psi,
                                                     prm.mu_plus, lam) if lam > 1 else None}
    if system.kind.startswith("grid("):
        # the (4r)^(4r) closed form agrees with the definition only for r >= 4
        r = math.isqrt(system.max_size)
        shortcut = (4 * r) ** (4 * r)
        out["partial_plus_closed_form"] = str(shortcut)
        out["closed_form_matches"] = shortcut == blocks.partial_plus_value(G, system)
    return header(spec) + json.dumps(out, indent=2) + "\n"


def cmd_thresholds(spec: ExperimentSpec) -> str:
    prm = spec.params
    eta = Fraction(str(prm.get("eta", "1/5")))
    lines = [",".join(bounds.ThresholdReport.HEADER)]
    for d in _ints(prm.get("delta", 4)):
        for lam in _lams(prm.get("lambda", spec.lam)):
            for q in _ints(prm.get("qs", spec.q)):
                rep = bounds.threshold_report(d, lam, q, eta)
                lines.append(",".join(str(x) for x in rep.row()))
    return header(spec) + "\n".join(lines) + "\n"


def cmd_phase(spec: ExperimentSpec) -> str:
    prm = spec.params
    lines = ["q,delta,B,beta0,x_star,residual_f,residual_fprime"]
    for d in _ints(prm.get("delta", 3)):
        for q in _ints(prm.get("qs", "1000,10000,100000,1000000")):
            pt = bounds.double_root(q, d)
            lines.append(",".join(fmt(x) for x in (q, d, pt.B, pt.beta0, pt.x_star, pt.residual_f,
                                                    pt.residual_fprime)))
    return header(spec) + "\n".join(lines) + "\n"


def cmd_conductance(spec: ExperimentSpec) -> str:
    G = build_graph(spec.graph)
    p = spec.model()
    r = int(spec.params.get("r", 1))
    i = int(spec.params.get("i", 0))
    out: dict[str, Any] = {"r": r, "i": i}
    phi_global = None
    if p.q**G.n <= budget("conductance"):
        phi_global = conductance.global_conductance(G, p).phi
        out["phi_global"] = fmt(phi_global)
    if p.q**G.n <= budget("dense"):
        out["phi_ball"] = fmt(conductance.phi_ball_exact(G, p, r, i))
    out["phi_ball_bound"] = fmt(conductance.phi_ball_bound(G, p, r))
    sums = conductance.shell_sums(G, p, r, i)
    out["shell_sums"] = sums.as_dict()
    basis = phi_global if phi_global is not None else conductance.phi_ball_bound(G, p, r)
    out["tau_lower"] = conductance.conductance_mixing_lower(basis)
    out["tau_lower_from"] = "phi_global" if phi_global is not None else "phi_ball_bound"
    return header(spec) + json.dumps(out, indent=2) + "\n"


class VerificationFailure(Exception):
    def __init__(self, text: str):
        super().__init__("verification failed")
        self.text = text


def cmd_extremal_check(spec: ExperimentSpec) -> str:
    prm = spec.params
    n, m, d = int(prm["n"]), int(prm["m"]), int(prm["delta"])
    p = spec.model()
    best, G = gibbs.brute_force_max_Z(n, m, d, p)
    bound = gibbs.extremal_bound(n, m, d, p)
    ok = best <= bound and (m % d != 0 or best == bound)
    text = header(spec) + _kv([("n", n), ("m", m), ("delta", d), ("Z_max", best), ("bound", bound),
                               ("maximiser", list(G.edges)),
                               ("maximiser_is_H", graph.is_extremal_shape(G, d)), ("consistent", ok)])
    if not ok:
        raise VerificationFailure(text)
    return text


def cmd_verify(spec: ExperimentSpec) -> str:
    only = spec.params.get("only")
    results = acceptance.run_all(set(_ints(only)) if only else None)
    text = header(spec) + "\n".join(r.line() for r in results) + "\n"
    passed = sum(r.passed for r in results)
    text += f"# {passed}/{len(results)} criteria passed\n"
    if passed != len(results):
        raise VerificationFailure(text)
    return text


COMMANDS = {
    "gen-graph": cmd_gen_graph,
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "coupling": cmd_coupling,
    "blocks": cmd_blocks,
    "thresholds": cmd_thresholds,
    "phase": cmd_phase,
    "conductance": cmd_conductance,
    "extremal-check": cmd_extremal_check,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_graph_args(sp):
    g = sp.add_argument_group("graph")
    g.add_argument("--graph", dest="graph_kind",
                   choices=["torus", "regular", "extremal", "path", "cycle", "complete", "star", "file"])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--L", type=int)
    g.add_argument("--leaves", type=int)
    g.add_argument("--graph-delta", type=int, dest="graph_delta", help="degree for regular/extremal graphs")
    g.add_argument("--graph-seed", type=int, dest="graph_seed")
    g.add_argument("--file", dest="graph_file")


def _add_model_args(sp):
    sp.add_argument("--lambda", dest="lam", help="activity, e.g. 2, 3/2 (exact) or 1.5 (float)")
    sp.add_argument("--q", type=int)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pottsmix", description="Potts-model Glauber and block dynamics toolkit")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with default settings for this run")
        sp.add_argument("--seed", type=lambda s: int(s, 0))
        sp.add_argument("-o", "--output", help="write output here instead of stdout")
        sp.add_argument("--result-json", dest="result_json",
                        help="also write a result record (spec, timestamps, outputs)")
        return sp

    sp = common("gen-graph", "write a graph as an edge list")
    _add_graph_args(sp)

    sp = common("exact", "exact partition function and detailed-balance check")
    _add_graph_args(sp)
    _add_model_args(sp)

    sp = common("simulate", "run a chain or compute a TV curve")
    _add_graph_args(sp)
    _add_model_args(sp)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--start", help="comma-separated colours, or 'mono'")
    sp.add_argument("--tv", type=int, dest="tv_max", help="emit TV(t) for t = 0..TV instead of a trajectory")
    sp.add_argument("--replica", type=int)
    sp.add_argument("--dynamics", choices=["glauber", "block"])
    sp.add_argument("--blocks", dest="block_kind", choices=["singleton", "kblock", "grid", "edge", "whole", "file"])
    sp.add_argument("--k", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--blocks-file", dest="blocks_file")

    sp = common("coupling", "one-step coupling contraction over adjacent pairs")
    _add_graph_args(sp)
    _add_model_args(sp)
    sp.add_argument("--samples", type=int)

    sp = common("blocks", "block-system parameters")
    _add_graph_args(sp)
    _add_model_args(sp)
    sp.add_argument("--blocks", dest="block_kind", choices=["singleton", "kblock", "grid", "edge", "whole", "file"])
    sp.add_argument("--k", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--blocks-file", dest="blocks_file")
    sp.add_argument("--q-cap", type=int, dest="q_cap")

    sp = common("thresholds", "rapid/slow verdict table")
    sp.add_argument("--delta", help="comma-separated maximum degrees")
    sp.add_argument("--lambda", dest="lam_list", help="comma-separated activities")
    sp.add_argument("--q", dest="q_list", help="comma-separated colour counts")
    sp.add_argument("--eta")

    sp = common("phase", "double-root table for the tree threshold")
    sp.add_argument("--delta", help="comma-separated degrees")
    sp.add_argument("--q", dest="q_list", help="comma-separated colour counts")

    sp = common("conductance", "conductance report")
    _add_graph_args(sp)
    _add_model_args(sp)
    sp.add_argument("--r", type=int)
    sp.add_argument("--i", type=int)

    sp = common("extremal-check", "compare the brute-force maximum of Z with the extremal bound")
    _add_model_args(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--delta", type=int)

    sp = common("verify", "run the acceptance suite")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def resolve_spec(ns: argparse.Namespace) -> ExperimentSpec:
    """Merge flags over the config file over the defaults."""
    cfg: dict[str, Any] = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {ns.config}: {exc}") from exc
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    for k, v in cfg.items():
        if k in ("graph", "params") and isinstance(v, dict):
            merged[k] = {**(merged[k] or {}), **v} if k == "params" else dict(v)
        else:
            merged[k] = v
    flags = vars(ns)

    def given(name):
        return flags.get(name) is not None

    # graph
    if given("graph_kind"):
        merged["graph"] = {"kind": flags["graph_kind"]}
    gsrc = merged["graph"]
    for flag, key in (("n", "n"), ("m", "m"), ("L", "L"), ("leaves", "leaves"), ("graph_delta", "delta"),
                      ("graph_seed", "seed"), ("graph_file", "path")):
        if given(flag) and ns.subcommand != "extremal-check":
            gsrc[key] = flags[flag]
    if given("lam"):
        merged["lam"] = flags["lam"]
    if given("q"):
        merged["q"] = flags["q"]
    if given("seed"):
        merged["seed"] = flags["seed"]
    if given("output"):
        merged["output"] = flags["output"]
    if given("dynamics"):
        merged["dynamics"] = flags["dynamics"]
    if given("block_kind"):
        merged["blocks"] = {"kind": flags["block_kind"]}
        if merged["dynamics"] == "glauber" and not given("dynamics") and ns.subcommand == "simulate":
            merged["dynamics"] = "block"
    if merged.get("blocks") is not None:
        for flag, key in (("k", "k"), ("r", "r"), ("blocks_file", "path")):
            if given(flag):
                merged["blocks"][key] = flags[flag]
    params = dict(merged.get("params") or {})
    passthrough = {
        "simulate": ["steps", "thin", "start", "tv_max", "replica"],
        "coupling": ["samples"],
        "blocks": ["q_cap"],
        "thresholds": ["delta", "eta"],
        "phase": ["delta"],
        "conductance": ["r", "i"],
        "extremal-check": ["n", "m", "delta"],
        "verify": ["only"],
    }.get(ns.subcommand, [])
    for key in passthrough:
        if given(key):
            params[key] = flags[key]
    if given("lam_list"):
        params["lambda"] = flags["lam_list"]
    if given("q_list"):
        params["qs"] = flags["q_list"]
    if ns.subcommand == "extremal-check":
        for key in ("n", "m", "delta"):
            if key not in params:
                raise ParameterError(f"extremal-check needs --{key}")
    budgets = {name: budget(name) for name in BUDGET_DEFAULTS}
    return ExperimentSpec(ns.subcommand, graph=merged["graph"], lam=str(merged["lam"]), q=int(merged["q"]),
                          dynamics=merged["dynamics"], blocks=merged["blocks"], seed=int(merged["seed"]),
                          budgets=budgets, output=merged["output"], format=merged.get("format", "text"),
                          params=params)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def main(argv: list[str] | None = None) -> int:
    ap = make_parser()
    ns = ap.parse_args(argv)
    code = EXIT_OK
    started = _now()
    try:
        spec = resolve_spec(ns)
        try:
            text = COMMANDS[ns.subcommand](spec)
        except VerificationFailure as vf:
            text, code = vf.text, EXIT_VERIFY
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ParameterError, KeyError, ValueError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    if spec.output:
        with open(spec.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(ns, "result_json", None):
        result = ExperimentResult(spec, started, _now(), text, {k: v for k, v in spec.budgets.items()})
        with open(ns.result_json, "w") as fh:
            fh.write(result.to_json())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
