"""Command-line experiment runner.

Verbs::

    zonodpp run --config run.cfg [--seed S] [--chains M] [--steps N] [--seconds T]
                [--sampler NAME] [--out DIR] [--parallelism P]
    zonodpp validate --config run.cfg
    zonodpp enumerate --config run.cfg [--out FILE]
    zonodpp psrf RUN_DIR [--subset 1,2,3]

Exit codes: 0 ok, 1 configuration error, 2 runtime error.

A run directory holds ``manifest.json``, ``traces/<sampler>-<chain>.csv``
(schema in :mod:`zonodpp.traceio`), ``metrics.csv`` (``step,statistic,
chain,value``) and ``psrf-<sampler>.txt``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import functools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _backend, diagnostics as dg, runconfig, traceio
from .errors import ConfigError, EnumerationLimitError, ZonoDppError
from .models import (BaseMeasure, DppTarget, Graph, ParseError, barabasi_albert,
                     complete_graph, incidence_feature_matrix, load_edge_list,
                     load_feature_matrix, make_target)
from .numerics import as_feature_matrix
from .samplers import KINDS, ChainTrace, SamplerConfig, exact_projection_dpp_batch, run_chain

log = logging.getLogger("zonodpp")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


@dataclass(frozen=True)
class Model:
    target: DppTarget
    graph: Optional[Graph]
    weights: Optional[np.ndarray]
    description: str


def build_model(cfg: runconfig.RunConfig) -> Model:
    graph = None
    if cfg.model == "matrix":
        if not cfg.resolve(cfg.matrix_path).is_file():
            raise ConfigError(f"matrix_path: no such file {cfg.matrix_path}")
        A = load_feature_matrix(cfg.resolve(cfg.matrix_path), cfg.jitter, cfg.jitter_seed)
        desc = f"matrix {cfg.matrix_path}"
    else:
        if cfg.model == "complete":
            graph = complete_graph(cfg.vertices)
        elif cfg.model == "barabasi-albert":
            graph = barabasi_albert(cfg.vertices, cfg.ba_k, cfg.graph_seed)
        else:
            if not cfg.resolve(cfg.edge_list_path).is_file():
                raise ConfigError(f"edge_list_path: no such file {cfg.edge_list_path}")
            graph = load_edge_list(cfg.resolve(cfg.edge_list_path))
        A = incidence_feature_matrix(graph)
        desc = f"{graph.kind} graph, {graph.m} vertices, {graph.n_edges} edges"
    A = as_feature_matrix(A)
    if cfg.weights == "none":
        q = None
    elif cfg.weights == "uniform":
        q = BaseMeasure.uniform_random(A.n, cfg.weight_seed, cfg.base_measure).q
    elif cfg.weights == "file":
        if graph is None or graph.weights is None:
            raise ConfigError("weights: 'file' needs an edge list with weights")
        q = np.asarray(graph.weights)
    else:
        q = np.array([float(v) for v in cfg.weights.split(",")])
        if q.shape != (A.n,):
            raise ConfigError(f"weights: need {A.n} values, got {q.shape[0]}")
    target = make_target(A, None if q is None else BaseMeasure(q, cfg.base_measure))
    return Model(target, graph, q, desc)


@functools.lru_cache(maxsize=4)
def _cached_model(cfg: runconfig.RunConfig) -> Model:
    return build_model(cfg)


def _sampler_config(cfg: runconfig.RunConfig, kind: str) -> SamplerConfig:
    return SamplerConfig(kind=kind, steps=cfg.steps, seconds=cfg.seconds, seed=cfg.seed,
                         tiling_seed=cfg.tiling_seed,
                         base_measure="none" if cfg.weights == "none" else cfg.base_measure,
                         laziness=cfg.laziness, record_time=cfg.timing, debug=cfg.debug)


def _trace_paths(out: Path, kind: str, chain: int, fmt: str) -> list[Path]:
    stem = out / "traces" / f"{kind}-{chain:03d}"
    exts = {"csv": [".csv"], "jsonl": [".jsonl"], "both": [".csv", ".jsonl"]}[fmt]
    return [stem.with_suffix(e) for e in exts]


def _run_one(cfg: runconfig.RunConfig, kind: str, chain: int) -> ChainTrace:
    model = _cached_model(cfg)
    trace = run_chain(_sampler_config(cfg, kind), model.target, chain_id=chain,
                      graph=model.graph)
    for p in _trace_paths(Path(cfg.out), kind, chain, cfg.trace_format):
        (traceio.write_csv if p.suffix == ".csv" else traceio.write_jsonl)(trace, p)
    return trace


def _resolve_subset(cfg, model: Model, law) -> tuple[int, ...]:
    if cfg.subset == "seeded":
        size = min(cfg.subset_size, model.target.r)
        return dg.seeded_subset(model.target.n, size, cfg.subset_seed,
                                law if law is not None else model.target.dpp)
    S = tuple(sorted(int(v) for v in cfg.subset.split(",")))
    if any(not 0 <= i < model.target.n for i in S):
        raise ConfigError(f"subset: indices must lie in [0, {model.target.n})")
    return S


def _truth(cfg, model: Model, law, S) -> tuple[float, str]:
    if law is not None:
        return law.inclusion(S), "enumeration"
    if cfg.reference_draws > 0:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**32 - 1,)))
        draws = exact_projection_dpp_batch(model.target.dpp, cfg.reference_draws, rng)
        hit = np.isin(draws, np.array(S)).sum(axis=1) == len(S)
        return float(hit.mean()), f"exact sampler, {cfg.reference_draws} draws"
    return dg.kernel_inclusion(model.target.dpp, S), "kernel minor"


def _checkpoints(T: int, count: int) -> np.ndarray:
    pts = np.unique(np.linspace(1, T, num=min(count, T)).round().astype(int))
    return pts


def _metrics(traces: dict[str, list[ChainTrace]], S, truth, law, cfg) -> tuple[list, dict]:
    rows: list = []
    summary: dict = {}
    for kind, trs in traces.items():
        info: dict = {}
        for tr in trs:
            cid = tr.chain_id
            curve = dg.running_average(tr, S)
            pts = _checkpoints(len(tr), cfg.checkpoints)
            for t in pts:
                rows.append((t, f"{kind}.inclusion", cid, curve[t - 1]))
                if truth > 0:
                    rows.append((t, f"{kind}.rel_error", cid, abs(curve[t - 1] - truth) / truth))
            rows.append((len(tr), f"{kind}.acceptance_rate", cid, dg.acceptance_rate(tr)))
            rows.append((len(tr), f"{kind}.move_rate", cid, dg.move_rate(tr)))
            if law is not None:
                rows.append((len(tr), f"{kind}.tv", cid, dg.tv_distance(tr, law, cfg.burn_in)))
        if truth > 0:
            curves = [dg.relative_error_trace(tr, truth, S) for tr in trs]
            band = dg.error_band(curves)
            for t in _checkpoints(len(band.median), cfg.checkpoints):
                rows.append((t, f"{kind}.rel_error", "median", band.median[t - 1]))
                rows.append((t, f"{kind}.rel_error", "decile10", band.lower[t - 1]))
                rows.append((t, f"{kind}.rel_error", "decile90", band.upper[t - 1]))
            info["median_rel_error"] = float(band.median[-1])
        info["acceptance_rate"] = float(np.mean([dg.acceptance_rate(t) for t in trs]))
        info["move_rate"] = float(np.mean([dg.move_rate(t) for t in trs]))
        info["steps"] = [len(t) for t in trs]
        info["initial"] = [[int(i) for i in t.initial] for t in trs]
        if law is not None:
            info["tv_pooled"] = dg.tv_distance(trs, law, cfg.burn_in)
        if len(trs) >= 2 and min(len(t) for t in trs) >= 10:
            rep = dg.psrf(dg.indicator_matrix(trs, S), f"{kind}: S={list(S)} in B")
            info["psrf"] = rep.psrf
            info["psrf_report"] = rep
            rows.append((min(len(t) for t in trs), f"{kind}.psrf", "all", rep.psrf))
        summary[kind] = info
    return rows, summary


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _manifest(cfg, model: Model, S, truth, truth_src, started, files, summary,
              complete: bool, error: Optional[str] = None) -> dict:
    streams = {kind: f"SeedSequence({cfg.seed}, spawn_key=(chain, {code}))"
               for code, kind in enumerate(KINDS, start=1)}
    streams["init"] = f"SeedSequence({cfg.seed}, spawn_key=(chain, 0))"
    return {
        "software": {"name": "zonodpp", "version": __version__, "backend": _backend.NAME,
                     "numpy": np.__version__},
        "config": cfg.as_dict(),
        "model": {"description": model.description, "r": model.target.r,
                  "n": model.target.n,
                  "weights": None if model.weights is None else model.weights.tolist()},
        "seeds": {"chain": cfg.seed, "tiling_objective": cfg.tiling_seed,
                  "base_measure": cfg.weight_seed, "graph": cfg.graph_seed,
                  "subset": cfg.subset_seed, "jitter": cfg.jitter_seed,
                  "streams": streams,
                  "tiling_objective_draw": f"default_rng({cfg.tiling_seed}).standard_normal(n)"},
        "subset": list(S),
        "truth": {"value": truth, "source": truth_src},
        "started": started,
        "finished": _now(),
        "complete": complete,
        "error": error,
        "files": files,
        "summary": {k: {kk: vv for kk, vv in v.items() if kk != "psrf_report"}
                    for k, v in summary.items()},
    }


def _law_or_none(cfg, model: Model):
    if dg.n_subsets(model.target.n, model.target.r) > cfg.enumeration_guard:
        return None
    return dg.enumerate_law(model.target.dpp, guard=cfg.enumeration_guard)


def cmd_run(cfg: runconfig.RunConfig) -> int:
    started = _now()
    model = build_model(cfg)
    law = _law_or_none(cfg, model)
    if law is None:
        log.warning("C(n, r) exceeds the enumeration guard; oracle metrics are disabled")
    S = _resolve_subset(cfg, model, law)
    truth, truth_src = _truth(cfg, model, law, S)
    out = Path(cfg.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    jobs = [(kind, c) for kind in cfg.samplers for c in range(cfg.chains)]
    traces: dict[str, list[ChainTrace]] = {kind: [] for kind in cfg.samplers}
    files: dict = {"traces": {kind: [] for kind in cfg.samplers}}
    complete, error = True, None
    try:
        if cfg.parallelism > 1:
            with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
                results = list(pool.map(_run_one, [cfg] * len(jobs), *zip(*jobs)))
        else:
            results = [_run_one(cfg, kind, c) for kind, c in jobs]
        for (kind, c), tr in zip(jobs, results):
            traces[kind].append(tr)
            complete &= tr.complete
    except KeyboardInterrupt:
        complete, error = False, "interrupted"
    except ZonoDppError as exc:
        complete, error = False, f"{type(exc).__name__}: {exc}"
    for kind, c in jobs:
        for p in _trace_paths(out, kind, c, cfg.trace_format):
            if p.exists():
                files["traces"][kind].append(str(p))
    rows, summary = [], {}
    if complete:
        rows, summary = _metrics(traces, S, truth, law, cfg)
        dg.write_metrics(out / "metrics.csv", rows)
        files["metrics"] = str(out / "metrics.csv")
        files["psrf"] = []
        for kind, info in summary.items():
            if "psrf_report" in info:
                p = out / f"psrf-{kind}.txt"
                p.write_text(info["psrf_report"].to_text())
                files["psrf"].append(str(p))
    files["manifest"] = str(out / "manifest.json")
    manifest = _manifest(cfg, model, S, truth, truth_src, started, files, summary,
                         complete, error)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    if not complete:
        print(f"run incomplete: {error}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"model: {model.description} (r={model.target.r}, n={model.target.n})")
    print(f"subset S={list(S)}  P(S in B)={truth:.6g} [{truth_src}]")
    for kind, info in summary.items():
        parts = [f"{kind}:", f"steps={sum(info['steps'])}",
                 f"acceptance={info['acceptance_rate']:.4f}", f"move={info['move_rate']:.4f}"]
        if "tv_pooled" in info:
            parts.append(f"tv={info['tv_pooled']:.4f}")
        if "median_rel_error" in info:
            parts.append(f"median_rel_error={info['median_rel_error']:.4f}")
        if "psrf" in info:
            parts.append(f"psrf={info['psrf']:.4f}")
        print("  ".join(parts))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(cfg: runconfig.RunConfig) -> int:
    model = build_model(cfg)
    r, n = model.target.r, model.target.n
    total = dg.n_subsets(n, r)
    print("ok")
    print(f"model: {model.description}")
    print(f"r = {r}")
    print(f"n = {n}")
    print(f"C(n, r) = {total}")
    print(f"samplers: {', '.join(cfg.samplers)}")
    print(f"seeds: chain={cfg.seed} tiling={cfg.tiling_seed} weights={cfg.weight_seed} "
          f"graph={cfg.graph_seed} subset={cfg.subset_seed}")
    if total > cfg.enumeration_guard:
        print(f"warning: C(n, r) = {total} exceeds the enumeration guard "
              f"{cfg.enumeration_guard}; oracle metrics are disabled")
    return EXIT_OK


def cmd_enumerate(cfg: runconfig.RunConfig, dest: Optional[str]) -> int:
    model = build_model(cfg)
    law = dg.enumerate_law(model.target.dpp, guard=cfg.enumeration_guard)
    lines = ["basis,probability"]
    lines += [f"{' '.join(map(str, B))},{p!r}" for B, p in zip(law.bases, law.probs.tolist())]
    text = "\n".join(lines) + "\n"
    if dest:
        Path(dest).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_psrf(run_dir: str, subset: Optional[str], sampler: Optional[str]) -> int:
    root = Path(run_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    S = manifest["subset"] if subset is None else [int(v) for v in subset.split(",")]
    n = manifest["model"]["n"]
    for kind, paths in manifest["files"]["traces"].items():
        if sampler and kind != sampler:
            continue
        paths = [p for p in paths if p.endswith(".csv")] or paths
        trs = [traceio.read_trace(_relocate(p, root), kind, n) for p in paths]
        if len(trs) < 2:
            print(f"{kind}: fewer than 2 chains, no psrf")
            continue
        sys.stdout.write(dg.psrf(dg.indicator_matrix(trs, S), f"{kind}: S={S} in B").to_text())
    return EXIT_OK


def _relocate(path: str, root: Path) -> Path:
    p = Path(path)
    return p if p.exists() else root / "traces" / p.name


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zonodpp", description="Projection DPP samplers")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, out_help="output directory"):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--chains", type=int, metavar="M")
        p.add_argument("--steps", type=int, metavar="N")
        p.add_argument("--seconds", type=float, metavar="T")
        p.add_argument("--sampler", metavar="NAME")
        p.add_argument("--out", metavar="DIR", help=out_help)
        p.add_argument("--parallelism", type=int, metavar="P")

    common(sub.add_parser("run", help="run samplers and write traces and metrics"))
    common(sub.add_parser("validate", help="check a config without running"))
    common(sub.add_parser("enumerate", help="dump the exact basis law as CSV"),
           out_help="output file (default stdout)")
    p = sub.add_parser("psrf", help="recompute PSRF from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--subset", metavar="I,J,K")
    p.add_argument("--sampler", metavar="NAME")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.verb == "psrf":
            return cmd_psrf(args.run_dir, args.subset, args.sampler)
        overrides = {k: getattr(args, k) for k in ("seed", "chains", "steps", "seconds",
                                                   "sampler", "parallelism")}
        if args.verb != "enumerate":
            overrides["out"] = args.out
        if args.verb == "enumerate" and args.steps is None and args.seconds is None:
            overrides["steps"] = 1  # budget is irrelevant here
        cfg = runconfig.load(args.config, overrides)
        if args.verb == "validate":
            return cmd_validate(cfg)
        if args.verb == "enumerate":
            return cmd_enumerate(cfg, args.out)
        return cmd_run(cfg)
    except (ConfigError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ZonoDppError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
