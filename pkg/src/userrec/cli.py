"""Command-line entry point: ``userrec {ingest,crawl,recommend,recover,sweep}``.

Every option can also come from a TOML file (``--config``) with one table per
subcommand, e.g. ``[sweep]``; keys use underscores. Flags override the file.

Exit codes: 0 ok, 1 I/O or data error, 2 usage error, 3 fairness constraint violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import Dataset, Task, biased_benchmark
from .core import FairnessConstraintError, FairnessParams
from .evaluate import METHODS, REPORT_SCHEMA, make_method, sweep
from .ingest import (DataError, k_core, leave_one_out, load_attributes, load_interactions, load_vectors,
                     popularity_attributes, write_attributes, write_interactions, write_remap, write_split,
                     write_vectors)
from .network import crawl, load_network, read_lists, row_normalize, save_network
from .provider import TableProvider, cosine_provider, dot_provider, knn_provider, with_meter
from .rank import PprParams, privaterank_recommend
from .recover import classical_mds, etp_pipeline, shortest_paths
from .walk import WalkParams, consul_recommend, privatewalk_recommend

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_DATA, EXIT_USAGE, EXIT_CONSTRAINT = 1, 2, 3

DEFAULTS = {
    "K": 10, "tau": 0, "c": 0.01, "L": 10, "L_max": None, "seed": 0, "provider": None,
    "n": 1000, "bias": 0.5, "bench_seed": 0, "n_tasks": 100, "k_core": None, "popularity_threshold": 50,
    "method": "consul", "methods": "provider,privaterank,privatewalk,consul,random_fair,oracle_fair",
    "taus": "0,1,2,3,4,5", "seeds": "0", "jobs": 1, "dim": 2, "split_seed": 0,
}


class UsageError(Exception):
    pass


def _atomic_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _ints(spec) -> list[int]:
    if isinstance(spec, (list, tuple)):
        return [int(x) for x in spec]
    if isinstance(spec, int):
        return [spec]
    return [int(x) for x in str(spec).split(",") if x.strip()]


def _provider_args(p):
    g = p.add_argument_group("provider")
    g.add_argument("--provider", choices=["knn", "cosine", "dot", "table", "biased"],
                   help="knn: --features; cosine: --interactions; dot: --embeddings; "
                        "table: --lists (src,dst,rank CSV); biased: synthetic benchmark")
    g.add_argument("--features")
    g.add_argument("--embeddings")
    g.add_argument("--interactions")
    g.add_argument("--lists")
    g.add_argument("--attributes", help="item,label CSV keyed by dense item id")
    g.add_argument("--K", type=int)
    g.add_argument("--n", type=int, help="items in the synthetic benchmark")
    g.add_argument("--bias", type=float, help="protected-item score penalty of the synthetic provider")
    g.add_argument("--bench-seed", dest="bench_seed", type=int)
    g.add_argument("--n-tasks", dest="n_tasks", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="userrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print version JSON and exit")
    parser.add_argument("--schema", action="store_true", help="print the report schema JSON and exit")
    parser.add_argument("--config", help="TOML config file")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="load interactions, k-core filter, attributes, leave-one-out split")
    p.add_argument("--interactions")
    p.add_argument("--k-core", dest="k_core", type=int)
    p.add_argument("--attributes", help="item,label CSV keyed by original item id")
    p.add_argument("--popularity-threshold", dest="popularity_threshold", type=int)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("crawl", help="query every item once and write the network as src,dst,rank")
    _provider_args(p)
    p.add_argument("--out")

    p = sub.add_parser("recommend", help="fair recommendation list for one source item")
    _provider_args(p)
    p.add_argument("--method", choices=["provider", "privaterank", "privatewalk", "consul", "random_fair",
                                        "oracle_fair"])
    p.add_argument("--source", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--L-max", dest="L_max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--history", help="comma-separated item ids already interacted with")
    p.add_argument("--out")

    p = sub.add_parser("recover", help="recover item coordinates from the recommendation network")
    _provider_args(p)
    p.add_argument("--network", help="src,dst,rank CSV instead of crawling a provider")
    p.add_argument("--dim", type=int)
    p.add_argument("--truth", help="ground-truth vectors CSV for diagnostics")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="tau sweep writing a trade-off report (CSV or JSON by extension)")
    _provider_args(p)
    p.add_argument("--labels", help="item,label CSV for same-label precision")
    p.add_argument("--methods")
    p.add_argument("--taus")
    p.add_argument("--seeds")
    p.add_argument("--c", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--pw-L-max", dest="pw_L_max", type=int)
    p.add_argument("--consul-L-max", dest="consul_L_max", type=int)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--popularity-threshold", dest="popularity_threshold", type=int,
                   help="cosine provider without --attributes: items with fewer interactions are protected")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    return parser


def _config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        cfg.update(data.get(args.command, {}))
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command", "version", "schema"):
            cfg[k] = v
    return cfg


def _need(cfg, key):
    if cfg.get(key) is None:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return cfg[key]


def build_provider(cfg):
    """Returns ``(provider, attrs or None, extras)`` for the configured provider kind."""
    kind = cfg.get("provider")
    K = int(cfg["K"])
    if kind is None:
        kind = "table" if cfg.get("lists") else None
    if kind == "biased":
        data = biased_benchmark(n=int(cfg["n"]), K=K, seed=int(cfg["bench_seed"]), bias=float(cfg["bias"]),
                                n_tasks=int(cfg["n_tasks"]))
        return data.provider, data.attrs, {"dataset": data}
    if kind == "knn":
        prov = knn_provider(load_vectors(_need(cfg, "features")), K)
    elif kind == "dot":
        prov = dot_provider(load_vectors(_need(cfg, "embeddings")), K)
    elif kind == "cosine":
        log = load_interactions(_need(cfg, "interactions"))
        prov = cosine_provider(log.matrix(), K)
    elif kind == "table":
        lists = read_lists(_need(cfg, "lists"))
        prov = TableProvider(lists, K=K)
    else:
        raise UsageError("choose a provider with --provider")
    attrs = load_attributes(cfg["attributes"]) if cfg.get("attributes") else None
    if attrs is not None and attrs.n_items != prov.n_items:
        raise DataError(f"attributes cover {attrs.n_items} items, provider has {prov.n_items}")
    return prov, attrs, {}


def cmd_ingest(cfg) -> int:
    out = Path(_need(cfg, "out"))
    log = load_interactions(_need(cfg, "interactions"))
    if cfg.get("k_core"):
        log = k_core(log, int(cfg["k_core"]))
        if log.empty:
            raise DataError(f"{cfg['k_core']}-core is empty")
    if cfg.get("attributes"):
        attrs = load_attributes(cfg["attributes"], log.item_labels)
    else:
        attrs = popularity_attributes(log, int(cfg["popularity_threshold"]))
    split = leave_one_out(log, seed=int(cfg["split_seed"]))
    write_interactions(out / "interactions.csv", log)
    write_remap(out / "users.csv", log.user_labels)
    write_remap(out / "items.csv", log.item_labels)
    write_attributes(out / "attributes.csv", attrs)
    write_split(out / "split.csv", split)
    print(json.dumps({"users": log.n_users, "items": log.n_items, "interactions": log.n_interactions}))
    return 0


def cmd_crawl(cfg) -> int:
    prov, _, _ = build_provider(cfg)
    oracle, meter = with_meter(prov)
    net = crawl(oracle)
    save_network(net, _need(cfg, "out"))
    print(json.dumps({"items": net.n, "edges": net.n_edges, "accesses": meter.distinct,
                      "short_rows": len(net.short_rows)}))
    return 0


def cmd_recommend(cfg) -> int:
    prov, attrs, _ = build_provider(cfg)
    if attrs is None:
        raise UsageError("missing required option --attributes")
    source = int(_need(cfg, "source"))
    history = frozenset(_ints(cfg.get("history") or ""))
    params = FairnessParams.for_attributes(int(cfg["K"]), int(cfg["tau"]), attrs)
    method = cfg["method"]
    seed = int(cfg["seed"])
    oracle, meter = with_meter(prov.with_history(history))
    if method == "privaterank":
        net = row_normalize(crawl(oracle))
        items = privaterank_recommend(net, source, attrs, params, PprParams(float(cfg["c"]), int(cfg["L"])), history)
    elif method in ("privatewalk", "consul"):
        func = privatewalk_recommend if method == "privatewalk" else consul_recommend
        L_max = cfg.get("L_max") or (100 if method == "privatewalk" else 10)
        items = func(oracle, source, attrs, params, WalkParams(int(L_max), seed), history)
    else:
        data = Dataset("cli", prov, attrs, [Task(source, history)])
        items = make_method(method)(data, data.tasks[0], params, seed).items
    result = {"method": method, "source": source, "tau": params.tau, "K": params.K, "items": [int(i) for i in items],
              "accesses": meter.distinct}
    text = json.dumps(result) + "\n"
    if cfg.get("out"):
        _atomic_text(cfg["out"], text)
    sys.stdout.write(text)
    return 0


def cmd_recover(cfg) -> int:
    d = int(cfg["dim"])
    truth = load_vectors(cfg["truth"]) if cfg.get("truth") else None
    if cfg.get("network"):
        dist = shortest_paths(load_network(cfg["network"]))
        emb = classical_mds(dist, d)
        info = {"items": len(emb.coords)}
    else:
        prov, _, extra = build_provider(cfg)
        if truth is None and "dataset" in extra:
            truth = extra["dataset"].coords
        emb, diag = etp_pipeline(prov, d, truth=truth)
        info = {"items": len(emb.coords), "spearman": diag.spearman, "procrustes_rmse": diag.procrustes_rmse,
                "diameter": diag.diameter}
    write_vectors(_need(cfg, "out"), emb.coords)
    print(json.dumps(info))
    return 0


def build_dataset(cfg) -> Dataset:
    prov, attrs, extra = build_provider(cfg)
    if "dataset" in extra:
        return extra["dataset"]
    if attrs is None and cfg.get("provider") == "cosine":
        log = load_interactions(cfg["interactions"])
        attrs = popularity_attributes(log, int(cfg["popularity_threshold"]))
    if attrs is None:
        raise UsageError("missing required option --attributes")
    labels = None
    if cfg.get("labels"):
        labels = load_attributes(cfg["labels"]).codes
        tasks = [Task(i) for i in range(prov.n_items)]
    elif cfg.get("interactions"):
        split = leave_one_out(load_interactions(cfg["interactions"]), seed=int(cfg["split_seed"]))
        tasks = [Task(int(s), split.history[int(u)], int(p))
                 for u, s, p in zip(split.users, split.sources, split.positives)]
    else:
        raise UsageError("sweep needs --labels or --interactions to score recommendations")
    name = Path(cfg.get("interactions") or cfg.get("features") or cfg.get("embeddings") or "data").stem
    return Dataset(name, prov, attrs, tasks, labels=labels)


def cmd_sweep(cfg) -> int:
    data = build_dataset(cfg)
    methods = []
    for name in [m.strip() for m in str(cfg["methods"]).split(",") if m.strip()]:
        if name not in METHODS:
            raise UsageError(f"unknown method {name!r}")
        if name == "privaterank":
            methods.append(make_method(name, c=float(cfg["c"]), L=int(cfg["L"])))
        elif name == "privatewalk" and cfg.get("pw_L_max"):
            methods.append(make_method(name, L_max=int(cfg["pw_L_max"])))
        elif name == "consul" and cfg.get("consul_L_max"):
            methods.append(make_method(name, L_max=int(cfg["consul_L_max"])))
        else:
            methods.append(make_method(name))
    taus = _ints(cfg["taus"])
    for t in taus:
        FairnessParams.for_attributes(int(cfg["K"]), t, data.attrs)
    report = sweep(methods, taus, [data], seeds=_ints(cfg["seeds"]), K=int(cfg["K"]), jobs=int(cfg["jobs"]))
    out = _need(cfg, "out")
    text = report.to_json() if str(out).endswith(".json") else report.to_csv()
    _atomic_text(out, text)
    failed = [r for r in report.rows if r.error]
    print(json.dumps({"rows": len(report.rows), "failed": len(failed), "out": str(out)}))
    return 0


COMMANDS = {"ingest": cmd_ingest, "crawl": cmd_crawl, "recommend": cmd_recommend, "recover": cmd_recover,
            "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.version:
        print(json.dumps({"name": "userrec", "version": __version__}))
        return 0
    if args.schema:
        print(json.dumps(REPORT_SCHEMA, indent=2))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _config(args)
        np.seterr(all="ignore")
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except FairnessConstraintError as exc:
        print(json.dumps({"error": "constraint", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONSTRAINT
    except (OSError, DataError, ValueError, KeyError, TypeError, tomllib.TOMLDecodeError) as exc:
        print(json.dumps({"error": "data", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
