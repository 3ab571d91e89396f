"""Fairness/accuracy trade-off on the biased synthetic benchmark.

    python3 scripts/run_tradeoff.py --out results/tradeoff.csv
"""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from userrec.bench import biased_benchmark
from userrec.evaluate import METHODS, make_method, sweep


@dataclass
class Config:
    n: int = 1000
    K: int = 10
    bias: float = 0.5
    n_tasks: int = 100
    bench_seed: int = 0
    taus: str = "0,1,2,3,4,5"
    seeds: str = "0,1,2"
    c: float = 0.01
    L: int = 10
    jobs: int = 1
    out: str = "results/tradeoff.csv"


def parse() -> Config:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for f in fields(Config):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default), default=f.default)
    return Config(**vars(p.parse_args()))


def main() -> None:
    cfg = parse()
    data = biased_benchmark(n=cfg.n, K=cfg.K, seed=cfg.bench_seed, bias=cfg.bias, n_tasks=cfg.n_tasks)
    methods = [make_method(m, c=cfg.c, L=cfg.L) if m == "privaterank" else make_method(m) for m in METHODS]
    taus = [int(t) for t in cfg.taus.split(",")]
    report = sweep(methods, taus, [data], seeds=[int(s) for s in cfg.seeds.split(",")], K=cfg.K, jobs=cfg.jobs)
    print(asdict(cfg))
    print(f"{'method':<12} {'tau':>3} {'least_ratio':>11} {'entropy':>8} {'precision':>9} {'accesses':>9}")
    for r in report.rows:
        acc = "-" if r.accesses is None else f"{r.accesses:.1f}"
        print(f"{r.method:<12} {r.tau:>3} {r.least_ratio:>11.3f} {r.entropy:>8.3f} {r.accuracy:>9.3f} {acc:>9}")
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_csv())
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
