"""Distinct provider pages touched per query by each fair recommender.

    python3 scripts/run_access.py --tau 5 --seeds 100
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, fields

import numpy as np

from userrec.bench import biased_benchmark
from userrec.core import FairnessParams
from userrec.network import crawl
from userrec.provider import with_meter
from userrec.walk import WalkParams, consul_recommend, privatewalk_recommend


@dataclass
class Config:
    n: int = 1000
    K: int = 10
    tau: int = 5
    bias: float = 0.5
    seeds: int = 100
    pw_L_max: int = 100
    consul_L_max: int = 10


def parse() -> Config:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for f in fields(Config):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default), default=f.default)
    return Config(**vars(p.parse_args()))


def main() -> None:
    cfg = parse()
    data = biased_benchmark(n=cfg.n, K=cfg.K, bias=cfg.bias, n_tasks=cfg.seeds)
    params = FairnessParams.for_attributes(cfg.K, cfg.tau, data.attrs)
    counts = {"consul": [], "privatewalk": []}
    for seed, task in enumerate(data.tasks):
        for name, func, L_max in (("consul", consul_recommend, cfg.consul_L_max),
                                  ("privatewalk", privatewalk_recommend, cfg.pw_L_max)):
            oracle, meter = with_meter(data.provider)
            func(oracle, task.source, data.attrs, params, WalkParams(L_max, seed),
                 rng=np.random.default_rng([seed, task.source]))
            counts[name].append(meter.distinct)
    oracle, meter = with_meter(data.provider)
    crawl(oracle)
    print(f"n={cfg.n} K={cfg.K} tau={cfg.tau} runs={len(data.tasks)}")
    for name, xs in counts.items():
        print(f"{name:<12} mean {np.mean(xs):7.2f}  median {np.median(xs):6.1f}  max {max(xs)}")
    print(f"{'privaterank':<12} crawl {meter.distinct}")
    print(f"privatewalk / consul = {np.mean(counts['privatewalk']) / np.mean(counts['consul']):.1f}x")


if __name__ == "__main__":
    main()
