"""Recover 2-D item coordinates from a k-NN provider's lists, over several random clouds.

    python3 scripts/run_recovery.py --seeds 20 --cloud uniform
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, fields

import numpy as np

from userrec.provider import knn_provider
from userrec.recover import etp_pipeline


@dataclass
class Config:
    n: int = 200
    k: int = 10
    seeds: int = 20
    cloud: str = "uniform"


def parse() -> Config:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for f in fields(Config):
        p.add_argument(f"--{f.name}", type=type(f.default), default=f.default)
    return Config(**vars(p.parse_args()))


def cloud(kind: str, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.uniform(size=(n, 2))
    if kind == "gaussian":
        return rng.normal(size=(n, 2))
    raise SystemExit(f"unknown cloud {kind!r}")


def main() -> None:
    cfg = parse()
    rows = []
    print(f"{'seed':>4} {'spearman':>9} {'rmse/diam':>10}")
    for seed in range(cfg.seeds):
        x = cloud(cfg.cloud, cfg.n, seed)
        _, diag = etp_pipeline(knn_provider(x, cfg.k, standardize_features=False), 2, truth=x)
        rows.append((diag.spearman, diag.procrustes_rmse / diag.diameter))
        print(f"{seed:>4} {rows[-1][0]:>9.3f} {rows[-1][1]:>10.4f}")
    rho, ratio = np.array(rows).T
    print(f"spearman min {rho.min():.3f} mean {rho.mean():.3f}; rmse/diam max {ratio.max():.4f} mean {ratio.mean():.4f}")
    print(f"clouds with spearman >= 0.9 and rmse/diam <= 0.05: {int(((rho >= 0.9) & (ratio <= 0.05)).sum())}/{len(rows)}")


if __name__ == "__main__":
    main()
