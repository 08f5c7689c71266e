"""Commutator [b, T] on the mixing construction as the smallest block shrinks."""
from dataclasses import dataclass, field

from nhmart.experiments import run_commutator_experiment

from _common import parse_config, save


@dataclass
class CommutatorConfig:
    deltas: list = field(default_factory=lambda: [1 / 4, 1 / 16, 1 / 64, 1 / 256])
    p: float = 2.0
    K: float = 10.0
    restarts: int = 32
    seed: int = 0
    out_dir: str = "results"


def main():
    cfg = parse_config(CommutatorConfig, __doc__)
    rows = run_commutator_experiment(cfg.deltas, cfg.p, K=cfg.K, restarts=cfg.restarts, seed=cfg.seed)
    save(rows, cfg.out_dir, f"commutator_p{cfg.p:g}")


if __name__ == "__main__":
    main()
