"""Bounded BMO norm of a series whose partial sums grow without bound."""
from dataclasses import dataclass, field

from nhmart.experiments import run_bmo_experiment

from _common import parse_config, save


@dataclass
class BmoConfig:
    Ns: list = field(default_factory=lambda: [5, 10, 20, 40])
    q: float = 2.0
    out_dir: str = "results"


def main():
    cfg = parse_config(BmoConfig, __doc__)
    save(run_bmo_experiment(cfg.Ns, q=cfg.q, r=cfg.q), cfg.out_dir, "bmo")


if __name__ == "__main__":
    main()
