"""Growth of the averaged square function of g while f stays bounded, by depth."""
from dataclasses import dataclass, field

from nhmart.experiments import run_basis_experiment

from _common import parse_config, save


@dataclass
class BasisConfig:
    n: int = 16
    p: float = 4.0
    levels: list = field(default_factory=lambda: [1, 2, 4, 8])
    out_dir: str = "results"


def main():
    cfg = parse_config(BasisConfig, __doc__)
    save(run_basis_experiment(cfg.n, cfg.levels, cfg.p), cfg.out_dir, "basis")


if __name__ == "__main__":
    main()
