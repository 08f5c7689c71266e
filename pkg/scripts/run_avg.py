"""Averaged square function against the H^p norm on the chain lattice, for growing n."""
from dataclasses import dataclass, field

from nhmart.experiments import AVG_CONVENTION, log2_slopes, run_avg_experiment

from _common import parse_config, save


@dataclass
class AvgConfig:
    ps: list = field(default_factory=lambda: [4.0, 4 / 3])
    ns: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    out_dir: str = "results"


def main():
    cfg = parse_config(AvgConfig, __doc__)
    print(f"# {AVG_CONVENTION}")
    rows = []
    for p in cfg.ps:
        part = run_avg_experiment(p, cfg.ns)
        ratios = [r.measured["ratio"] for r in part]
        print(f"# p={p:.4g} log2 slopes of lhs/rhs: {[round(s, 3) for s in log2_slopes(cfg.ns, ratios)]}")
        rows += part
    save(rows, cfg.out_dir, "avg")


if __name__ == "__main__":
    main()
