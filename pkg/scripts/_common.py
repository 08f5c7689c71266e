"""Shared plumbing: dataclass config <-> argparse, and writing result tables."""
import argparse
import dataclasses
from pathlib import Path

from nhmart.experiments import rows_to_csv


def parse_config(cls, description):
    ap = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, (list, tuple)):
            kind = type(default[0]) if default else float
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=kind, nargs="+", default=list(default))
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    return cls(**vars(ap.parse_args()))


def save(rows, out_dir, name):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(rows_to_csv(rows))
    print(rows_to_csv(rows), end="")
    print(f"wrote {path}")
