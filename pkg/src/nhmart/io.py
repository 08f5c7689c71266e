"""JSON and CSV interchange for functions, sequences, transforms and dense operators.

Files refer to their lattice by a path, resolved relative to the referring file.
Node keys are the ids from the lattice file, not positions.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import NhmartError
from .gspace import CoefSequence
from .lattice import Lattice, load_lattice
from .linop import LinearOp
from .mfunc import MartDecomp, StepFunction
from .paraprod import TransformBlocks


def _read(path) -> tuple[dict, Path]:
    path = Path(path)
    with path.open() as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "lattice" not in data:
        raise NhmartError(f"{path}: expected an object with a 'lattice' field")
    return data, path.parent


def _lattice_for(data: dict, base: Path) -> Lattice:
    return load_lattice(base / data["lattice"])


def read_function(path) -> StepFunction:
    data, base = _read(path)
    lat = _lattice_for(data, base)
    return StepFunction(lat, np.asarray(data["leaf_values"], dtype=float))


def read_sequence(path) -> CoefSequence:
    data, base = _read(path)
    lat = _lattice_for(data, base)
    return CoefSequence(lat, {lat.index(int(k)): float(v) for k, v in data["entries"].items()})


def read_transform(path) -> TransformBlocks:
    """{"lattice": path, "blocks": {"id": scalar | square matrix in child order}}."""
    data, base = _read(path)
    lat = _lattice_for(data, base)
    return TransformBlocks(lat, {lat.index(int(k)): np.asarray(v, dtype=float)
                                 for k, v in data["blocks"].items()})


def decomposition_to_dict(d: MartDecomp) -> dict:
    lat = d.lattice
    ids = lat.ids
    return {
        "root_averages": {str(int(ids[r])): float(d.coefs[r]) for r in lat.roots},
        "differences": {str(int(ids[i])): d.coefs[lat.children[i]].tolist() for i in lat.internal},
    }


def write_function(path, f: StepFunction, lattice_path) -> None:
    path = Path(path)
    rel = os.path.relpath(Path(lattice_path).resolve(), path.parent.resolve())
    path.write_text(json.dumps({"lattice": rel, "leaf_values": f.values.tolist()}))


def write_matrix_csv(path, op: LinearOp) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in op.matrix:
            writer.writerow([repr(float(x)) for x in row])


def read_matrix_csv(path, lat: Lattice) -> LinearOp:
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    return LinearOp(lat, mat)
