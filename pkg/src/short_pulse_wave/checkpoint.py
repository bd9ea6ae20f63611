"""
Checkpoint files: a short plain-text header followed by the raw field.

Header lines are `key = value`, terminated by a line `END`. The payload is
phi as little-endian float64 in u-major, then u_bar, then theta order.
"""

import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from .evolve import FieldState
from .geometry import NullGrid, Resolution, build_grid
from .models import Symmetry

ORDERING = "u,u_bar,theta"
DTYPE = "<f8"


def save_checkpoint(state: FieldState, path: Union[str, Path]) -> Path:
    grid = state.grid
    header = {
        "u0": repr(grid.u0),
        "u_end": repr(grid.u_end),
        "delta": repr(grid.delta),
        "n_u": grid.n_u,
        "n_ub": grid.n_ub,
        "n_theta": grid.n_theta,
        "dim": grid.dim,
        "symmetry": grid.symmetry.value,
        "ordering": ORDERING,
        "dtype": DTYPE,
        "shape": ",".join(str(n) for n in grid.shape),
    }
    path = Path(path)
    try:
        with open(path, "wb") as f:
            for key, value in header.items():
                f.write(f"{key} = {value}\n".encode("ascii"))
            f.write(b"END\n")
            f.write(np.ascontiguousarray(state.values, dtype=DTYPE).tobytes())
    except OSError as e:
        raise OSError(f"cannot write checkpoint {path}: {e}") from e
    logging.info(f"Wrote checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[NullGrid, np.ndarray]:
    """Read a checkpoint back into its grid and the phi array."""
    header: Dict[str, str] = {}
    with open(path, "rb") as f:
        while True:
            line = f.readline()
            if not line:
                raise ValueError(f"{path}: header not terminated by END")
            line = line.decode("ascii").strip()
            if line == "END":
                break
            key, value = (part.strip() for part in line.split("=", 1))
            header[key] = value
        payload = f.read()

    assert header.get("ordering") == ORDERING, f"unsupported ordering in {path}"
    grid = build_grid(
        float(header["u0"]),
        float(header["u_end"]),
        float(header["delta"]),
        Resolution(int(header["n_u"]), int(header["n_ub"]), int(header["n_theta"])),
        int(header["dim"]),
        Symmetry(header["symmetry"]),
    )
    values = np.frombuffer(payload, dtype=header["dtype"]).reshape(grid.shape)
    return grid, values.copy()
