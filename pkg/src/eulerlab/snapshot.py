"""Field snapshot files: flat little-endian binary plus a JSON sidecar.

Layout of ``<base>.bin``: 64-bit floats, real/imaginary interleaved
(i.e. little-endian complex128), index order (component, k1, k2, k3) in the
FFT mode layout used throughout the package. ``<base>.json`` holds the
descriptor {n, rank, hermitian, dealias_fraction}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .spectral import SCALAR, GridSpec, SpectralField

_DTYPE = np.dtype("<c16")


def save_field(f: SpectralField, base) -> Path:
    """Write ``<base>.bin`` + ``<base>.json``; returns the binary path."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    bin_path = base.with_suffix(".bin")
    bin_path.write_bytes(np.ascontiguousarray(f.coeffs, dtype=_DTYPE).tobytes())
    descriptor = {
        "n": f.grid.n,
        "rank": f.rank,
        "hermitian": f.hermitian,
        "dealias_fraction": f.grid.dealias_fraction,
    }
    base.with_suffix(".json").write_text(json.dumps(descriptor, indent=2))
    return bin_path


def load_field(base) -> SpectralField:
    """Read a snapshot written by :func:`save_field`, verifying its shape."""
    base = Path(base)
    try:
        descriptor = json.loads(base.with_suffix(".json").read_text())
        n = int(descriptor["n"])
        rank = descriptor["rank"]
        hermitian = bool(descriptor["hermitian"])
        fraction = float(descriptor["dealias_fraction"])
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad snapshot descriptor for {base}: {exc}") from exc
    grid = GridSpec(n, fraction)
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype=_DTYPE)
    ncomp = 1 if rank == SCALAR else 3
    if raw.size != ncomp * n**3:
        raise ValidationError(
            f"snapshot payload has {raw.size} coefficients, expected {ncomp * n**3}"
        )
    shape = (n, n, n) if rank == SCALAR else (3, n, n, n)
    field = SpectralField(grid, raw.astype(np.complex128).reshape(shape), hermitian)
    if hermitian and field.hermitian_defect() > 1e-13:
        raise ValidationError(
            "snapshot declares a real-valued field but coefficients break "
            "Hermitian symmetry"
        )
    return field
