"""Problem statement and its JSON round trip.

A FlowProblem pins everything a run needs: grid, regularity index, initial
condition and amplitude, complex-disk radius and order, tolerances, step
counts, seed, output directory. The JSON config schema mirrors the field
names one-to-one.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ValidationError
from .flows import initial_condition, validate_initial
from .spectral import DEFAULT_SOBOLEV_INDEX, GridSpec, SpectralField


@dataclass(frozen=True)
class FlowProblem:
    grid: GridSpec = field(default_factory=lambda: GridSpec(16))
    s: float = DEFAULT_SOBOLEV_INDEX
    initial: str = "taylor_green"
    initial_params: dict = field(default_factory=dict)
    amplitude: float = 0.1
    rho: float = 0.1
    order: int = 8
    solver_tol: float = 1e-10
    report_solver_tol: float = 1e-12
    picard_tol: float = 1e-10
    chart_tol: float = 1e-12
    max_iter: int = 200
    max_sweeps: int | None = None
    dt: float = 0.01
    ray_steps: int = 200
    ray_angles: int = 16
    monodromy_steps: int = 400
    seed: int = 1234
    out_dir: str = "out"

    def initial_velocity(self, validate: bool = True) -> SpectralField:
        """Scaled initial velocity; admission-checked unless disabled."""
        params = dict(self.initial_params)
        params.setdefault("seed", self.seed)
        u0 = initial_condition(self.grid, self.initial, params) * self.amplitude
        if validate:
            validate_initial(u0, band_limit=max(1, self.grid.n // 8), s=self.s)
        return u0

    def with_overrides(self, **kwargs) -> "FlowProblem":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"n": self.grid.n, "dealias_fraction": self.grid.dealias_fraction}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "FlowProblem":
        data = dict(data)
        grid_spec = data.pop("grid", {})
        if isinstance(grid_spec, dict):
            grid = GridSpec(
                int(grid_spec.get("n", 16)),
                float(grid_spec.get("dealias_fraction", 2.0 / 3.0)),
            )
        else:
            grid = GridSpec(int(grid_spec))
        known = {f for f in cls.__dataclass_fields__ if f != "grid"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(grid=grid, **data)

    @classmethod
    def from_json(cls, path) -> "FlowProblem":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)
