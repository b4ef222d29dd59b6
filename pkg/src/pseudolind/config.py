"""JSON run configuration with strict validation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .bath import BathSpec, OhmicDrude
from .hpz import HPZCoefficients
from .hubbard import HubbardSpec

COMMANDS = ("optimize", "evolve", "plqt", "rates", "hpz-check")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class HubbardSystem(_Strict):
    kind: Literal["hubbard"] = "hubbard"
    sites: PositiveInt = 4
    particles: int = Field(2, ge=0)
    tunneling: PositiveFloat = 1.0
    interaction: float = 1.0
    boundary: Literal["periodic", "open"] = "periodic"
    gamma: float = Field(0.25, ge=0)
    initial_occupation: tuple[int, ...] = (0, 2)

    @model_validator(mode="after")
    def _sector(self):
        if self.particles > self.sites:
            raise ValueError("particles must not exceed sites")
        occ = set(self.initial_occupation)
        if len(occ) != self.particles or not all(0 <= i < self.sites for i in occ):
            raise ValueError("initial_occupation must list `particles` distinct sites")
        return self

    def spec(self, bath: BathSpec) -> HubbardSpec:
        return HubbardSpec(self.sites, self.particles, self.tunneling, self.interaction, self.boundary, self.gamma, bath)


class HPZSystem(_Strict):
    kind: Literal["hpz"] = "hpz"
    dim: int = Field(30, ge=2)
    mass: PositiveFloat = 1.0
    omega: PositiveFloat = 1.0
    gamma: PositiveFloat = 0.1
    time: float = 0.0

    def coefficients(self, beta: float) -> HPZCoefficients:
        return HPZCoefficients.brownian(self.gamma, beta, self.mass, self.omega)


class BathConfig(_Strict):
    model: Literal["ohmic_drude"] = "ohmic_drude"
    cutoff: PositiveFloat = 1.0
    beta: PositiveFloat = 10.0
    coupling: PositiveFloat = 1.0

    def spec(self) -> BathSpec:
        return BathSpec(OhmicDrude(self.cutoff), self.beta, self.coupling)


class RunSettings(_Strict):
    t_max: PositiveFloat = 30.0
    dt: PositiveFloat = 0.01
    output_every: PositiveFloat = 0.1
    n_trajectories: PositiveInt = 10_000
    master_seed: int = Field(0, ge=0, lt=2**64)
    channel_mode: Literal["full", "real_part_only"] = "full"
    include_lamb_shift: bool = True
    optimize: bool = True
    truncated_gksl: bool = False
    n_ladder: tuple[PositiveInt, ...] = (100, 1000, 10_000)
    threads: PositiveInt = 1

    @model_validator(mode="after")
    def _grid(self):
        ratio = self.output_every / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("output_every must be a multiple of dt")
        if self.output_every > self.t_max:
            raise ValueError("output_every exceeds t_max")
        return self


class OutputSettings(_Strict):
    directory: str = "out"
    formats: tuple[Literal["csv", "json", "png"], ...] = ("csv", "json")


class RunConfig(_Strict):
    mode: Literal["optimize", "evolve", "plqt", "rates", "hpz-check"] | None = None
    system: Union[HubbardSystem, HPZSystem] = Field(default_factory=HubbardSystem, discriminator="kind")
    bath: BathConfig = Field(default_factory=BathConfig)
    run: RunSettings = Field(default_factory=RunSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config; every problem is reported with its field path."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        lines = [f"  {'.'.join(str(x) for x in e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid configuration:\n" + "\n".join(lines)) from exc
