"""Run configuration: schema, defaults, dotted-path overrides and resolution."""

from __future__ import annotations

import copy
import json
import math
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .codes import code_by_name
from .errors import ConfigError
from .noise import DEFAULT_DURATIONS

EXPERIMENTS = ("prepare", "stabilize", "lifetime", "isthmus", "lossprobe", "charfunc", "sweep")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=False)


class CodeConfig(_Strict):
    name: Literal["gkp", "tesseract"] = "gkp"
    # None means "use the experiment's default"; resolution fills it in
    delta: Optional[float] = None

    @field_validator("delta")
    @classmethod
    def _delta_range(cls, v):
        if v is not None and not (0 < v < 1):
            raise ValueError(f"delta must lie in the open interval (0,1), got {v}")
        return v


class NoiseConfig(_Strict):
    kappa: float = Field(0.0, ge=0)
    kappa_phi: float = Field(0.0, ge=0)
    aux_T1: Optional[float] = Field(None, gt=0)
    aux_T2: Optional[float] = Field(None, gt=0)
    gate_durations: dict[str, float] = Field(default_factory=dict)

    @field_validator("gate_durations")
    @classmethod
    def _known_steps(cls, v):
        unknown = sorted(set(v) - set(DEFAULT_DURATIONS) - {"wait"})
        if unknown:
            raise ValueError(f"unknown gate kinds {unknown}; known: {sorted(DEFAULT_DURATIONS)}")
        if any(d < 0 for d in v.values()):
            raise ValueError("gate durations must be non-negative")
        return v

    @model_validator(mode="after")
    def _t2_bound(self):
        t1 = math.inf if self.aux_T1 is None else self.aux_T1
        if self.aux_T2 is not None and self.aux_T2 > 2 * t1:
            raise ValueError(f"aux_T2 = {self.aux_T2} violates aux_T2 <= 2*aux_T1 = {2 * t1}")
        return self


class PrepareConfig(_Strict):
    state: Literal["0", "1", "+", "-", "+i", "-i"] = "0"
    depth: int = Field(8, ge=0, le=10)
    budget: int = Field(4000, ge=1)
    restarts: int = Field(4, ge=1)
    f_target: float = Field(0.95, gt=0, le=1)


class StabilizeConfig(_Strict):
    rounds: int = Field(100, ge=1)


class LifetimeConfig(_Strict):
    rounds: int = Field(100, ge=7)
    pauli: Literal["X", "Z"] = "Z"
    shots: Optional[int] = Field(None, ge=1)
    control: bool = True
    fit_start: int = Field(5, ge=0)


class IsthmusConfig(_Strict):
    injection_round: int = Field(4, ge=0)
    window: int = Field(10, ge=1)
    fraction: float = Field(0.5, ge=0, le=1)
    shots: int = Field(5000, ge=2)


class LossprobeConfig(_Strict):
    loss_round: int = Field(2, ge=0)
    window: int = Field(4, ge=1)
    recovery_rounds: int = Field(20, ge=1)
    shots: int = Field(2000, ge=2)
    state: Literal["0", "1", "+", "-", "+i", "-i"] = "0"
    ensemble_kappa_t_round: float = Field(5e-3, gt=0)
    ensemble_shots: int = Field(1000, ge=2)
    ps_window: int = Field(3, ge=1)
    ps_threshold: int = Field(2, ge=1)


class CharfuncConfig(_Strict):
    state: Literal["0", "1", "+", "-", "+i", "-i"] = "0"
    extent: float = Field(4.0, gt=0)
    points: int = Field(41, ge=2, le=201)


class SweepConfig(_Strict):
    experiment: Literal["prepare", "stabilize", "lifetime", "isthmus", "lossprobe", "charfunc"] = "charfunc"
    parameter: str = "code.delta"
    values: list[Any] = Field(default_factory=list)


class RunConfig(_Strict):
    experiment: Literal["prepare", "stabilize", "lifetime", "isthmus", "lossprobe", "charfunc", "sweep"]
    seed: int = Field(..., ge=0)
    output: str = "."
    code: CodeConfig = Field(default_factory=CodeConfig)
    dims: Optional[list[int]] = None
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    prepare: PrepareConfig = Field(default_factory=PrepareConfig)
    stabilize: StabilizeConfig = Field(default_factory=StabilizeConfig)
    lifetime: LifetimeConfig = Field(default_factory=LifetimeConfig)
    isthmus: IsthmusConfig = Field(default_factory=IsthmusConfig)
    lossprobe: LossprobeConfig = Field(default_factory=LossprobeConfig)
    charfunc: CharfuncConfig = Field(default_factory=CharfuncConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @field_validator("dims")
    @classmethod
    def _dims(cls, v):
        if v is not None and any(d < 2 for d in v):
            raise ValueError("every mode dimension must be >= 2")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        n_modes = 1 if self.code.name == "gkp" else 2
        if self.dims is not None and len(self.dims) != n_modes:
            raise ValueError(f"dims has {len(self.dims)} entries but {self.code.name} has {n_modes} modes")
        if self.experiment == "sweep" and not self.sweep.values:
            raise ValueError("sweep.values must be non-empty")
        return self


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = "unknown key"
        lines.append(f"{path}: {msg}")
    return "; ".join(lines)


def _first_path(err: ValidationError) -> str:
    e = err.errors()[0]
    return ".".join(str(p) for p in e["loc"])


def resolve(cfg: RunConfig) -> RunConfig:
    """Fill experiment-dependent defaults (delta, Fock cutoffs)."""
    from .experiments import DEFAULT_DELTA, ISTHMUS_DELTA, default_truncation

    out = cfg.model_copy(deep=True)
    if out.experiment == "sweep":
        return out
    if out.code.delta is None:
        table = ISTHMUS_DELTA if out.experiment == "isthmus" else DEFAULT_DELTA
        out.code.delta = table[out.code.name]
    if out.dims is None:
        out.dims = list(default_truncation(code_by_name(out.code.name, out.code.delta)))
    return out


def validate_config(raw: dict | str) -> RunConfig:
    """Parse, validate and resolve a raw config; raises ConfigError with a dotted path."""
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "<root>") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("required (no entropy default)", "seed")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        err = ConfigError(_format_errors(exc))
        err.path = _first_path(exc)
        raise err from None
    return resolve(cfg)


def emit(cfg: RunConfig, include_output: bool = True) -> dict:
    d = cfg.model_dump(mode="json")
    if not include_output:
        d.pop("output")
    return d


def parse_value(text: str):
    """JSON literal if it parses, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(raw: dict, path: str, value) -> dict:
    """Return a copy of ``raw`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(raw)
    keys = path.split(".")
    if not all(keys):
        raise ConfigError(f"malformed parameter path {path!r}", path)
    node = out
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"{k} is not a section", path)
        node = nxt
    node[keys[-1]] = value
    return out


def check_path(path: str):
    """Raise ConfigError unless ``path`` names a field of RunConfig."""
    model = RunConfig
    for k in path.split("."):
        fields = getattr(model, "model_fields", None)
        if fields is None or k not in fields:
            raise ConfigError("unknown key", path)
        ann = fields[k].annotation
        if getattr(ann, "__origin__", None) is dict:
            return
        model = ann if isinstance(ann, type) and issubclass(ann, BaseModel) else None
