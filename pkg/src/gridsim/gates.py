"""Gate-step data types, circuits and outcome traces."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict, replace
from typing import Sequence, Union

from .fock import SpaceLayout
from .errors import LayoutMismatchError


def _pairs(v):
    return [[complex(a).real, complex(a).imag] for a in v]


def _unpairs(p):
    return tuple(complex(re, im) for re, im in p)


def _check_duration(d):
    if d is not None and (d < 0 or not math.isfinite(d)):
        raise ValueError(f"duration must be finite and >= 0, got {d}")


@dataclass(frozen=True)
class AuxRotation:
    """exp(-i theta/2 (cos phi sx + sin phi sy)) on the auxiliary."""

    theta: float
    phi: float
    duration: float | None = None
    kind = "aux_rotation"

    def __post_init__(self):
        _check_duration(self.duration)


@dataclass(frozen=True)
class Ecd:
    betas: tuple[complex, ...]
    duration: float | None = None
    kind = "ecd"

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(complex(b) for b in self.betas))
        _check_duration(self.duration)


@dataclass(frozen=True)
class CondDisplacement:
    """Un-echoed conditional displacement D(b/2)|g><g| + D(-b/2)|e><e|.

    Only produced when an ECD is split for error injection.
    """

    betas: tuple[complex, ...]
    duration: float | None = None
    kind = "cond_displacement"

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(complex(b) for b in self.betas))
        _check_duration(self.duration)


@dataclass(frozen=True)
class Displacement:
    alphas: tuple[complex, ...]
    duration: float | None = None
    kind = "displacement"

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))
        _check_duration(self.duration)


@dataclass(frozen=True)
class AuxMeasureReset:
    """Z measurement of the auxiliary followed by an ideal reset to |g>.

    ``invert`` relabels the recorded bit (used for frame sign bookkeeping).
    """

    label: str = ""
    invert: bool = False
    duration: float | None = None
    kind = "measure_reset"

    def __post_init__(self):
        _check_duration(self.duration)


@dataclass(frozen=True)
class Wait:
    duration: float = 0.0
    kind = "wait"

    def __post_init__(self):
        _check_duration(self.duration)


@dataclass(frozen=True)
class ForcedJump:
    """Deterministic quantum jump: ``aux_decay`` (sigma_minus) or ``photon_loss`` (a on ``mode``).

    The post-jump state is renormalized. Zero duration.
    """

    jump: str = "aux_decay"
    mode: int = 0
    kind = "forced_jump"
    duration: float | None = 0.0

    def __post_init__(self):
        if self.jump not in ("aux_decay", "photon_loss"):
            raise ValueError(f"unknown jump {self.jump!r}")


GateStep = Union[AuxRotation, Ecd, CondDisplacement, Displacement, AuxMeasureReset, Wait, ForcedJump]

_STEP_TYPES = {
    cls.kind: cls for cls in (AuxRotation, Ecd, CondDisplacement, Displacement, AuxMeasureReset, Wait, ForcedJump)
}


def step_to_dict(step: GateStep) -> dict:
    d = {"kind": step.kind}
    for k, v in asdict(step).items():
        if k in ("betas", "alphas"):
            v = _pairs(v)
        d[k] = v
    return d


def step_from_dict(d: dict) -> GateStep:
    d = dict(d)
    cls = _STEP_TYPES[d.pop("kind")]
    for k in ("betas", "alphas"):
        if k in d:
            d[k] = _unpairs(d[k])
    return cls(**d)


@dataclass(frozen=True)
class Circuit:
    layout: SpaceLayout
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        n = self.layout.n_modes
        for s in self.steps:
            vec = getattr(s, "betas", None) or getattr(s, "alphas", None)
            if vec is not None and len(vec) != n:
                raise LayoutMismatchError(f"{s.kind} step has {len(vec)} amplitudes, layout has {n} modes")
            if isinstance(s, (AuxRotation, Ecd, CondDisplacement, AuxMeasureReset, ForcedJump)):
                if s.kind == "forced_jump" and s.jump == "photon_loss":
                    continue
                if not self.layout.has_aux:
                    raise LayoutMismatchError(f"{s.kind} step needs an auxiliary subsystem")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.layout != self.layout:
            raise LayoutMismatchError("cannot concatenate circuits on different layouts")
        return Circuit(self.layout, self.steps + other.steps)

    def __len__(self):
        return len(self.steps)

    def ecd_count(self) -> int:
        return sum(isinstance(s, Ecd) for s in self.steps)

    def replace_step(self, index: int, *new_steps) -> "Circuit":
        steps = list(self.steps)
        steps[index : index + 1] = new_steps
        return Circuit(self.layout, steps)

    def with_invert(self, flip: bool) -> "Circuit":
        """Toggle the relabel flag of every measurement when ``flip`` is set."""
        if not flip:
            return self
        return Circuit(
            self.layout,
            [replace(s, invert=not s.invert) if isinstance(s, AuxMeasureReset) else s for s in self.steps],
        )

    def to_dict(self) -> dict:
        return {"layout": self.layout.to_dict(), "steps": [step_to_dict(s) for s in self.steps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        layout = SpaceLayout(tuple(d["layout"]["mode_dims"]), d["layout"]["has_aux"])
        return cls(layout, tuple(step_from_dict(s) for s in d["steps"]))

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TraceEntry:
    round_index: int
    stabilizer_label: str
    outcome: int
    injected_error: str = ""


@dataclass
class SbsTrace:
    """Ordered per-round outcome record of one run."""

    entries: list[TraceEntry] = field(default_factory=list)
    # density-matrix runs record (round, label, P(outcome 1)) instead of bits
    averaged: list[tuple[int, str, float]] = field(default_factory=list)

    def append(self, round_index: int, label: str, outcome: int, injected_error: str = ""):
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome}")
        if self.entries and round_index <= self.entries[-1].round_index:
            raise ValueError("round indices must be strictly increasing")
        self.entries.append(TraceEntry(int(round_index), label, int(outcome), injected_error))

    def extend(self, other: "SbsTrace"):
        for e in other.entries:
            self.append(e.round_index, e.stabilizer_label, e.outcome, e.injected_error)

    @property
    def outcomes(self) -> list[int]:
        return [e.outcome for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "stabilizer_label", "outcome", "injected_error"])
        for e in self.entries:
            w.writerow([e.round_index, e.stabilizer_label, e.outcome, e.injected_error])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SbsTrace":
        t = cls()
        for row in csv.DictReader(io.StringIO(text)):
            t.append(int(row["round"]), row["stabilizer_label"], int(row["outcome"]), row["injected_error"])
        return t

    def to_json(self) -> str:
        return json.dumps([asdict(e) for e in self.entries])

    @classmethod
    def from_json(cls, text: str) -> "SbsTrace":
        t = cls()
        for e in json.loads(text):
            t.append(e["round_index"], e["stabilizer_label"], e["outcome"], e.get("injected_error", ""))
        return t


def flatten(circuits: Sequence[Circuit]) -> Circuit:
    if not circuits:
        raise ValueError("need at least one circuit")
    out = circuits[0]
    for c in circuits[1:]:
        out = out + c
    return out
