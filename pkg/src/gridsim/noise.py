"""Physical noise channels and targeted error injection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import LayoutMismatchError, MeasurementUnderflowError
from .fock import DensityMatrix, QuantumState, SpaceLayout, SIGMA_MINUS, SIGMA_Z
from .gates import AuxRotation, CondDisplacement, Circuit, Displacement, Ecd, ForcedJump
from .kernels import apply_local, sandwich

DEFAULT_DURATIONS = {
    "aux_rotation": 10e-9,
    "displacement": 10e-9,
    "ecd": 300e-9,
    "cond_displacement": 300e-9,
    "measure_reset": 400e-9,
    "forced_jump": 0.0,
}

KRAUS_TAIL = 1e-10


@dataclass(frozen=True)
class NoiseModel:
    """Rates in 1/s, times in seconds. ``None`` for aux_T1/aux_T2 means no decay."""

    kappa: float = 0.0
    kappa_phi: float = 0.0
    aux_T1: float | None = None
    aux_T2: float | None = None
    gate_durations: dict = field(default_factory=lambda: dict(DEFAULT_DURATIONS))

    def __post_init__(self):
        if self.kappa < 0 or self.kappa_phi < 0:
            raise ValueError("noise rates must be non-negative")
        t1 = math.inf if self.aux_T1 is None else self.aux_T1
        t2 = math.inf if self.aux_T2 is None else self.aux_T2
        if t1 <= 0 or t2 <= 0:
            raise ValueError("aux_T1 and aux_T2 must be positive")
        if t2 > 2 * t1:
            raise ValueError(f"aux_T2 = {t2} exceeds 2*aux_T1 = {2 * t1}")
        merged = dict(DEFAULT_DURATIONS)
        merged.update(self.gate_durations)
        if any(v < 0 for v in merged.values()):
            raise ValueError("gate durations must be non-negative")
        object.__setattr__(self, "gate_durations", merged)

    @property
    def is_noiseless(self) -> bool:
        return self.kappa == 0 and self.kappa_phi == 0 and self.aux_T1 is None and self.aux_T2 is None

    def duration_of(self, step) -> float:
        if step.duration is not None:
            return float(step.duration)
        return float(self.gate_durations.get(step.kind, 0.0))

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "kappa_phi": self.kappa_phi,
            "aux_T1": self.aux_T1,
            "aux_T2": self.aux_T2,
            "gate_durations": dict(sorted(self.gate_durations.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        return cls.from_dict(json.loads(text))


def default_durations() -> dict:
    return dict(DEFAULT_DURATIONS)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Kraus operators acting on a single subsystem of ``layout``."""

    ops: tuple
    subsystem: int
    layout: SpaceLayout
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.ops)
        d = self.layout.mode_dims[self.subsystem]
        if any(k.shape != (d, d) for k in ops):
            raise LayoutMismatchError(f"Kraus operators must be {d}x{d}")
        object.__setattr__(self, "ops", ops)

    def completeness_error(self) -> float:
        s = sum(k.conj().T @ k for k in self.ops)
        return float(np.max(np.abs(s - np.eye(s.shape[0]))))

    @property
    def is_identity(self) -> bool:
        return len(self.ops) == 1 and np.allclose(self.ops[0], np.eye(self.ops[0].shape[0]), atol=0, rtol=0)


def _check_mode(layout: SpaceLayout, mode: int):
    if not 0 <= mode < layout.n_modes:
        raise IndexError(f"mode {mode} is not an oscillator of {layout.mode_dims}")


def loss_channel(kappa_t: float, layout: SpaceLayout, mode: int = 0) -> KrausSet:
    """Amplitude damping with gamma = 1 - exp(-kappa t); the k-photon-loss Kraus operators.

    K_k |n> = sqrt(C(n,k) (1-gamma)^(n-k) gamma^k) |n-k>. The set stops at the first k
    for which every level has lost less than 1e-10 of its weight.
    """
    if kappa_t < 0:
        raise ValueError("kappa_t must be non-negative")
    _check_mode(layout, mode)
    dim = layout.mode_dims[mode]
    if kappa_t == 0:
        return KrausSet((np.eye(dim),), mode, layout, "loss")
    gamma = -math.expm1(-kappa_t)
    n = np.arange(dim)
    ops = []
    covered = np.zeros(dim)
    for k in range(dim):
        nk = n[k:]
        logw = gammaln(nk + 1) - gammaln(k + 1) - gammaln(nk - k + 1) + k * math.log(gamma)
        if gamma < 1:
            logw = logw + (nk - k) * math.log1p(-gamma)
        else:
            logw = np.where(nk == k, logw, -np.inf)
        w = np.exp(logw)
        op = np.zeros((dim, dim))
        op[n[: dim - k], nk] = np.sqrt(w)
        ops.append(op)
        covered[k:] += w
        if np.max(1.0 - covered) < KRAUS_TAIL:
            break
    return KrausSet(tuple(ops), mode, layout, "loss")


def dephasing_channel(kappa_phi_t: float, layout: SpaceLayout, mode: int = 0, cutoff: float = 1e-15) -> KrausSet:
    """Gaussian phase diffusion: rho_nm -> rho_nm exp(-kappa_phi t (n-m)^2 / 2).

    This is the average of exp(i theta n) over theta ~ N(0, kappa_phi t). The
    coherence matrix is positive semidefinite, so its eigenvectors give an exact
    diagonal Kraus set.
    """
    if kappa_phi_t < 0:
        raise ValueError("kappa_phi_t must be non-negative")
    _check_mode(layout, mode)
    dim = layout.mode_dims[mode]
    if kappa_phi_t == 0:
        return KrausSet((np.eye(dim),), mode, layout, "dephasing")
    n = np.arange(dim)
    c = np.exp(-kappa_phi_t * (n[:, None] - n[None, :]) ** 2 / 2)
    lam, vecs = np.linalg.eigh(c)
    keep = lam > cutoff * lam[-1]
    ops = [np.diag(math.sqrt(l) * vecs[:, j]) for j, l in zip(np.nonzero(keep)[0], lam[keep])]
    # Re-weight so diag(sum K^dag K) is exactly one after the cutoff.
    norm = np.sqrt(sum(np.abs(np.diag(k)) ** 2 for k in ops))
    ops = [k / norm[:, None] for k in ops]
    return KrausSet(tuple(ops[::-1]), mode, layout, "dephasing")


def aux_decay_channels(T1: float | None, T2: float | None, t: float, layout: SpaceLayout) -> KrausSet:
    """Amplitude damping p = 1 - exp(-t/T1) followed by pure dephasing so coherences decay as exp(-t/T2)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    t1 = math.inf if T1 is None else T1
    t2 = math.inf if T2 is None else T2
    if t2 > 2 * t1:
        raise ValueError(f"T2 = {t2} exceeds 2*T1 = {2 * t1}")
    aux = layout.aux_index
    p = -math.expm1(-t / t1) if math.isfinite(t1) else 0.0
    rate_phi = 1 / t2 - 1 / (2 * t1)
    lam = math.exp(-t * rate_phi) if rate_phi > 0 else 1.0
    damp = [np.diag([1.0, math.sqrt(1 - p)]).astype(complex), math.sqrt(p) * SIGMA_MINUS]
    deph = [math.sqrt((1 + lam) / 2) * np.eye(2), math.sqrt((1 - lam) / 2) * SIGMA_Z]
    ops = [d @ a for d in deph for a in damp]
    ops = [k for k in ops if np.any(np.abs(k) > 0)]
    return KrausSet(tuple(ops), aux, layout, "aux")


def _weights(batch: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(batch.reshape(batch.shape[0], -1)) ** 2, axis=1)


def apply_kraus_dm(rho: np.ndarray, kraus: KrausSet) -> np.ndarray:
    """sum_k K rho K^dag for a (D, D) array."""
    dims = kraus.layout.mode_dims
    out = np.zeros_like(rho)
    for k in kraus.ops:
        out += sandwich(rho, dims, lambda b, k=k: apply_local(b, k, kraus.subsystem))
    return (out + out.conj().T) / 2


def apply_kraus_batch(batch: np.ndarray, kraus: KrausSet, uniforms: np.ndarray) -> np.ndarray:
    """Sample one Kraus branch per trajectory from its Born weight, then renormalize.

    ``batch`` holds normalized kets of shape (B, *dims); ``uniforms`` supplies one
    draw in [0, 1) per trajectory.
    """
    if len(kraus.ops) == 1 and kraus.is_identity:
        return batch
    branches = [apply_local(batch, k, kraus.subsystem) for k in kraus.ops]
    w = np.stack([_weights(b) for b in branches], axis=1)
    total = w.sum(axis=1)
    if np.any(total < 1e-14):
        raise MeasurementUnderflowError("every Kraus branch has vanishing weight")
    cdf = np.cumsum(w / total[:, None], axis=1)
    choice = np.minimum((uniforms[:, None] >= cdf).sum(axis=1), len(kraus.ops) - 1)
    out = np.empty_like(batch)
    for j, b in enumerate(branches):
        sel = choice == j
        if np.any(sel):
            out[sel] = b[sel] / np.sqrt(w[sel, j]).reshape((-1,) + (1,) * (batch.ndim - 1))
    return out


def apply_channel(state, kraus: KrausSet, rng: np.random.Generator | None = None):
    """Density-matrix mode: sum K rho K^dag. Trajectory mode (ket + rng): sample one branch."""
    if state.layout != kraus.layout:
        raise LayoutMismatchError("state and channel layouts differ")
    if isinstance(state, DensityMatrix):
        return DensityMatrix(state.layout, apply_kraus_dm(state.entries, kraus), check=False)
    if rng is None:
        raise ValueError("trajectory mode needs an rng")
    batch = state.tensor[None]
    out = apply_kraus_batch(batch, kraus, np.array([rng.random()]))
    return QuantumState(state.layout, out[0])


def step_channels(noise: NoiseModel, duration: float, layout: SpaceLayout) -> list[KrausSet]:
    """Channels accumulated over ``duration`` seconds on every subsystem."""
    if noise is None or duration <= 0:
        return []
    out = []
    for m in range(layout.n_modes):
        if noise.kappa > 0:
            out.append(loss_channel(noise.kappa * duration, layout, m))
        if noise.kappa_phi > 0:
            out.append(dephasing_channel(noise.kappa_phi * duration, layout, m))
    if layout.has_aux and (noise.aux_T1 is not None or noise.aux_T2 is not None):
        out.append(aux_decay_channels(noise.aux_T1, noise.aux_T2, duration, layout))
    return out


@dataclass(frozen=True)
class ErrorInjection:
    """Deterministic error placed at ``fraction`` of step ``step_index``.

    ``kind`` is ``aux_decay`` or ``displacement`` (then ``alphas`` gives the kick).
    """

    step_index: int
    fraction: float = 0.5
    kind: str = "aux_decay"
    alphas: tuple = ()

    def __post_init__(self):
        if not 0 <= self.fraction <= 1:
            raise ValueError("fraction must lie in [0, 1]")
        if self.kind not in ("aux_decay", "displacement"):
            raise ValueError(f"unknown injection kind {self.kind!r}")
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))

    def describe(self) -> str:
        return f"{self.kind}@step{self.step_index}:f={self.fraction:g}"


def inject_error(circuit: Circuit, injection: ErrorInjection, ecd_duration: float = DEFAULT_DURATIONS["ecd"]) -> Circuit:
    """Insert a deterministic error into ``circuit``.

    An ECD is split as CD(f beta), error, CD((1-f) beta), then the echo flip
    R(pi, 0), which equals the ECD up to a global phase.
    """
    idx = injection.step_index
    if not 0 <= idx < len(circuit.steps):
        raise IndexError(f"step index {idx} outside circuit of {len(circuit.steps)} steps")
    step = circuit.steps[idx]
    f = injection.fraction
    if injection.kind == "displacement" and not any(injection.alphas):
        return circuit
    if injection.kind == "aux_decay":
        err = ForcedJump("aux_decay")
    else:
        if len(injection.alphas) != circuit.layout.n_modes:
            raise LayoutMismatchError("displacement injection needs one amplitude per mode")
        err = Displacement(injection.alphas, duration=0.0)
    if isinstance(step, Ecd):
        d = ecd_duration if step.duration is None else step.duration
        parts = [
            CondDisplacement(tuple(f * b for b in step.betas), duration=f * d),
            err,
            CondDisplacement(tuple((1 - f) * b for b in step.betas), duration=(1 - f) * d),
            AuxRotation(math.pi, 0.0, duration=0.0),
        ]
        return circuit.replace_step(idx, *parts)
    if f == 0:
        return circuit.replace_step(idx, err, step)
    if f == 1:
        return circuit.replace_step(idx, step, err)
    raise ValueError(f"only ECD steps can be split; step {idx} is {step.kind}")
