"""Step-by-step circuit execution for ket batches and density matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import LayoutMismatchError, MeasurementUnderflowError, TruncationWarning
from .fock import SpaceLayout, TAIL_FRACTION, TAIL_THRESHOLD
from .gates import (
    AuxMeasureReset,
    AuxRotation,
    Circuit,
    CondDisplacement,
    Displacement,
    Ecd,
    ForcedJump,
    Wait,
)
from .kernels import (
    apply_cond_displacement,
    apply_displacements,
    apply_ecd,
    apply_local,
    sandwich,
)
from .noise import NoiseModel, apply_kraus_batch, apply_kraus_dm, step_channels

UNDERFLOW = 1e-14


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (cos phi sx + sin phi sy)), closed form."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]],
        dtype=complex,
    )


def make_rngs(seed: int, start: int, stop: int) -> list[np.random.Generator]:
    """One counter-based generator per trajectory, keyed by (seed, index)."""
    return [np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), i]))) for i in range(start, stop)]


def _per_traj(x: np.ndarray, ndim: int) -> np.ndarray:
    return x.reshape((-1,) + (1,) * (ndim - 1))


@dataclass
class Measurement:
    label: str
    step_index: int


@dataclass
class BatchResult:
    """Outcomes has shape (B, n_measurements); labels name each measurement column."""

    batch: np.ndarray
    outcomes: np.ndarray
    labels: list = field(default_factory=list)


@dataclass
class DMResult:
    rho: np.ndarray
    p_one: list = field(default_factory=list)
    labels: list = field(default_factory=list)


class Executor:
    """Applies circuits to ket batches (trajectories) or density matrices.

    Noise is applied after each step as the channel accumulated over that step's
    duration.
    """

    def __init__(self, layout: SpaceLayout, noise: NoiseModel | None = None):
        self.layout = layout
        self.noise = noise if noise is not None and not noise.is_noiseless else None
        self.dims = layout.mode_dims
        self.osc_dims = layout.oscillator_dims
        self._channel_cache: dict = {}

    def _channels(self, duration: float):
        if self.noise is None or duration <= 0:
            return []
        key = round(duration, 18)
        if key not in self._channel_cache:
            self._channel_cache[key] = step_channels(self.noise, duration, self.layout)
        return self._channel_cache[key]

    def _check(self, circuit: Circuit):
        if circuit.layout != self.layout:
            raise LayoutMismatchError("circuit layout does not match executor layout")

    # --- unitary / jump kernels on a ket batch (B, *dims) ------------------

    def _apply_ket_step(self, step, batch: np.ndarray) -> np.ndarray:
        if isinstance(step, AuxRotation):
            return apply_local(batch, rotation_matrix(step.theta, step.phi), self.layout.aux_index)
        if isinstance(step, Ecd):
            return apply_ecd(batch, step.betas, self.osc_dims)
        if isinstance(step, CondDisplacement):
            return apply_cond_displacement(batch, step.betas, self.osc_dims)
        if isinstance(step, Displacement):
            return apply_displacements(batch, step.alphas, self.osc_dims)
        if isinstance(step, Wait):
            return batch
        raise TypeError(f"step {step!r} is not a linear map")

    def _jump(self, step: ForcedJump, batch: np.ndarray, renormalize: bool = True) -> np.ndarray:
        if step.jump == "aux_decay":
            out = np.zeros_like(batch)
            out[..., 0] = batch[..., 1]
        else:
            a = np.diag(np.sqrt(np.arange(1, self.dims[step.mode])), 1)
            out = apply_local(batch, a, step.mode)
        if renormalize:
            norms = np.sqrt(np.sum(np.abs(out.reshape(out.shape[0], -1)) ** 2, axis=1))
            if np.any(norms**2 < UNDERFLOW):
                raise MeasurementUnderflowError(f"{step.jump} jump has vanishing probability")
            out /= _per_traj(norms, out.ndim)
        return out

    # --- trajectories ---------------------------------------------------------

    def run_batch(self, circuit: Circuit, batch: np.ndarray, rngs) -> BatchResult:
        """Run normalized kets of shape (B, *dims); ``rngs`` holds one Generator per ket."""
        self._check(circuit)
        batch = np.array(batch, dtype=complex, copy=True)
        if batch.shape[1:] != self.dims:
            raise LayoutMismatchError(f"batch shape {batch.shape} does not match {self.dims}")
        if len(rngs) != batch.shape[0]:
            raise ValueError("need one rng per trajectory")
        outcomes, labels = [], []
        for step in circuit.steps:
            if isinstance(step, AuxMeasureReset):
                u = np.array([r.random() for r in rngs])
                bits, batch = self._measure_batch(batch, u)
                outcomes.append(bits ^ int(step.invert))
                labels.append(step.label)
            elif isinstance(step, ForcedJump):
                batch = self._jump(step, batch)
            else:
                batch = self._apply_ket_step(step, batch)
            for ch in self._channels(self.noise.duration_of(step) if self.noise else 0.0):
                u = np.array([r.random() for r in rngs])
                batch = apply_kraus_batch(batch, ch, u)
        out = np.stack(outcomes, axis=1) if outcomes else np.zeros((batch.shape[0], 0), dtype=int)
        return BatchResult(batch, out.astype(np.int8), labels)

    def _measure_batch(self, batch: np.ndarray, u: np.ndarray):
        e = batch[..., 1]
        p1 = np.sum(np.abs(e.reshape(e.shape[0], -1)) ** 2, axis=1)
        p1 = np.clip(p1, 0.0, 1.0)
        bits = (u < p1).astype(np.int8)
        p_sel = np.where(bits == 1, p1, 1.0 - p1)
        if np.any(p_sel < UNDERFLOW):
            raise MeasurementUnderflowError("post-measurement state is not normalizable")
        kept = np.where(_per_traj(bits, e.ndim) == 1, batch[..., 1], batch[..., 0])
        out = np.zeros_like(batch)
        out[..., 0] = kept / _per_traj(np.sqrt(p_sel), e.ndim)
        return bits, out

    # --- density matrices ---------------------------------------------------

    def run_dm(self, circuit: Circuit, rho: np.ndarray) -> DMResult:
        """Outcome-averaged evolution of a (D, D) density matrix."""
        self._check(circuit)
        rho = np.array(rho, dtype=complex, copy=True)
        d = self.layout.dim
        if rho.shape != (d, d):
            raise LayoutMismatchError(f"density matrix shape {rho.shape} does not match dimension {d}")
        p_ones, labels = [], []
        for step in circuit.steps:
            if isinstance(step, AuxMeasureReset):
                p1, rho = self._measure_dm(rho)
                p_ones.append(1.0 - p1 if step.invert else p1)
                labels.append(step.label)
            elif isinstance(step, ForcedJump):
                rho = sandwich(rho, self.dims, lambda b, s=step: self._jump(s, b, renormalize=False))
                tr = np.trace(rho).real
                if tr < UNDERFLOW:
                    raise MeasurementUnderflowError(f"{step.jump} jump has vanishing probability")
                rho /= tr
            elif not isinstance(step, Wait):
                rho = sandwich(rho, self.dims, lambda b, s=step: self._apply_ket_step(s, b))
            for ch in self._channels(self.noise.duration_of(step) if self.noise else 0.0):
                rho = apply_kraus_dm(rho, ch)
        rho = (rho + rho.conj().T) / 2
        return DMResult(rho, p_ones, labels)

    def _measure_dm(self, rho: np.ndarray):
        d = self.layout.dim
        half = d // 2
        # aux is the last subsystem, so index = 2*osc + aux
        r = rho.reshape(half, 2, half, 2)
        p1 = float(np.real(np.einsum("iaia->a", r)[1]))
        out = np.zeros_like(r)
        out[:, 0, :, 0] = r[:, 0, :, 0] + r[:, 1, :, 1]
        return min(max(p1, 0.0), 1.0), out.reshape(d, d)


def batch_tail_mass(batch: np.ndarray, layout: SpaceLayout) -> list[float]:
    """Mean weight in the top Fock levels of each mode over a ket batch."""
    pops = np.abs(batch) ** 2
    tails = []
    for k in range(layout.n_modes):
        other = tuple(i for i in range(1, batch.ndim) if i != k + 1)
        p = pops.sum(axis=other).mean(axis=0)
        cut = int(np.floor(len(p) * (1 - TAIL_FRACTION)))
        tails.append(float(p[cut:].sum()))
    return tails


def dm_tail_mass(rho: np.ndarray, layout: SpaceLayout) -> list[float]:
    diag = np.real(np.diag(rho)).reshape(layout.mode_dims)
    tails = []
    for k in range(layout.n_modes):
        other = tuple(i for i in range(diag.ndim) if i != k)
        p = diag.sum(axis=other)
        cut = int(np.floor(len(p) * (1 - TAIL_FRACTION)))
        tails.append(float(p[cut:].sum()))
    return tails


def warn_tails(tails, context=""):
    for k, t in enumerate(tails):
        if t > TAIL_THRESHOLD:
            warnings.warn(
                f"{context + ': ' if context else ''}mode {k} holds {t:.2e} of its weight "
                f"in the top {int(TAIL_FRACTION * 100)}% of Fock levels",
                TruncationWarning,
                stacklevel=3,
            )
