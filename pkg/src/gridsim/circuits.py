"""Native controls and the protocols built from them.

sBs rounds, logical readout, encoding by optimization, software Pauli frames
and the two-mode Gaussian generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.optimize

from .codes import CodeSpec, CodeWords, PhaseSpaceVector, phase_multiple, symplectic_phase
from .errors import LayoutMismatchError, NumericRangeError
from .execution import Executor, make_rngs, rotation_matrix
from .fock import (
    DensityMatrix,
    OperatorMatrix,
    QuantumState,
    SpaceLayout,
    annihilation,
    displacement_kit,
    embed,
    matrix_exponential,
    tensor_product,
)
from .gates import AuxMeasureReset, AuxRotation, Circuit, Ecd, SbsTrace
from .noise import NoiseModel

HALF_PI = math.pi / 2

# Found by a grid search over multiples of pi/2 (noiseless convergence from vacuum).
SBS_PHASES = (0.0, 3 * HALF_PI, 3 * HALF_PI, 0.0)
# Single-ECD readout: P(0) = (1 + Re<D(alpha)>)/2.
READOUT_PHASES = (HALF_PI, 3 * HALF_PI)
# Two-ECD finite-energy readout phases, from the same kind of grid search on codewords.
FINITE_READOUT_PHASES = (0.0, 3 * HALF_PI, math.pi)


def _require_aux(layout: SpaceLayout):
    if not layout.has_aux:
        raise LayoutMismatchError("layout has no auxiliary subsystem")


def aux_rotation(theta: float, phi: float, layout: SpaceLayout) -> OperatorMatrix:
    _require_aux(layout)
    return embed(rotation_matrix(theta, phi), layout.aux_index, layout)


def ecd(betas: Sequence[complex], layout: SpaceLayout) -> OperatorMatrix:
    """Dense D(b/2)|e><g| + D(-b/2)|g><e| with one amplitude per oscillator."""
    _require_aux(layout)
    betas = [complex(b) for b in np.atleast_1d(betas)]
    if len(betas) != layout.n_modes:
        raise LayoutMismatchError(f"need {layout.n_modes} amplitudes, got {len(betas)}")
    dims = layout.oscillator_dims
    plus = [displacement_kit(d).matrix(b / 2) for b, d in zip(betas, dims)]
    minus = [displacement_kit(d).matrix(-b / 2) for b, d in zip(betas, dims)]
    eg = np.array([[0, 0], [1, 0]], dtype=complex)
    ge = eg.T.copy()
    return OperatorMatrix(
        layout,
        tensor_product(plus + [eg], layout).entries + tensor_product(minus + [ge], layout).entries,
    )


# --- Pauli frame ------------------------------------------------------------


@dataclass(frozen=True)
class PauliFrame:
    """Software frame: per-mode quarter-turn rotation plus the accumulated displacement.

    ``shift`` is the sum of every known displacement applied so far (software
    Paulis and the half-stabilizer kick of each sBs round). Sign bits follow
    from its commutation phase with the operator being measured.
    """

    code: CodeSpec
    rotation: tuple[int, ...] = ()
    shift: tuple[complex, ...] = ()

    def __post_init__(self):
        m = self.code.mode_count
        rot = tuple(int(r) % 4 for r in self.rotation) if self.rotation else (0,) * m
        shift = tuple(complex(s) for s in self.shift) if self.shift else (0j,) * m
        if len(rot) != m or len(shift) != m:
            raise LayoutMismatchError("frame size does not match the code")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "shift", shift)

    def physical(self, vec: PhaseSpaceVector) -> PhaseSpaceVector:
        """Frame operator -> physical displacement vector."""
        return vec.rotated(self.rotation)

    def sign_bit(self, vec: PhaseSpaceVector) -> int:
        """1 when the physical displacement ``vec`` anticommutes with the frame shift."""
        m = phase_multiple(symplectic_phase(vec.array, np.array(self.shift)), math.pi, tol=1e-6)
        if m is None:
            raise ValueError(f"{vec.label or 'vector'} is not a Pauli-type operator for this frame")
        return m % 2

    @property
    def x_bit(self) -> int:
        return self.sign_bit(self.physical(self.code.logical_z))

    @property
    def z_bit(self) -> int:
        return self.sign_bit(self.physical(self.code.logical_x))

    @property
    def stabilizer_signs(self) -> tuple[int, ...]:
        return tuple(self.sign_bit(s) for s in self.code.stabilizers)

    def key(self):
        return (self.rotation, self.x_bit, self.z_bit, self.stabilizer_signs)

    def __eq__(self, other):
        return isinstance(other, PauliFrame) and self.code.name == other.code.name and self.key() == other.key()

    def __hash__(self):
        return hash((self.code.name, self.key()))

    def reduced_shift(self) -> np.ndarray:
        """Shift reduced modulo the stabilizer lattice to its shortest representative."""
        stabs = self.code.stabilizers
        basis = np.array([np.concatenate([v.array.real, v.array.imag]) for v in stabs]).T
        v = np.array(self.shift)
        rv = np.concatenate([v.real, v.imag])
        coeff = np.linalg.lstsq(basis, rv, rcond=None)[0]
        r = rv - basis @ np.round(coeff)
        m = self.code.mode_count
        return r[:m] + 1j * r[m:]

    def shifted(self, vec: PhaseSpaceVector | Sequence[complex]) -> "PauliFrame":
        v = vec.alphas if isinstance(vec, PhaseSpaceVector) else tuple(vec)
        return replace(self, shift=tuple(a + b for a, b in zip(self.shift, v)))

    def to_dict(self) -> dict:
        return {
            "rotation_deg": [90 * r for r in self.rotation],
            "x": self.x_bit,
            "z": self.z_bit,
            "stabilizer_signs": list(self.stabilizer_signs),
        }


def gauge_update(frame: PauliFrame, gate: str) -> PauliFrame:
    """Apply a logical X, Z or H in software."""
    gate = gate.upper()
    if gate == "X":
        return frame.shifted(frame.physical(frame.code.logical_x))
    if gate == "Z":
        return frame.shifted(frame.physical(frame.code.logical_z))
    if gate == "H":
        if frame.code.name != "gkp":
            raise ValueError("a 90-degree frame rotation is a code symmetry only for the square GKP lattice")
        return replace(frame, rotation=tuple((r + 1) % 4 for r in frame.rotation))
    raise ValueError(f"unknown gauge gate {gate!r}")


def half_stabilizer(code: CodeSpec, index: int) -> PhaseSpaceVector:
    """Displacement each sBs round applies on top of its correction."""
    s = code.stabilizers[index]
    return s.scaled(0.5, f"{s.label}/2")


def advance_frame(frame: PauliFrame, code: CodeSpec, index: int) -> PauliFrame:
    return frame.shifted(half_stabilizer(code, index))


# --- sBs ------------------------------------------------------------------


def _check_index(code: CodeSpec, index: int):
    if not isinstance(index, (int, np.integer)) or not 0 <= index < len(code.stabilizers):
        raise IndexError(f"stabilizer index {index!r} invalid for {len(code.stabilizers)} stabilizers")


def sbs_amplitudes(code: CodeSpec, index: int) -> tuple[np.ndarray, np.ndarray]:
    """(epsilon, beta_Big) per mode: beta_B = alpha_S cosh(delta^2), epsilon = i delta^2/2 beta_B."""
    _check_index(code, index)
    beta_b = code.stabilizers[index].array * math.cosh(code.delta**2)
    eps = 1j * (code.delta**2 / 2) * beta_b
    return eps, beta_b


def sbs_round(
    code: CodeSpec,
    stabilizer_index: int,
    layout: SpaceLayout,
    frame: PauliFrame | None = None,
    phases: Sequence[float] = SBS_PHASES,
) -> Circuit:
    """One small-Big-small round for one stabilizer, ending in measure + reset.

    When ``frame`` marks the stabilizer's sign as flipped, the last two rotation
    phases are advanced by pi so the round stabilizes the -1 eigenspace.
    """
    _require_aux(layout)
    if layout.n_modes != code.mode_count:
        raise LayoutMismatchError("layout and code mode counts differ")
    eps, beta_b = sbs_amplitudes(code, stabilizer_index)
    p0, p1, p2, p3 = phases
    if frame is not None and frame.sign_bit(code.stabilizers[stabilizer_index]):
        p2 += math.pi
        p3 += math.pi
    label = code.stabilizers[stabilizer_index].label
    steps = [
        AuxRotation(HALF_PI, p0),
        Ecd(tuple(eps)),
        AuxRotation(HALF_PI, p1),
        Ecd(tuple(beta_b)),
        AuxRotation(HALF_PI, p2),
        Ecd(tuple(eps)),
        AuxRotation(HALF_PI, p3),
        AuxMeasureReset(label),
    ]
    return Circuit(layout, steps)


def round_robin(code: CodeSpec, n_rounds: int, start: int = 0) -> list[int]:
    k = len(code.stabilizers)
    return [(start + r) % k for r in range(n_rounds)]


def sbs_schedule(
    code: CodeSpec, layout: SpaceLayout, n_rounds: int, frame: PauliFrame | None = None, start: int = 0
) -> tuple[list[Circuit], list[PauliFrame]]:
    """Round circuits for ``n_rounds`` round-robin rounds plus the frame after each round."""
    frame = frame if frame is not None else PauliFrame(code)
    circuits, frames = [], []
    for idx in round_robin(code, n_rounds, start):
        circuits.append(sbs_round(code, idx, layout, frame))
        frame = advance_frame(frame, code, idx)
        frames.append(frame)
    return circuits, frames


# --- running ----------------------------------------------------------------


def run_circuit(
    circuit: Circuit,
    state: QuantumState | DensityMatrix,
    noise: NoiseModel | None = None,
    rng_seed: int = 0,
    round_offset: int = 0,
):
    """Run one circuit; returns (new state, SbsTrace).

    A ket runs as a single trajectory with Born-rule sampling from a generator
    keyed by ``rng_seed``; a density matrix runs outcome-averaged and the trace
    records P(1) per measurement in ``averaged``.
    """
    if circuit.layout != state.layout:
        raise LayoutMismatchError("circuit and state layouts differ")
    ex = Executor(circuit.layout, noise)
    trace = SbsTrace()
    if isinstance(state, DensityMatrix):
        res = ex.run_dm(circuit, state.entries)
        for i, (lab, p) in enumerate(zip(res.labels, res.p_one)):
            trace.averaged.append((round_offset + i, lab, p))
        return DensityMatrix(state.layout, res.rho, check=False), trace
    res = ex.run_batch(circuit, state.tensor[None], make_rngs(rng_seed, 0, 1))
    for i, (lab, bit) in enumerate(zip(res.labels, res.outcomes[0])):
        trace.append(round_offset + i, lab, int(bit))
    return QuantumState(state.layout, res.batch[0]), trace


def with_aux(state: QuantumState, layout: SpaceLayout | None = None) -> QuantumState:
    """Oscillator ket -> ket with the auxiliary in |g>."""
    lay = layout or SpaceLayout(state.layout.mode_dims + (2,), has_aux=True)
    v = np.zeros(state.layout.mode_dims + (2,), dtype=complex)
    v[..., 0] = state.tensor
    return QuantumState(lay, v.reshape(-1))


def oscillator_part(state: QuantumState | DensityMatrix):
    """Reduced oscillator state once the auxiliary is back in |g>: ket if pure, else density matrix."""
    lay = state.layout
    osc = lay.without_aux()
    if isinstance(state, QuantumState):
        t = state.tensor
        g, e = t[..., 0], t[..., 1]
        if np.linalg.norm(e) < 1e-12:
            return QuantumState(osc, g.reshape(-1))
        rho = np.outer(g.reshape(-1), g.reshape(-1).conj()) + np.outer(e.reshape(-1), e.reshape(-1).conj())
        return DensityMatrix(osc, rho, check=False)
    d = osc.dim
    r = state.entries.reshape(d, 2, d, 2)
    return DensityMatrix(osc, r[:, 0, :, 0] + r[:, 1, :, 1], check=False)


# --- readout ------------------------------------------------------------------


def logical_readout(
    code: CodeSpec,
    pauli: str,
    finite_energy: bool,
    layout: SpaceLayout,
    frame: PauliFrame | None = None,
    phases: Sequence[float] | None = None,
) -> Circuit:
    """Phase-estimation readout of a logical Pauli; outcome 0 means eigenvalue +1.

    The single-ECD form gives P(0) = (1 + Re<D(alpha_P)>)/2. The finite-energy
    form adds a small ECD along the conjugate direction, mirroring the first
    half of an sBs round, to measure the dressed Pauli.
    """
    _require_aux(layout)
    frame = frame if frame is not None else PauliFrame(code)
    vec = frame.physical(code.pauli(pauli))
    invert = bool(frame.sign_bit(vec))
    alpha = vec.array
    label = f"read_{pauli.upper()}"
    if not finite_energy:
        p0, p1 = phases if phases is not None else READOUT_PHASES
        steps = [AuxRotation(HALF_PI, p0), Ecd(tuple(alpha)), AuxRotation(HALF_PI, p1), AuxMeasureReset(label, invert)]
    else:
        p0, p1, p2 = phases if phases is not None else FINITE_READOUT_PHASES
        c = math.cosh(code.delta**2)
        eps = 1j * (code.delta**2 / 2) * alpha * c
        steps = [
            AuxRotation(HALF_PI, p0),
            Ecd(tuple(eps)),
            AuxRotation(HALF_PI, p1),
            Ecd(tuple(alpha * c)),
            AuxRotation(HALF_PI, p2),
            AuxMeasureReset(label, invert),
        ]
    return Circuit(layout, steps)


def readout_probability(circuit: Circuit, state: QuantumState | DensityMatrix) -> float:
    """Exact probability that the (single) measurement of ``circuit`` records 0."""
    if isinstance(state, QuantumState):
        state = state.to_density()
    _, tr = run_circuit(circuit, state)
    return 1.0 - tr.averaged[-1][2]


# --- encoding -------------------------------------------------------------------


@dataclass
class EncodeResult:
    circuit: Circuit
    fidelity: float
    converged: bool
    params: list = field(default_factory=list)
    evaluations: int = 0


def _encode_steps(params: np.ndarray, depth: int, n_modes: int):
    steps = []
    per = 2 + 2 * n_modes
    for k in range(depth):
        p = params[k * per : (k + 1) * per]
        steps.append(AuxRotation(float(p[0]), float(p[1])))
        betas = tuple(complex(p[2 + 2 * m], p[3 + 2 * m]) for m in range(n_modes))
        steps.append(Ecd(betas))
    p = params[depth * per :]
    steps.append(AuxRotation(float(p[0]), float(p[1])))
    return steps


class _FastKet:
    """Noiseless ket propagation that avoids caching a matrix per trial amplitude."""

    def __init__(self, layout: SpaceLayout):
        self.layout = layout
        self.dims = layout.oscillator_dims
        self.kits = [displacement_kit(d) for d in self.dims]

    def _disp(self, t: np.ndarray, betas) -> np.ndarray:
        for k, (b, kit) in enumerate(zip(betas, self.kits)):
            if b != 0:
                t = np.moveaxis(kit.apply(b, np.moveaxis(t, k, 0)), 0, k)
        return t

    def run(self, steps, t: np.ndarray) -> np.ndarray:
        for s in steps:
            if isinstance(s, AuxRotation):
                t = np.tensordot(t, rotation_matrix(s.theta, s.phi), axes=([t.ndim - 1], [1]))
            else:
                out = np.empty_like(t)
                out[..., 1] = self._disp(t[..., 0], [b / 2 for b in s.betas])
                out[..., 0] = self._disp(t[..., 1], [-b / 2 for b in s.betas])
                t = out
        return t


def encode_logical(
    target: CodeWords | QuantumState,
    which: str | int,
    depth: int,
    layout: SpaceLayout,
    optimizer_budget: int = 4000,
    f_target: float = 0.95,
    seed: int = 0,
    restarts: int = 4,
) -> EncodeResult:
    """Alternating rotation/ECD circuit preparing ``target`` (x |g>) from vacuum.

    Each layer is R(theta, phi) then ECD(beta) (2 + 2m reals for m modes), plus a
    final rotation. Parameters come from Nelder-Mead with random restarts; the
    result is flagged unconverged when the best fidelity misses ``f_target``.
    """
    _require_aux(layout)
    if not 0 <= depth <= 10:
        raise ValueError("depth must be between 0 and 10")
    tgt = target.logical_state(which) if isinstance(target, CodeWords) else target
    if tgt.layout.mode_dims != layout.oscillator_dims:
        raise LayoutMismatchError("target does not match the oscillator part of the layout")
    tgt_t = tgt.tensor
    n = layout.n_modes
    sim = _FastKet(layout)
    vac = np.zeros(layout.mode_dims, dtype=complex)
    vac[(0,) * layout.n_subsystems] = 1.0

    def fidelity(params):
        out = sim.run(_encode_steps(params, depth, n), vac)
        return float(abs(np.vdot(tgt_t, out[..., 0])) ** 2)

    n_par = depth * (2 + 2 * n) + 2
    rng = np.random.default_rng(seed)
    best_x, best_f, evals = np.zeros(n_par), fidelity(np.zeros(n_par)), 1
    per_run = max(200, optimizer_budget // max(1, restarts))
    for r in range(restarts):
        if evals >= optimizer_budget or best_f >= f_target:
            break
        x0 = best_x + rng.normal(0, 0.3, n_par) if r else rng.normal(0, 1.0, n_par)
        res = scipy.optimize.minimize(
            lambda x: 1.0 - fidelity(x),
            x0,
            method="Nelder-Mead",
            options={"maxfev": min(per_run, optimizer_budget - evals), "xatol": 1e-8, "fatol": 1e-10, "adaptive": True},
        )
        evals += res.nfev
        if 1.0 - res.fun > best_f:
            best_f, best_x = 1.0 - res.fun, res.x
    circuit = Circuit(layout, _encode_steps(best_x, depth, n))
    return EncodeResult(circuit, best_f, best_f >= f_target, [float(v) for v in best_x], evals)


# --- Gaussian two-mode generators ---------------------------------------------


def gaussian_two_mode(kind: str, coupling: complex, t: float, layout: SpaceLayout, modes=(0, 1)) -> OperatorMatrix:
    """exp(-i t H) for H_BS = g a^dag b + g* b^dag a or H_TMS = eta a b + eta* a^dag b^dag."""
    if layout.n_modes < 2:
        raise LayoutMismatchError("two oscillator modes required")
    i, j = modes
    a = embed(annihilation(layout.mode_dims[i]), i, layout).entries
    b = embed(annihilation(layout.mode_dims[j]), j, layout).entries
    g = complex(coupling)
    if kind in ("beam_splitter", "bs"):
        h = g * a.conj().T @ b + np.conj(g) * b.conj().T @ a
    elif kind in ("two_mode_squeeze", "tms"):
        # vacuum input reaches sinh^2 r photons per mode; same tail rule as coherent states
        n_mean = math.sinh(min(abs(g) * abs(t), 350.0)) ** 2
        cap = min(layout.mode_dims[i], layout.mode_dims[j])
        if 8 * n_mean + 20 > cap:
            raise NumericRangeError(
                f"two-mode squeezing |eta|t = {abs(g) * abs(t):.3g} gives {n_mean:.3g} photons per mode; "
                f"cutoff {cap} is too small"
            )
        h = g * a @ b + np.conj(g) * a.conj().T @ b.conj().T
    else:
        raise ValueError(f"unknown generator {kind!r}")
    return matrix_exponential(OperatorMatrix(layout, h), -1j * t)
