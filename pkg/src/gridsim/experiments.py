"""Experiment harnesses: tomography, lifetimes, decay signatures and post-selection.

Every function here is a pure function of its arguments (including the seed).
Trajectory ensembles use one counter-based generator per trajectory, so
results do not depend on how trajectories are chunked or scheduled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import (
    PauliFrame,
    half_stabilizer,
    sbs_schedule,
    with_aux,
)
from .codes import (
    CodeSpec,
    CodeWords,
    apply_mode_factors,
    code_by_name,
    construct_codewords,
    dressed_expectation,
    dressed_mode_factor,
    phase_multiple,
    symplectic_phase,
)
from .errors import FitFailureError, LayoutMismatchError
from .execution import Executor, batch_tail_mass, dm_tail_mass, make_rngs, warn_tails
from .fock import DensityMatrix, QuantumState, SpaceLayout, TAIL_FRACTION, TAIL_THRESHOLD, displacement_kit
from .gates import Circuit, ForcedJump, Wait
from .noise import ErrorInjection, NoiseModel, inject_error
from .parallel import map_chunks

FIT_START = 5
BIG_ECD_STEP = 3

DEFAULT_DELTA = {"gkp": 0.3, "tesseract": 0.35}
# The GKP decay signature is only silent once the Delta^2-sized residual kicks are small.
ISTHMUS_DELTA = {"gkp": 0.15, "tesseract": 0.35}

_OPPOSITE = {"0": "1", "1": "0", "+": "-", "-": "+", "+i": "-i", "-i": "+i"}


def _normal_state(which: str) -> str:
    w = str(which).lower()
    return {"plus": "+", "minus": "-", "i": "+i"}.get(w, w)


# --- characteristic function ------------------------------------------------


@dataclass
class CharFuncResult:
    grid: np.ndarray
    values: np.ndarray
    unsafe: np.ndarray  # True where D(beta) pushes weight into the top Fock levels

    def to_dict(self) -> dict:
        return {
            "beta_re": self.grid.real.tolist(),
            "beta_im": self.grid.imag.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
            "unsafe": self.unsafe.astype(int).tolist(),
        }


def characteristic_function_scan(state: QuantumState | DensityMatrix, grid) -> CharFuncResult:
    """C(beta) = <D(beta)> at every grid point of a single-mode state."""
    layout = state.layout
    if layout.n_subsystems != 1:
        raise LayoutMismatchError("characteristic function needs a single-mode state; partial-trace first")
    grid = np.asarray(grid, dtype=complex)
    dim = layout.dim
    kit = displacement_kit(dim)
    cut = int(np.floor(dim * (1 - TAIL_FRACTION)))
    vals = np.empty(grid.size, dtype=complex)
    unsafe = np.zeros(grid.size, dtype=bool)
    if isinstance(state, QuantumState):
        v = state.amplitudes
        for i, b in enumerate(grid.reshape(-1)):
            w = kit.apply(complex(b), v)
            vals[i] = np.vdot(v, w)
            unsafe[i] = np.sum(np.abs(w[cut:]) ** 2) > TAIL_THRESHOLD
    else:
        rho = state.entries
        for i, b in enumerate(grid.reshape(-1)):
            dm = kit.matrix(complex(b))
            vals[i] = np.sum(dm * rho.T)
            pops = np.real(np.einsum("ij,jk,ik->i", dm[cut:], rho, dm[cut:].conj()))
            unsafe[i] = pops.sum() > TAIL_THRESHOLD
    return CharFuncResult(grid, vals.reshape(grid.shape), unsafe.reshape(grid.shape))


def square_grid(extent: float, points: int) -> np.ndarray:
    """points x points grid of beta over [-extent, extent]^2 (rows: imaginary part)."""
    axis = np.linspace(-extent, extent, points)
    return axis[None, :] + 1j * axis[:, None]


# --- decoding -----------------------------------------------------------------


class IdealDecoder:
    """Projects onto frame-adjusted codewords of the prepared logical state and its opposite.

    The frame shift is reduced modulo the stabilizer lattice and dressed, so the
    reference states are E D(r) |mu_ideal>.
    """

    def __init__(self, codewords: CodeWords, which: str, frame: PauliFrame):
        code = codewords.code
        w = _normal_state(which)
        r = frame.reduced_shift()
        dims = codewords.layout.mode_dims
        factors = [dressed_mode_factor(complex(r[k]), code.delta, dims[k]) for k in range(code.mode_count)]
        good = apply_mode_factors(factors, codewords.logical_state(w).tensor)
        bad = apply_mode_factors(factors, codewords.logical_state(_OPPOSITE[w]).tensor)
        good = good / np.linalg.norm(good)
        bad = bad - np.vdot(good, bad) * good
        bad = bad / np.linalg.norm(bad)
        self.good, self.bad = good, bad

    def flip_probability(self, batch: np.ndarray) -> np.ndarray:
        """Per-trajectory P(flip) for kets of shape (B, *osc, 2)."""
        axes = tuple(range(1, batch.ndim - 1))
        og = np.tensordot(batch, self.good.conj(), axes=(axes, tuple(range(self.good.ndim))))
        ob = np.tensordot(batch, self.bad.conj(), axes=(axes, tuple(range(self.bad.ndim))))
        pg = np.sum(np.abs(og) ** 2, axis=-1)
        pb = np.sum(np.abs(ob) ** 2, axis=-1)
        return pb / (pg + pb)

    def flip_probability_dm(self, rho: np.ndarray) -> float:
        d = self.good.size
        r = rho.reshape(d, 2, d, 2)
        osc = r[:, 0, :, 0] + r[:, 1, :, 1]
        g, b = self.good.reshape(-1), self.bad.reshape(-1)
        pg = np.real(np.vdot(g, osc @ g))
        pb = np.real(np.vdot(b, osc @ b))
        return float(pb / (pg + pb))


def ideal_recovery_fidelity(codewords: CodeWords, which: str, state: QuantumState) -> float:
    """Fidelity with the target logical state after projecting onto the code space."""
    w = _normal_state(which)
    good = codewords.logical_state(w).amplitudes
    bad = codewords.logical_state(_OPPOSITE[w]).amplitudes
    v = state.amplitudes
    pg, pb = abs(np.vdot(good, v)) ** 2, abs(np.vdot(bad, v)) ** 2
    return float(pg / (pg + pb))


# --- stabilization from vacuum ---------------------------------------------------


@dataclass
class StabilizationResult:
    labels: list
    expectations: dict  # stabilizer label -> per-round Re<T_Delta>
    p_one: list

    def to_dict(self) -> dict:
        return {
            "rounds": list(range(1, len(self.p_one) + 1)),
            "round_labels": list(self.labels),
            "stabilizer_expectation": {k: list(v) for k, v in self.expectations.items()},
            "p_one": list(self.p_one),
        }


def stabilize_from_vacuum(code: CodeSpec, rounds: int, noise: NoiseModel | None = None, dims=None) -> StabilizationResult:
    """Outcome-averaged round-robin sBs from the vacuum, tracking every dressed stabilizer.

    Expectations are taken in the frame after each round, so converged values
    approach +1 regardless of the accumulated half-stabilizer shifts.
    """
    layout = _layout_for(code, dims)
    circuits, frames = sbs_schedule(code, layout, rounds)
    ex = Executor(layout, noise)
    rho = np.zeros((layout.dim, layout.dim), dtype=complex)
    rho[0, 0] = 1.0
    exps = {s.label: [] for s in code.stabilizers}
    labels, p_one = [], []
    for c, fr in zip(circuits, frames):
        res = ex.run_dm(c, rho)
        rho = res.rho
        labels.append(res.labels[-1])
        p_one.append(float(res.p_one[-1]))
        dm = DensityMatrix(layout, rho, check=False)
        for s in code.stabilizers:
            sign = (-1) ** fr.sign_bit(s)
            exps[s.label].append(float(sign * dressed_expectation(s, code.delta, dm).real))
    warn_tails(dm_tail_mass(rho, layout), "stabilize")
    return StabilizationResult(labels, exps, p_one)


# --- lifetime -------------------------------------------------------------------


@dataclass
class LifetimeResult:
    pauli: str
    t_logical: float
    t_logical_stderr: float
    t_ref: float
    gain: float
    series: list
    times: list
    qec: bool = True
    mode: str = "density_matrix"

    def to_dict(self) -> dict:
        return {
            "pauli": self.pauli,
            "qec": self.qec,
            "mode": self.mode,
            "T_L": _finite_or_sentinel(self.t_logical),
            "T_L_stderr": _finite_or_sentinel(self.t_logical_stderr),
            "T_ref": _finite_or_sentinel(self.t_ref),
            "T_ref_definition": "1/kappa (Fock {0,1} amplitude-damping lifetime)",
            "gain": _finite_or_sentinel(self.gain),
            "series": list(self.series),
            "times": list(self.times),
        }


def _finite_or_sentinel(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def fit_exponential(times: Sequence[float], values: Sequence[float], start: int = FIT_START):
    """Least-squares fit of log(values) = log(A) - t/T on points ``start:``.

    Returns (T, stderr(T), A). A non-decaying series gives T = inf.
    Raises FitFailureError on non-positive values or too few points.
    """
    t = np.asarray(times, dtype=float)[start:]
    y = np.asarray(values, dtype=float)[start:]
    if len(t) < 2:
        raise FitFailureError(f"need at least 2 points after the first {start}", values)
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitFailureError("series has non-positive values; cannot fit an exponential", values)
    a = np.stack([t, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(a, np.log(y), rcond=None)
    slope, icpt = coef
    if slope >= 0:
        return math.inf, math.inf, float(math.exp(icpt))
    dof = len(t) - 2
    if dof > 0:
        resid = np.log(y) - a @ coef
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(a.T @ a)
        se_slope = math.sqrt(max(cov[0, 0], 0.0))
    else:
        se_slope = 0.0
    tl = -1.0 / slope
    return float(tl), float(se_slope / slope**2), float(math.exp(icpt))


def round_duration(circuit: Circuit, noise: NoiseModel | None) -> float:
    nm = noise if noise is not None else NoiseModel()
    return float(sum(nm.duration_of(s) for s in circuit.steps))


def default_truncation(code: CodeSpec) -> tuple[int, ...]:
    """Per-mode Fock cutoff: 80 (one mode) or 50 (two modes), raised for small Delta.

    The raised value grows with the mean photon number and is rounded up to a
    multiple of 10 so that codeword construction stays above its quality floor.
    """
    nbar = 1 / (2 * code.delta**2) - 0.5
    slope, floor = (6, 80) if code.mode_count == 1 else (4, 50)
    n = max(floor, 10 * math.ceil((slope * nbar + 25) / 10))
    return (n,) * code.mode_count


def _layout_for(code: CodeSpec, dims) -> SpaceLayout:
    dims = tuple(dims) if dims is not None else default_truncation(code)
    if len(dims) != code.mode_count:
        raise LayoutMismatchError(f"{code.name} needs {code.mode_count} mode dimensions, got {dims}")
    return SpaceLayout.oscillators(*dims)


def logical_lifetime(
    code: CodeSpec,
    noise: NoiseModel,
    rounds: int,
    shots: int | None = None,
    seed: int = 0,
    dims=None,
    pauli: str = "Z",
    qec: bool = True,
    fit_start: int = FIT_START,
) -> LifetimeResult:
    """Logical decay under repeated sBs rounds (or idle waits of equal length).

    ``shots=None`` runs the outcome-averaged density matrix; otherwise ``shots``
    trajectories. Each round's Pauli expectation is sign-corrected by the frame.
    """
    layout = _layout_for(code, dims)
    cw = construct_codewords(code, layout.without_aux())
    which = {"Z": "0", "X": "+"}[pauli.upper()]
    vec = code.pauli(pauli)
    circuits, frames = sbs_schedule(code, layout, rounds)
    t_round = round_duration(circuits[0], noise)
    if not qec:
        circuits = [Circuit(layout, [Wait(t_round)])] * rounds
        frames = [PauliFrame(code)] * rounds
    signs = [(-1) ** f.sign_bit(vec) for f in frames]
    ex = Executor(layout, noise)
    init = with_aux(cw.logical_state(which), layout)
    series = []
    if shots is None:
        rho = init.to_density().entries
        for c, s in zip(circuits, signs):
            rho = ex.run_dm(c, rho).rho
            series.append(s * dressed_expectation(vec, code.delta, DensityMatrix(layout, rho, check=False)).real)
        warn_tails(dm_tail_mass(rho, layout), "lifetime")
    else:
        dims_ = layout.mode_dims
        factors = [dressed_mode_factor(vec.alphas[k], code.delta, dims_[k]) for k in range(code.mode_count)]

        def chunk(a, b):
            batch = np.repeat(init.tensor[None], b - a, axis=0)
            rngs = make_rngs(seed, a, b)
            vals = np.zeros((b - a, rounds))
            for r, c in enumerate(circuits):
                batch = ex.run_batch(c, batch, rngs).batch
                applied = apply_mode_factors(factors, batch, first_axis=1)
                vals[:, r] = np.real(np.sum(batch.conj() * applied, axis=tuple(range(1, batch.ndim))))
            return vals

        vals = np.concatenate(map_chunks(chunk, shots), axis=0)
        series = [s * math.fsum(vals[:, r]) / shots for r, s in enumerate(signs)]
    times = [(r + 1) * t_round for r in range(rounds)]
    series = [float(x) for x in series]
    if noise.kappa == 0:
        t_ref = math.inf
    else:
        t_ref = 1.0 / noise.kappa
    tl, se, _ = fit_exponential(times, series, fit_start)
    gain = math.inf if (math.isinf(tl) or math.isinf(t_ref)) else tl / t_ref
    return LifetimeResult(
        pauli.upper(), tl, se, t_ref, gain, series, times, qec, "density_matrix" if shots is None else "trajectories"
    )


# --- signatures -----------------------------------------------------------------


@dataclass
class SignatureResult:
    condition: str
    frequencies: list
    flip_probability: float
    flip_stderr: float
    detection_statistic: float = 0.0
    max_abs_z: float = 0.0
    window: tuple = ()
    shots: int = 0
    extra: dict = field(default_factory=dict)
    outcomes: np.ndarray | None = field(default=None, repr=False)
    fidelities: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "shots": self.shots,
            "frequencies": list(self.frequencies),
            "flip_probability": self.flip_probability,
            "flip_stderr": self.flip_stderr,
            "detection_statistic": self.detection_statistic,
            "max_abs_z": self.max_abs_z,
            "window": list(self.window),
            **self.extra,
        }


def _run_ensemble(layout, noise, circuits, init: QuantumState, seed, shots, decoder: IdealDecoder):
    ex = Executor(layout, noise)

    def chunk(a, b):
        batch = np.repeat(init.tensor[None], b - a, axis=0)
        rngs = make_rngs(seed, a, b)
        bits = []
        for c in circuits:
            res = ex.run_batch(c, batch, rngs)
            batch = res.batch
            bits.append(res.outcomes)
        flips = decoder.flip_probability(batch)
        tails = batch_tail_mass(batch, layout)
        return np.concatenate(bits, axis=1), flips, tails

    parts = map_chunks(chunk, shots)
    outcomes = np.concatenate([p[0] for p in parts], axis=0)
    flips = np.concatenate([p[1] for p in parts])
    tails = np.max([p[2] for p in parts], axis=0)
    warn_tails(tails, "ensemble")
    return outcomes, flips


def _z_scores(f_inj: np.ndarray, f_base: np.ndarray, n: int) -> np.ndarray:
    """Normal-approximation z of the difference of two proportions (pooled variance)."""
    p = (f_inj + f_base) / 2
    sigma = np.sqrt(2 * p * (1 - p) / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, (f_inj - f_base) / sigma, 0.0)
    return z


def _signature(condition, outcomes, flips, window, baseline=None, extra=None) -> SignatureResult:
    n = outcomes.shape[0]
    freqs = outcomes.sum(axis=0) / n
    pf = math.fsum(flips) / n
    se = float(np.std(flips, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    det, mabs = 0.0, 0.0
    if baseline is not None:
        lo, hi = window
        z = _z_scores(freqs[lo:hi], np.asarray(baseline.frequencies)[lo:hi], n)
        det, mabs = float(np.max(z)), float(np.max(np.abs(z)))
    return SignatureResult(
        condition, [float(f) for f in freqs], float(pf), se, det, mabs, tuple(window), n,
        dict(extra or {}), outcomes, 1.0 - flips,
    )


def isthmus_initial_state(code: CodeSpec, stabilizer_index: int) -> str:
    """Logical state flipped by the half-stabilizer kick of the given round."""
    h = half_stabilizer(code, stabilizer_index).array
    if phase_multiple(symplectic_phase(h, code.logical_z.array)) % 2:
        return "0"
    if phase_multiple(symplectic_phase(h, code.logical_x.array)) % 2:
        return "+"
    return "+i"


def isthmus_experiment(
    code: str | CodeSpec = "gkp",
    noise: NoiseModel | None = None,
    injection_round: int = 4,
    shots: int = 5000,
    seed: int = 0,
    dims=None,
    window: int = 10,
    fraction: float = 0.5,
) -> tuple[SignatureResult, SignatureResult]:
    """Paired ensembles with and without an aux decay inside the Big ECD of one round.

    Both arms share per-trajectory generators, so they agree bit for bit up to
    the injection. The detection statistic is the largest per-round z-score of
    the "1"-frequency elevation over rounds injection+1 .. injection+window.
    """
    if isinstance(code, str):
        code = code_by_name(code, ISTHMUS_DELTA[code.lower()])
    layout = _layout_for(code, dims)
    cw = construct_codewords(code, layout.without_aux())
    n_rounds = injection_round + 1 + window
    circuits, frames = sbs_schedule(code, layout, n_rounds)
    idx = injection_round % len(code.stabilizers)
    which = isthmus_initial_state(code, idx)
    decoder = IdealDecoder(cw, which, frames[-1])
    injected = list(circuits)
    injected[injection_round] = inject_error(circuits[injection_round], ErrorInjection(BIG_ECD_STEP, fraction))
    init = with_aux(cw.logical_state(which), layout)
    win = (injection_round + 1, n_rounds)
    extra = {
        "code": code.name,
        "delta": code.delta,
        "initial_state": which,
        "injection_round": injection_round,
        "injected_stabilizer": code.stabilizers[idx].label,
        "fraction": fraction,
        "labels": [code.stabilizers[i % len(code.stabilizers)].label for i in range(n_rounds)],
    }
    ob, fb = _run_ensemble(layout, noise, circuits, init, seed, shots, decoder)
    base = _signature("baseline", ob, fb, win, extra=extra)
    oi, fi = _run_ensemble(layout, noise, injected, init, seed, shots, decoder)
    inj = _signature("injected", oi, fi, win, baseline=base, extra=extra)
    return base, inj


def photon_loss_signature(
    code: str | CodeSpec = "gkp",
    shots: int = 2000,
    seed: int = 0,
    dims=None,
    loss_round: int = 2,
    window: int = 4,
    recovery_rounds: int = 20,
    which: str = "0",
    noise: NoiseModel | None = None,
) -> tuple[SignatureResult, SignatureResult]:
    """Single photon loss applied at the start of ``loss_round``, versus a clean control arm.

    ``extra['p_one_within_window']`` is the fraction of trajectories with at least one
    "1" in the ``window`` rounds starting at the loss; logical fidelity is read
    out by the ideal decoder after ``recovery_rounds`` further rounds.
    """
    if isinstance(code, str):
        code = code_by_name(code, DEFAULT_DELTA[code.lower()])
    layout = _layout_for(code, dims)
    cw = construct_codewords(code, layout.without_aux())
    n_rounds = loss_round + recovery_rounds
    circuits, frames = sbs_schedule(code, layout, n_rounds)
    decoder = IdealDecoder(cw, which, frames[-1])
    injected = list(circuits)
    injected[loss_round] = Circuit(layout, [ForcedJump("photon_loss", 0)]) + circuits[loss_round]
    init = with_aux(cw.logical_state(which), layout)
    win = (loss_round, loss_round + window)
    results = []
    baseline = None
    for cond, circ in (("baseline", circuits), ("injected", injected)):
        o, f = _run_ensemble(layout, noise, circ, init, seed, shots, decoder)
        p_any = float(np.mean(o[:, win[0] : win[1]].max(axis=1)))
        extra = {"code": code.name, "delta": code.delta, "loss_round": loss_round, "p_one_within_window": p_any}
        res = _signature(cond, o, f, win, baseline=baseline, extra=extra)
        results.append(res)
        baseline = res
    return results[0], results[1]


def photon_loss_ensemble(
    code: str | CodeSpec = "gkp",
    kappa_t_round: float = 5e-3,
    rounds: int = 22,
    shots: int = 1000,
    seed: int = 0,
    dims=None,
    which: str = "0",
) -> SignatureResult:
    """Trajectories under stochastic photon loss only, for post-selection studies.

    Loss events land at random rounds; runs whose last losses are not yet
    corrected are the ones that tend to carry "1" outcomes.
    """
    if isinstance(code, str):
        code = code_by_name(code, DEFAULT_DELTA[code.lower()])
    if kappa_t_round <= 0:
        raise ValueError("kappa_t_round must be positive")
    layout = _layout_for(code, dims)
    cw = construct_codewords(code, layout.without_aux())
    circuits, frames = sbs_schedule(code, layout, rounds)
    t_round = round_duration(circuits[0], None)
    noise = NoiseModel(kappa=kappa_t_round / t_round)
    decoder = IdealDecoder(cw, which, frames[-1])
    init = with_aux(cw.logical_state(which), layout)
    o, f = _run_ensemble(layout, noise, circuits, init, seed, shots, decoder)
    extra = {"code": code.name, "delta": code.delta, "kappa_t_round": kappa_t_round, "kappa": noise.kappa}
    return _signature("stochastic_loss", o, f, (0, rounds), extra=extra)


# --- post-selection ---------------------------------------------------------------


@dataclass
class PostSelectionReport:
    strategy: str
    retained_fraction: float
    conditional_fidelity: float
    unconditional_fidelity: float
    degenerate: bool = False
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "parameters": dict(self.parameters),
            "retained_fraction": self.retained_fraction,
            "conditional_fidelity": self.conditional_fidelity,
            "unconditional_fidelity": self.unconditional_fidelity,
            "degenerate": self.degenerate,
        }


def _as_outcome_matrix(traces) -> np.ndarray:
    if isinstance(traces, np.ndarray):
        return traces.astype(np.int8)
    return np.array([t.outcomes for t in traces], dtype=np.int8)


def post_selection_analysis(
    traces,
    fidelities,
    strategy: str = "erasure",
    window: int | None = None,
    threshold: int | None = None,
    start_round: int = 0,
) -> PostSelectionReport:
    """Keep or discard runs by their outcome stream and compare logical fidelities.

    ``erasure`` discards a run at its first "1". ``window`` discards a run when any
    ``window`` consecutive rounds hold at least ``threshold`` ones. Only rounds from
    ``start_round`` on are inspected. ``fidelities`` are per-run logical fidelities
    (or 0/1 success flags).
    """
    o = _as_outcome_matrix(traces)[:, start_round:]
    fid = np.asarray(fidelities, dtype=float)
    if o.shape[0] != fid.shape[0]:
        raise ValueError("need one fidelity per trace")
    if strategy == "erasure":
        keep = o.max(axis=1, initial=0) == 0
        params = {"start_round": start_round}
    elif strategy == "window":
        if window is None or threshold is None or window < 1:
            raise ValueError("window strategy needs window >= 1 and threshold")
        if threshold <= 0:
            keep = np.zeros(o.shape[0], dtype=bool)
        else:
            c = np.cumsum(np.pad(o.astype(int), ((0, 0), (1, 0))), axis=1)
            w = min(window, o.shape[1])
            sums = c[:, w:] - c[:, :-w] if o.shape[1] else np.zeros((o.shape[0], 1))
            keep = sums.max(axis=1, initial=0) < threshold
        params = {"window": window, "threshold": threshold, "start_round": start_round}
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    n = len(fid)
    uncond = math.fsum(fid) / n if n else float("nan")
    kept = int(keep.sum())
    if kept == 0:
        return PostSelectionReport(strategy, 0.0, float("nan"), uncond, True, params)
    cond = math.fsum(fid[keep]) / kept
    return PostSelectionReport(strategy, kept / n, cond, uncond, False, params)
