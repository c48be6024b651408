"""End-to-end acceptance criteria, one test per criterion.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal summary.
"""

import itertools
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from gridsim.circuits import oscillator_part, run_circuit, sbs_round, sbs_schedule, with_aux
from gridsim.codes import (
    LATTICE_CONSTANT,
    apply_mode_factors,
    are_parallel,
    construct_codewords,
    dressed_mode_factor,
    gkp_square,
    phase_multiple,
    symplectic_phase,
    tesseract,
)
from gridsim.execution import Executor
from gridsim.experiments import (
    IdealDecoder,
    isthmus_experiment,
    logical_lifetime,
    photon_loss_ensemble,
    photon_loss_signature,
    post_selection_analysis,
    round_duration,
    stabilize_from_vacuum,
)
from gridsim.fock import QuantumState, SpaceLayout, annihilation, displacement, expectation, number
from gridsim.noise import NoiseModel, aux_decay_channels, dephasing_channel, loss_channel

pytestmark = pytest.mark.acceptance
SQRT_PI = math.sqrt(math.pi)


def _symplectic_ok(code):
    mult = lambda a, b, u: phase_multiple(symplectic_phase(a, b), u)  # noqa: E731
    ok = all(mult(a, b, 2 * math.pi) is not None for a, b in itertools.combinations(code.stabilizers, 2))
    ok &= mult(code.logical_x, code.logical_z, math.pi) % 2 == 1
    ok &= all(mult(lg, s, 2 * math.pi) is not None for lg in (code.logical_x, code.logical_z) for s in code.stabilizers)
    return ok


def test_criterion_1_code_algebra(record_criterion):
    t0 = time.perf_counter()
    ok = _symplectic_ok(gkp_square(0.3)) and _symplectic_ok(tesseract(0.35))
    l_err = abs(LATTICE_CONSTANT - 2 * SQRT_PI)
    tess = tesseract(0.35)
    nonpar = all(not are_parallel(lg, s) for lg in (tess.logical_x, tess.logical_z) for s in tess.stabilizers)
    dt = time.perf_counter() - t0
    record_criterion(1, ok and l_err <= 1e-12 and nonpar and dt < 1,
                     f"phases ok={ok}, |l-2sqrt(pi)|={l_err:.1e}, non-parallel={nonpar}, {dt:.2f}s")


def test_criterion_2_operator_engine(record_criterion):
    t0 = time.perf_counter()
    d = 80
    a, b = 0.5, 0.5j
    lhs = displacement(a, d).entries @ displacement(b, d).entries
    rhs = np.exp(1j * np.imag(a * np.conj(b))) * displacement(a + b, d).entries
    comp = float(np.max(np.abs(lhs - rhs)[:, : d // 2]))
    unit = max(displacement(x, d).unitarity_error() for x in (0.3, 1 + 1j, 2.0j))
    ovl = abs(abs(displacement(1.2, d).entries[0, 0]) - math.exp(-1.2**2 / 2))
    lay = SpaceLayout.oscillators(d)
    kraus = max(
        loss_channel(0.05, lay).completeness_error(),
        dephasing_channel(0.05, lay).completeness_error(),
        aux_decay_channels(20e-6, 30e-6, 1e-6, lay).completeness_error(),
    )
    delta, n = 0.3, np.arange(40)
    e, einv = np.diag(np.exp(-(delta**2) * n)), np.diag(np.exp(delta**2 * n))
    am = annihilation(40).entries
    env = max(
        np.max(np.abs(e @ am @ einv - math.exp(delta**2) * am)),
        np.max(np.abs(e @ am.T @ einv - math.exp(-(delta**2)) * am.T)),
    )
    dt = time.perf_counter() - t0
    ok = comp < 1e-8 and unit < 1e-9 and ovl < 1e-6 and kraus < 1e-10 and env < 1e-10 and dt < 10
    record_criterion(2, ok, f"composition {comp:.1e} (lower half), unitarity {unit:.1e}, overlap {ovl:.1e}, "
                            f"Kraus {kraus:.1e}, envelope {env:.1e}, {dt:.1f}s")


def test_criterion_3_photon_number(record_criterion):
    t0 = time.perf_counter()
    cw = construct_codewords(gkp_square(0.2294), SpaceLayout.oscillators(80, aux=False))
    nbar = [expectation(k, number(80)).real for k in (cw.ket_zero, cw.ket_one)]
    dt = time.perf_counter() - t0
    ok = all(abs(x - 9) <= 1 for x in nbar) and dt < 5
    record_criterion(3, ok, f"<n> = {nbar[0]:.3f}, {nbar[1]:.3f}, {dt:.1f}s")


def _frame_reference(cw, frame):
    code = cw.code
    r = frame.reduced_shift()
    f = [dressed_mode_factor(complex(r[k]), code.delta, cw.layout.mode_dims[k]) for k in range(code.mode_count)]
    v = apply_mode_factors(f, cw.ket_zero.tensor).reshape(-1)
    return v / np.linalg.norm(v)


def test_criterion_4_sbs_convergence(record_criterion):
    t0 = time.perf_counter()
    code = gkp_square(0.3)
    res = stabilize_from_vacuum(code, 200, dims=(80,))
    finals = {k: v[-1] for k, v in res.expectations.items()}
    first = next(
        (r + 1 for r in range(200) if all(v[r] >= 0.9 for v in res.expectations.values())), None
    )
    lay = SpaceLayout.oscillators(80)
    cw = construct_codewords(code, lay.without_aux())
    rho = with_aux(cw.ket_zero, lay).to_density()
    circuits, frames = sbs_schedule(code, lay, 2)
    dists = []
    for c, fr in zip(circuits, frames):
        rho, _ = run_circuit(c, rho)
        ref = _frame_reference(cw, fr)
        diff = oscillator_part(rho).entries - np.outer(ref, ref.conj())
        dists.append(0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff)))))
    dt = time.perf_counter() - t0
    ok = first is not None and max(dists) <= 0.01 and dt < 120
    record_criterion(4, ok, f"all Re<T> >= 0.9 from round {first}, final {finals}; "
                            f"codeword trace distance per round {[round(x, 4) for x in dists]} (target 0.01), {dt:.0f}s")


def test_criterion_5_correctable_displacements(record_criterion):
    t0 = time.perf_counter()
    code = gkp_square(0.3)
    lay = SpaceLayout.oscillators(80)
    cw = construct_codewords(code, lay.without_aux())
    circuits, frames = sbs_schedule(code, lay, 20)
    ex = Executor(lay)
    decoder = IdealDecoder(cw, "0", frames[-1])

    def recovered(fraction):
        s = fraction * SQRT_PI / 2  # q-shift by s is D(s/sqrt2)
        v = displacement(s / math.sqrt(2), 80).entries @ cw.ket_zero.amplitudes
        rho = with_aux(QuantumState(lay.without_aux(), v), lay).to_density().entries
        for c in circuits:
            rho = ex.run_dm(c, rho).rho
        return 1 - decoder.flip_probability_dm(rho)

    inside = {f: recovered(f) for f in (0.25, 0.5, 0.75, 0.9)}
    outside = {f: recovered(f) for f in (1.1, 1.25)}
    dt = time.perf_counter() - t0
    ok = all(v >= 0.99 for v in inside.values()) and all(v < 0.5 for v in outside.values()) and dt < 60
    fmt = lambda d: ", ".join(f"{k}:{v:.4f}" for k, v in d.items())  # noqa: E731
    record_criterion(5, ok, f"fidelity below radius {{{fmt(inside)}}} (need >= 0.99); "
                            f"above radius {{{fmt(outside)}}} (need flip), {dt:.0f}s")


def test_criterion_6_break_even(record_criterion):
    t0 = time.perf_counter()
    code = gkp_square(0.3)
    t_round = round_duration(sbs_round(code, 0, SpaceLayout.oscillators(80)), None)
    noise = NoiseModel(kappa=5e-4 / t_round)
    qec = logical_lifetime(code, noise, 1000, dims=(80,))
    idle = logical_lifetime(code, noise, 1000, dims=(80,), qec=False)
    dt = time.perf_counter() - t0
    idle_ok = idle.gain <= 1 + 2 * idle.t_logical_stderr / idle.t_ref
    ok = qec.gain > 1 and idle_ok and dt < 900
    record_criterion(6, ok, f"QEC gain {qec.gain:.3f} (T_L {qec.t_logical:.3e}s), idle gain {idle.gain:.3f} "
                            f"+- {idle.t_logical_stderr / idle.t_ref:.3f}, {dt:.0f}s")


def _flip_z(base, inj):
    return (inj.flip_probability - base.flip_probability) / math.hypot(base.flip_stderr, inj.flip_stderr)


def test_criterion_7_isthmus(record_criterion):
    t0 = time.perf_counter()
    gb, gi = isthmus_experiment("gkp", shots=5000, seed=7)
    tb, ti = isthmus_experiment("tesseract", shots=5000, seed=7)
    dt = time.perf_counter() - t0
    zg, zt = _flip_z(gb, gi), _flip_z(tb, ti)
    ok = zg > 3 and zt > 3 and gi.max_abs_z < 3 and ti.detection_statistic > 5 and dt < 1800
    record_criterion(7, ok, f"flip elevation z: GKP {zg:.1f}, Tesseract {zt:.1f}; window '1' elevation: "
                            f"GKP max|z| {gi.max_abs_z:.2f} (< 3), Tesseract max z {ti.detection_statistic:.1f} (> 5), {dt:.0f}s")


def test_criterion_8_photon_loss_signature(record_criterion):
    t0 = time.perf_counter()
    base, inj = photon_loss_signature("gkp", shots=2000, seed=8)
    dt = time.perf_counter() - t0
    elev = inj.extra["p_one_within_window"] - base.extra["p_one_within_window"]
    fid = 1 - inj.flip_probability
    ok = elev > 0.3 and fid >= 0.9 and dt < 600
    record_criterion(8, ok, f"P('1' within 4 rounds) elevation {elev:.3f} (> 0.3), recovered fidelity {fid:.4f}, {dt:.0f}s")


@pytest.fixture(scope="module")
def loss_ensemble():
    return photon_loss_ensemble("gkp", shots=1000, seed=5)


def test_criterion_9_post_selection(record_criterion, loss_ensemble):
    t0 = time.perf_counter()
    rep = post_selection_analysis(loss_ensemble.outcomes, loss_ensemble.fidelities, "erasure")
    dt = time.perf_counter() - t0
    ok = not rep.degenerate and rep.conditional_fidelity > rep.unconditional_fidelity and dt < 300
    record_criterion(9, ok, f"retained {rep.retained_fraction:.3f}, conditional {rep.conditional_fidelity:.4f} "
                            f"vs unconditional {rep.unconditional_fidelity:.4f}, analysis {dt:.2f}s")


_SMALL = {
    "prepare": ["--set", "prepare.depth=2", "--set", "prepare.budget=200", "--set", "prepare.restarts=1",
                "--set", "code.delta=0.5"],
    "stabilize": ["--set", "stabilize.rounds=4"],
    "lifetime": ["--set", "lifetime.rounds=8", "--set", "lifetime.shots=150", "--set", "noise.kappa=500"],
    "isthmus": ["--set", "code.delta=0.3", "--set", "isthmus.shots=150", "--set", "isthmus.window=3",
                "--set", "isthmus.injection_round=1"],
    "lossprobe": ["--set", "lossprobe.shots=150", "--set", "lossprobe.ensemble_shots=150",
                  "--set", "lossprobe.recovery_rounds=3"],
    "charfunc": ["--set", "charfunc.points=7"],
    "sweep": ["--set", "sweep.experiment=charfunc", "--set", "sweep.values=[0.3, 0.35]", "--set", "charfunc.points=5"],
}


def test_criterion_10_determinism(record_criterion, tmp_path):
    t0 = time.perf_counter()
    mismatched = []
    for kind, extra in _SMALL.items():
        blobs = []
        for threads in ("1", "2", "2"):
            out = tmp_path / f"{kind}_{threads}_{len(blobs)}"
            env = dict(os.environ, GRIDSIM_THREADS=threads)
            subprocess.run([sys.executable, "-m", "gridsim.cli", kind, "--seed", "11", "--out", str(out), *extra],
                           check=True, env=env, capture_output=True)
            blobs.append((out / "result.json").read_bytes())
            json.loads(blobs[-1])
        if len(set(blobs)) != 1:
            mismatched.append(kind)
    dt = time.perf_counter() - t0
    record_criterion(10, not mismatched, f"{len(_SMALL)} experiments x (1, 2, 2 threads); mismatched {mismatched}, {dt:.0f}s")
