import math

import numpy as np
import pytest

from gridsim.circuits import (
    PauliFrame,
    advance_frame,
    aux_rotation,
    ecd,
    encode_logical,
    gauge_update,
    gaussian_two_mode,
    logical_readout,
    oscillator_part,
    readout_probability,
    round_robin,
    run_circuit,
    sbs_amplitudes,
    sbs_round,
    sbs_schedule,
    with_aux,
)
from gridsim.codes import apply_mode_factors, construct_codewords, dressed_mode_factor, gkp_square, tesseract
from gridsim.errors import LayoutMismatchError, MeasurementUnderflowError, NumericRangeError
from gridsim.execution import Executor, make_rngs
from gridsim.fock import (
    SIGMA_X,
    DensityMatrix,
    QuantumState,
    SpaceLayout,
    basis_state,
    coherent_vector,
    embed,
    expectation,
    number,
)
from gridsim.gates import AuxMeasureReset, Circuit, Ecd, ForcedJump

N = 80
LAY = SpaceLayout.oscillators(N)
GKP = gkp_square(0.3)


@pytest.fixture(scope="module")
def cw():
    return construct_codewords(GKP, LAY.without_aux())


def _ket(cw, which):
    return with_aux(cw.logical_state(which), LAY)


def test_aux_rotation_examples():
    lay = SpaceLayout.oscillators(3)
    assert np.allclose(aux_rotation(0, 0, lay).entries, np.eye(6))
    assert np.allclose(aux_rotation(math.pi, 0, lay).entries, embed(-1j * SIGMA_X, 1, lay).entries)
    out = aux_rotation(math.pi / 2, math.pi / 2, lay).entries @ basis_state(lay, (0, 0)).amplitudes
    target = (basis_state(lay, (0, 0)).amplitudes + basis_state(lay, (0, 1)).amplitudes) / math.sqrt(2)
    assert abs(abs(np.vdot(target, out)) - 1) < 1e-12


def test_ecd_examples():
    lay = SpaceLayout.oscillators(60)
    assert np.allclose(ecd([0], lay).entries, embed(SIGMA_X, 1, lay).entries, atol=1e-13)
    u = ecd([1 + 0.5j], lay).entries
    assert np.max(np.abs(u @ u - np.eye(lay.dim))) < 1e-10
    big = ecd([2.0], LAY)
    assert big.unitarity_error() < 1e-10
    with pytest.raises(LayoutMismatchError):
        ecd([1.0, 1.0], lay)


def test_sbs_round_structure():
    c = sbs_round(GKP, 0, LAY)
    kinds = [s.kind for s in c.steps]
    assert kinds == ["aux_rotation", "ecd"] * 3 + ["aux_rotation", "measure_reset"]
    eps, beta = sbs_amplitudes(GKP, 0)
    assert np.allclose(beta, GKP.stabilizers[0].array * math.cosh(0.09))
    assert abs(eps[0]) == pytest.approx(0.09 / 2 * abs(beta[0]))
    assert abs(np.vdot(eps, beta).real) < 1e-12  # conjugate direction
    with pytest.raises(IndexError):
        sbs_round(GKP, 2, LAY)


def test_sbs_small_ecd_vanishes_with_delta():
    eps, _ = sbs_amplitudes(gkp_square(1e-4), 1)
    assert abs(eps[0]) < 1e-7


def test_round_robin_schedule():
    assert round_robin(tesseract(0.35), 6) == [0, 1, 2, 3, 0, 1]
    circuits, frames = sbs_schedule(GKP, LAY, 3)
    assert len(circuits) == len(frames) == 3


def test_codeword_mostly_reports_zero(cw):
    fr = PauliFrame(GKP)
    rho = _ket(cw, "0").to_density()
    for k in range(4):
        c = sbs_round(GKP, k % 2, LAY, fr)
        rho, tr = run_circuit(c, rho)
        assert 1 - tr.averaged[-1][2] >= 0.95
        fr = advance_frame(fr, GKP, k % 2)


def test_run_circuit_basics():
    lay = SpaceLayout.oscillators(5)
    g = basis_state(lay, (0, 0))
    out, tr = run_circuit(Circuit(lay, []), g)
    assert np.allclose(out.amplitudes, g.amplitudes) and len(tr) == 0
    out, tr = run_circuit(Circuit(lay, [AuxMeasureReset("m")]), g, rng_seed=7)
    assert tr.outcomes == [0]
    with pytest.raises(MeasurementUnderflowError):
        run_circuit(Circuit(lay, [ForcedJump("aux_decay")]), g)


def test_run_circuit_seeded_determinism(cw):
    s = _ket(cw, "+")
    circuits, _ = sbs_schedule(GKP, LAY, 6)
    traces = []
    for _ in range(2):
        st, outs = s, []
        for r, c in enumerate(circuits):
            st, tr = run_circuit(c, st, rng_seed=11, round_offset=r)
            outs.append(tr.to_csv())
        traces.append(outs)
    assert traces[0] == traces[1]


def test_circuits_preserve_norm(cw):
    s = _ket(cw, "+i")
    circuits, _ = sbs_schedule(GKP, LAY, 4)
    for c in circuits + [logical_readout(GKP, "X", True, LAY)]:
        s, _ = run_circuit(c, s, rng_seed=1)
        assert abs(s.norm() - 1) < 1e-9


def test_finite_energy_readout_on_codewords(cw):
    z = logical_readout(GKP, "Z", True, LAY)
    x = logical_readout(GKP, "X", True, LAY)
    assert readout_probability(z, _ket(cw, "0")) >= 0.95
    assert readout_probability(z, _ket(cw, "1")) <= 0.05
    assert readout_probability(x, _ket(cw, "+")) >= 0.95
    assert readout_probability(z, _ket(cw, "+")) == pytest.approx(0.5, abs=0.05)


def test_vacuum_readout_matches_characteristic_function():
    lay = SpaceLayout.oscillators(40)
    c = logical_readout(GKP, "Z", False, lay)
    vac = basis_state(lay, (0, 0))
    shots = 10_000
    ex = Executor(lay)
    batch = np.repeat(vac.tensor[None], shots, axis=0)
    outs = ex.run_batch(c, batch, make_rngs(5, 0, shots)).outcomes[:, 0]
    p0 = 1 - outs.mean()
    alpha = GKP.logical_z.alphas[0]
    assert p0 == pytest.approx((1 + math.exp(-abs(alpha) ** 2 / 2)) / 2, abs=0.01)


def test_gauge_updates_at_frame_level():
    f = PauliFrame(GKP)
    assert gauge_update(gauge_update(f, "X"), "X") == f
    assert gauge_update(f, "X") != f
    hh = gauge_update(gauge_update(f, "H"), "H")
    assert hh.rotation == (2,)
    assert (hh.x_bit, hh.z_bit) == (f.x_bit, f.z_bit)
    with pytest.raises(ValueError):
        gauge_update(PauliFrame(tesseract(0.35)), "H")


def test_z_readout_after_h_measures_x(cw):
    h = gauge_update(PauliFrame(GKP), "H")
    zh = logical_readout(GKP, "Z", True, LAY, frame=h)
    x = logical_readout(GKP, "X", True, LAY)
    for w in ("+", "-", "0"):
        assert readout_probability(zh, _ket(cw, w)) == pytest.approx(readout_probability(x, _ket(cw, w)), abs=0.02)


def test_sampled_h_frame_readout_matches_x(cw):
    h = gauge_update(PauliFrame(GKP), "H")
    zh = logical_readout(GKP, "Z", True, LAY, frame=h)
    x = logical_readout(GKP, "X", True, LAY)
    shots = 10_000
    ket = _ket(cw, "+")
    batch = np.repeat(ket.tensor[None], shots, axis=0)
    ex = Executor(LAY)
    a = ex.run_batch(zh, batch, make_rngs(1, 0, shots)).outcomes.mean()
    b = ex.run_batch(x, batch, make_rngs(2, 0, shots)).outcomes.mean()
    assert abs(a - b) < 0.02
    assert (a < 0.5) == (b < 0.5)


def test_x_frame_flips_readout_label(cw):
    fx = gauge_update(PauliFrame(GKP), "X")
    z = logical_readout(GKP, "Z", True, LAY, frame=fx)
    assert z.steps[-1].invert
    # frame says "X applied", so |1_L> reads as logical 0
    assert readout_probability(z, _ket(cw, "1")) >= 0.95


def test_gaussian_two_mode_generators():
    lay = SpaceLayout.oscillators(6, 6, aux=False)
    assert np.allclose(gaussian_two_mode("bs", 1.0, 0.0, lay).entries, np.eye(36))
    u = gaussian_two_mode("beam_splitter", 1.0, math.pi / 2, lay).entries
    s10 = basis_state(lay, (1, 0)).amplitudes
    s01 = basis_state(lay, (0, 1)).amplitudes
    assert abs(abs(np.vdot(s01, u @ s10)) - 1) < 1e-10
    rng = np.random.default_rng(0)
    v = np.zeros((6, 6), dtype=complex)
    v[:3, :3] = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    psi = QuantumState(lay, v.reshape(-1))
    n_tot = embed(number(6), 0, lay).entries + embed(number(6), 1, lay).entries
    ub = gaussian_two_mode("bs", 0.3 + 0.4j, 1.7, lay)
    out = QuantumState(lay, ub.entries @ psi.amplitudes)
    assert abs(expectation(out, type(ub)(lay, n_tot)) - expectation(psi, type(ub)(lay, n_tot))) < 1e-10
    with pytest.raises(NumericRangeError):
        gaussian_two_mode("tms", 1.0, 1e3, lay)


def test_two_mode_squeezing_photon_difference_conserved():
    lay = SpaceLayout.oscillators(30, 30, aux=False)
    u = gaussian_two_mode("tms", 0.5j, 0.4, lay)
    out = u.entries @ basis_state(lay, (0, 0)).amplitudes
    pops = np.abs(out.reshape(30, 30)) ** 2
    assert np.sum(np.abs(pops - np.diag(np.diag(pops)))) < 1e-12
    n1 = np.sum(np.arange(30) * pops.sum(axis=1))
    assert n1 == pytest.approx(math.sinh(0.2) ** 2, rel=1e-6)
    with pytest.raises(NumericRangeError):
        gaussian_two_mode("tms", 1.0, 3.0, lay)


def test_encode_depth_one_reaches_conditional_displacement():
    lay = SpaceLayout.oscillators(30)
    target = QuantumState(SpaceLayout((30,)), coherent_vector(0.6, 30))
    res = encode_logical(target, "0", 1, lay, optimizer_budget=3000, seed=0)
    assert res.fidelity >= 0.999 and res.converged


def test_encode_depth_zero_is_flagged():
    lay = SpaceLayout.oscillators(30)
    target = QuantumState(SpaceLayout((30,)), coherent_vector(0.8, 30))
    res = encode_logical(target, "0", 0, lay, optimizer_budget=50)
    assert not res.converged
    assert res.fidelity == pytest.approx(abs(target.amplitudes[0]) ** 2, abs=1e-12)


def test_encode_rejects_depth_above_ten():
    with pytest.raises(ValueError):
        encode_logical(QuantumState(SpaceLayout((10,)), np.eye(10)[0]), "0", 11, SpaceLayout.oscillators(10))


def _frame_reference(cw, which, frame):
    code = cw.code
    r = frame.reduced_shift()
    dims = cw.layout.mode_dims
    f = [dressed_mode_factor(complex(r[k]), code.delta, dims[k]) for k in range(code.mode_count)]
    v = apply_mode_factors(f, cw.logical_state(which).tensor).reshape(-1)
    return v / np.linalg.norm(v)


def _trace_distance(rho, v):
    ev = np.linalg.eigvalsh(rho - np.outer(v, v.conj()))
    return 0.5 * np.sum(np.abs(ev))


def test_codeword_fixed_point_over_twenty_rounds(cw):
    rho = _ket(cw, "0").to_density()
    circuits, frames = sbs_schedule(GKP, LAY, 20)
    for c in circuits:
        rho, _ = run_circuit(c, rho)
    osc = oscillator_part(rho)
    assert _trace_distance(osc.entries, _frame_reference(cw, "0", frames[-1])) < 0.02
