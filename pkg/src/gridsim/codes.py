"""Grid codes as phase-space data, finite-energy dressing and codewords.

Every stabilizer and logical is stored as the alpha-vector of a multimode
displacement ``D(alpha_1) x ... x D(alpha_m)``. Two displacements satisfy
``D(a) D(b) = exp(2i Im(a b*)) D(b) D(a)``, and :func:`symplectic_phase`
returns that commutation phase.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstructionQualityError, InvalidDimensionError, LayoutMismatchError, NumericRangeError
from .fock import (
    QuantumState,
    OperatorMatrix,
    SpaceLayout,
    annihilation,
    check_truncation,
    displacement_kit,
    matrix_exponential,
    tensor_product,
)

LATTICE_CONSTANT = 2.0 * math.sqrt(math.pi)
CONSTRUCTION_FLOOR = 0.99


@dataclass(frozen=True)
class PhaseSpaceVector:
    alphas: tuple[complex, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))

    def __len__(self):
        return len(self.alphas)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.alphas, dtype=complex)

    def scaled(self, factor: complex, label: str | None = None) -> "PhaseSpaceVector":
        return PhaseSpaceVector(tuple(factor * a for a in self.alphas), self.label if label is None else label)

    def rotated(self, quarter_turns: Sequence[int]) -> "PhaseSpaceVector":
        """Rotate mode k's phase space by ``quarter_turns[k]`` * 90 degrees."""
        return PhaseSpaceVector(
            tuple(a * (1j) ** (int(r) % 4) for a, r in zip(self.alphas, quarter_turns)), self.label
        )

    def to_pairs(self) -> list[list[float]]:
        return [[a.real, a.imag] for a in self.alphas]

    @classmethod
    def from_pairs(cls, pairs, label="") -> "PhaseSpaceVector":
        return cls(tuple(complex(re, im) for re, im in pairs), label)


def symplectic_phase(a: PhaseSpaceVector | np.ndarray, b: PhaseSpaceVector | np.ndarray) -> float:
    """Commutation phase 2 Im(sum_k a_k b_k*) of two multimode displacements."""
    va = a.array if isinstance(a, PhaseSpaceVector) else np.asarray(a, dtype=complex)
    vb = b.array if isinstance(b, PhaseSpaceVector) else np.asarray(b, dtype=complex)
    if va.shape != vb.shape:
        raise LayoutMismatchError("phase-space vectors have different mode counts")
    return float(2.0 * np.imag(np.sum(va * np.conj(vb))))


def phase_multiple(phase: float, unit: float = math.pi, tol: float = 1e-9) -> int | None:
    """Integer m with phase = m * unit, or None when it is not a multiple."""
    m = phase / unit
    r = round(m)
    return int(r) if abs(m - r) < tol else None


def are_parallel(a: PhaseSpaceVector, b: PhaseSpaceVector, tol: float = 1e-9) -> bool:
    """True when the real 2m-dimensional phase-space vectors are collinear."""
    ra = np.concatenate([a.array.real, a.array.imag])
    rb = np.concatenate([b.array.real, b.array.imag])
    na, nb = np.linalg.norm(ra), np.linalg.norm(rb)
    if na == 0 or nb == 0:
        return True
    return abs(abs(ra @ rb) / (na * nb) - 1.0) < tol


@dataclass(frozen=True)
class CodeSpec:
    name: str
    mode_count: int
    l: float
    delta: float
    stabilizers: tuple[PhaseSpaceVector, ...]
    logical_x: PhaseSpaceVector
    logical_z: PhaseSpaceVector

    def __post_init__(self):
        object.__setattr__(self, "stabilizers", tuple(self.stabilizers))
        for v in (*self.stabilizers, self.logical_x, self.logical_z):
            if len(v) != self.mode_count:
                raise LayoutMismatchError(f"vector {v.label!r} has {len(v)} modes, code has {self.mode_count}")

    @property
    def logical_y(self) -> PhaseSpaceVector:
        # D(x)D(z) = e^{i Im(x z*)} D(x+z); Y = iXZ is D(x+z) up to a real sign.
        return PhaseSpaceVector(tuple(x + z for x, z in zip(self.logical_x.alphas, self.logical_z.alphas)), "Y")

    def pauli(self, which: str) -> PhaseSpaceVector:
        return {"X": self.logical_x, "Z": self.logical_z, "Y": self.logical_y}[which.upper()]

    def stabilizer_labels(self) -> list[str]:
        return [s.label for s in self.stabilizers]

    def with_delta(self, delta: float) -> "CodeSpec":
        return {"gkp": gkp_square, "tesseract": tesseract}[self.name](delta)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode_count": self.mode_count,
            "l": self.l,
            "delta": self.delta,
            "stabilizers": [{"label": s.label, "alphas": s.to_pairs()} for s in self.stabilizers],
            "logical_x": {"label": self.logical_x.label, "alphas": self.logical_x.to_pairs()},
            "logical_z": {"label": self.logical_z.label, "alphas": self.logical_z.to_pairs()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        def vec(e):
            return PhaseSpaceVector.from_pairs(e["alphas"], e.get("label", ""))

        return cls(
            name=d["name"],
            mode_count=int(d["mode_count"]),
            l=float(d["l"]),
            delta=float(d["delta"]),
            stabilizers=tuple(vec(e) for e in d["stabilizers"]),
            logical_x=vec(d["logical_x"]),
            logical_z=vec(d["logical_z"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def gkp_square(delta: float) -> CodeSpec:
    """Square single-mode GKP code with T_q = exp(i l q) and T_p = exp(-i l p)."""
    _check_delta(delta)
    l = LATTICE_CONSTANT
    s2 = math.sqrt(2.0)
    return CodeSpec(
        name="gkp",
        mode_count=1,
        l=l,
        delta=float(delta),
        stabilizers=(
            PhaseSpaceVector((1j * l / s2,), "Tq"),
            PhaseSpaceVector((l / s2,), "Tp"),
        ),
        logical_x=PhaseSpaceVector((l / (2 * s2),), "X"),
        logical_z=PhaseSpaceVector((1j * l / (2 * s2),), "Z"),
    )


def tesseract(delta: float) -> CodeSpec:
    """Two-mode Tesseract code; mode 0 carries (q1, p1), mode 1 carries (q2, p2)."""
    _check_delta(delta)
    l = LATTICE_CONSTANT
    s2 = math.sqrt(2.0)
    r14, r34, r54 = 2 ** 0.25, 2 ** 0.75, 2 ** 1.25
    # exp(-i v p) -> D(v/sqrt2), exp(i u q) -> D(i u/sqrt2)
    t = l / (s2 * r14)
    c = l / (s2 * r34)
    x = l / (s2 * r54)
    return CodeSpec(
        name="tesseract",
        mode_count=2,
        l=l,
        delta=float(delta),
        stabilizers=(
            PhaseSpaceVector((t, 0.0), "T1"),
            PhaseSpaceVector((1j * c, 1j * c), "T2"),
            PhaseSpaceVector((0.0, t), "T3"),
            PhaseSpaceVector((1j * c, -1j * c), "T4"),
        ),
        logical_x=PhaseSpaceVector((x, x), "X"),
        logical_z=PhaseSpaceVector((1j * c, 0.0), "Z"),
    )


def code_by_name(name: str, delta: float) -> CodeSpec:
    try:
        return {"gkp": gkp_square, "tesseract": tesseract}[name.lower()](delta)
    except KeyError:
        raise ValueError(f"unknown code {name!r}; expected 'gkp' or 'tesseract'") from None


def mean_photon_estimate(delta: float) -> float:
    """Approximate mean photon number 1/(2 delta^2) - 1/2 of a finite-energy grid state."""
    return 1.0 / (2.0 * delta**2) - 0.5


# --- finite-energy dressing ------------------------------------------------


@functools.lru_cache(maxsize=256)
def dressed_mode_factor(alpha: complex, delta: float, dim: int) -> np.ndarray:
    """E D(alpha) E^-1 on one mode, with E = exp(-delta^2 n).

    The similarity transform sends a -> e^{delta^2} a and a^dag -> e^{-delta^2} a^dag,
    so the result is the exponential of the transformed generator.
    """
    if delta == 0:
        out = displacement_kit(dim).matrix(alpha)
        out.setflags(write=False)
        return out
    a = annihilation(dim).entries
    k = delta**2
    gen = alpha * math.exp(-k) * a.conj().T - np.conj(alpha) * math.exp(k) * a
    out = matrix_exponential(gen)
    out.setflags(write=False)
    return out


def _mode_positions(layout: SpaceLayout, n_vec: int) -> list[int]:
    if layout.n_modes < n_vec:
        raise LayoutMismatchError(f"layout has {layout.n_modes} oscillator modes, vector needs {n_vec}")
    return list(range(n_vec))


def dress_finite_energy(vec: PhaseSpaceVector, delta: float, layout: SpaceLayout) -> OperatorMatrix:
    """E_delta D(vec) E_delta^-1 with the envelope applied on every mode (non-unitary)."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta > 1:
        raise NumericRangeError(f"delta = {delta} > 1 makes the dressed operator numerically extreme")
    _mode_positions(layout, len(vec))
    factors = []
    for i, d in enumerate(layout.mode_dims):
        if i < len(vec):
            factors.append(dressed_mode_factor(vec.alphas[i], float(delta), d))
        else:
            factors.append(np.eye(d))
    return tensor_product(factors, layout)


def apply_mode_factors(factors: Sequence[np.ndarray], tensor: np.ndarray, first_axis: int = 0) -> np.ndarray:
    """Apply per-mode matrices to axes ``first_axis + k`` of a state tensor."""
    out = tensor
    for k, m in enumerate(factors):
        ax = first_axis + k
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
    return out


def dressed_expectation(vec: PhaseSpaceVector, delta: float, state) -> complex:
    """<vec_delta> on a ket or density matrix whose first modes match ``vec``."""
    layout = state.layout
    dims = layout.mode_dims
    factors = [dressed_mode_factor(vec.alphas[i], float(delta), dims[i]) for i in range(len(vec))]
    if isinstance(state, QuantumState):
        t = state.tensor
        return complex(np.vdot(t, apply_mode_factors(factors, t)))
    rho = state.tensor
    out = apply_mode_factors(factors, rho)
    return complex(np.trace(out.reshape(layout.dim, layout.dim)))


# --- codewords ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CodeWords:
    ket_zero: QuantumState
    ket_one: QuantumState
    achieved: tuple[float, ...] = ()
    code: CodeSpec | None = field(default=None, repr=False)

    @property
    def layout(self) -> SpaceLayout:
        return self.ket_zero.layout

    def logical_state(self, which: str | int) -> QuantumState:
        """0, 1, plus, minus, i or -i as a normalized oscillator state."""
        z, o = self.ket_zero.amplitudes, self.ket_one.amplitudes
        s = 1 / math.sqrt(2)
        table = {
            "0": (1, 0),
            "1": (0, 1),
            "plus": (s, s),
            "+": (s, s),
            "minus": (s, -s),
            "-": (s, -s),
            "i": (s, 1j * s),
            "+i": (s, 1j * s),
            "-i": (s, -1j * s),
        }
        key = str(which).lower()
        if key not in table:
            raise ValueError(f"unknown logical state {which!r}")
        c0, c1 = table[key]
        return QuantumState(self.layout, c0 * z + c1 * o)


def _hermite_functions(dim: int, xs: np.ndarray) -> np.ndarray:
    """psi_n(x) for n < dim, stable three-term recurrence."""
    psi = np.zeros((dim, xs.size))
    psi[0] = np.pi**-0.25 * np.exp(-(xs**2) / 2)
    if dim > 1:
        psi[1] = math.sqrt(2.0) * xs * psi[0]
    for n in range(1, dim - 1):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * xs * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _comb_fock(dim: int, spacing: float, offset: float) -> np.ndarray:
    """Fock coefficients of sum_j |q = offset + j*spacing> restricted to dim levels."""
    xmax = math.sqrt(2 * dim + 1) + 12.0
    j = np.arange(math.floor((-xmax - offset) / spacing), math.ceil((xmax - offset) / spacing) + 1)
    xs = offset + spacing * j
    return _hermite_functions(dim, xs).sum(axis=1)


def _comb_structure(code: CodeSpec):
    """Per-mode position-comb spacing and logical-one offset.

    Requires one purely real (q-translating) stabilizer per mode acting on that
    mode alone, and a real logical X; both shipped codes satisfy this.
    """
    s2 = math.sqrt(2.0)
    spacings = []
    for k in range(code.mode_count):
        cands = [
            abs(s.alphas[k]) * s2
            for s in code.stabilizers
            if abs(s.alphas[k].imag) < 1e-12 and abs(s.alphas[k]) > 0
            and all(abs(s.alphas[j]) < 1e-12 for j in range(code.mode_count) if j != k)
        ]
        if not cands:
            raise ValueError(f"code {code.name!r} has no mode-local q-translation on mode {k}")
        spacings.append(min(cands))
    if np.any(np.abs(code.logical_x.array.imag) > 1e-12):
        raise ValueError("logical X must be a pure q-translation for comb construction")
    offsets = [s2 * a.real for a in code.logical_x.alphas]
    return spacings, offsets


def construct_codewords(code: CodeSpec, layout: SpaceLayout, floor: float = CONSTRUCTION_FLOOR) -> CodeWords:
    """Finite-energy codewords |mu_delta> = E_delta |mu_ideal>, orthonormalized.

    The ideal codeword is a lattice comb of position eigenstates; its Fock
    coefficients follow from Hermite functions at the lattice points, and the
    envelope is then the diagonal factor exp(-delta^2 n). Raises
    ConstructionQualityError if any dressed stabilizer expectation falls below
    ``floor`` times its ideal value of 1.
    """
    osc = layout.without_aux() if layout.has_aux else layout
    if osc.n_modes != code.mode_count:
        raise LayoutMismatchError(f"layout has {osc.n_modes} oscillator modes, code needs {code.mode_count}")
    spacings, offsets = _comb_structure(code)
    words = []
    for mu in (0, 1):
        factors = []
        for k, dim in enumerate(osc.mode_dims):
            c = _comb_fock(dim, spacings[k], mu * offsets[k])
            c = c * np.exp(-code.delta**2 * np.arange(dim))
            factors.append(c / np.linalg.norm(c))
        v = factors[0]
        for f in factors[1:]:
            v = np.kron(v, f)
        words.append(v.astype(complex))
    z, o = words
    o = o - np.vdot(z, o) * z
    o /= np.linalg.norm(o)
    ket0, ket1 = QuantumState(osc, z), QuantumState(osc, o)
    check_truncation(ket0, "codeword |0>")
    achieved = []
    for s in code.stabilizers:
        for ket in (ket0, ket1):
            achieved.append(dressed_expectation(s, code.delta, ket).real)
    if min(achieved) < floor:
        raise ConstructionQualityError(
            f"stabilizer expectation {min(achieved):.4f} below floor {floor}; raise the truncation",
            achieved,
        )
    return CodeWords(ket0, ket1, tuple(achieved), code)


def binomial_11_codewords(dim: int) -> CodeWords:
    """|0> = (|0> + |4>)/sqrt2 and |1> = |2>."""
    if dim < 5:
        raise InvalidDimensionError(f"binomial codewords need dim >= 5, got {dim}")
    layout = SpaceLayout((dim,))
    z = np.zeros(dim, dtype=complex)
    z[0] = z[4] = 1 / math.sqrt(2)
    o = np.zeros(dim, dtype=complex)
    o[2] = 1
    return CodeWords(QuantumState(layout, z), QuantumState(layout, o))
