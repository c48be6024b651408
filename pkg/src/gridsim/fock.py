"""Truncated Fock-space linear algebra.

Quadrature convention used everywhere in the package::

    q = (a + a^dag) / sqrt(2),   p = i (a^dag - a) / sqrt(2),   [q, p] = i

so that ``exp(i u q) = D(i u / sqrt(2))`` and ``exp(-i v p) = D(v / sqrt(2))``.
Phase-space vectors are therefore stored in "alpha units" (displacement
amplitudes), and a quadrature shift of ``x`` corresponds to ``|alpha| = x / sqrt(2)``.

The auxiliary two-level system uses index 0 for |g> and 1 for |e>.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    InvalidDimensionError,
    LayoutMismatchError,
    NumericRangeError,
    TruncationWarning,
)

SQRT2 = np.sqrt(2.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|

TAIL_FRACTION = 0.1
TAIL_THRESHOLD = 1e-6


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions of a composite space.

    When ``has_aux`` is set, the last subsystem is the two-level auxiliary and
    every other subsystem is an oscillator.
    """

    mode_dims: tuple[int, ...]
    has_aux: bool = False

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        object.__setattr__(self, "mode_dims", dims)
        if not dims:
            raise InvalidDimensionError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every dimension must be >= 2, got {dims}")
        if self.has_aux and dims[-1] != 2:
            raise InvalidDimensionError("auxiliary subsystem must have dimension 2")

    @classmethod
    def oscillators(cls, *dims: int, aux: bool = True) -> "SpaceLayout":
        return cls(tuple(dims) + ((2,) if aux else ()), has_aux=aux)

    @property
    def dim(self) -> int:
        return int(np.prod(self.mode_dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.mode_dims)

    @property
    def n_modes(self) -> int:
        """Number of oscillator modes."""
        return self.n_subsystems - (1 if self.has_aux else 0)

    @property
    def oscillator_dims(self) -> tuple[int, ...]:
        return self.mode_dims[: self.n_modes]

    @property
    def aux_index(self) -> int:
        if not self.has_aux:
            raise LayoutMismatchError("layout has no auxiliary subsystem")
        return self.n_subsystems - 1

    def without_aux(self) -> "SpaceLayout":
        return SpaceLayout(self.oscillator_dims, has_aux=False)

    def to_dict(self) -> dict:
        return {"mode_dims": list(self.mode_dims), "has_aux": self.has_aux}


def _check_layouts(a: SpaceLayout, b: SpaceLayout):
    if a != b:
        raise LayoutMismatchError(f"layout mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class QuantumState:
    layout: SpaceLayout
    amplitudes: np.ndarray
    is_normalized: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.dim:
            raise LayoutMismatchError(
                f"amplitude length {amps.size} != layout dimension {self.layout.dim}"
            )
        if self.is_normalized:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > 1e-12:
                if norm == 0:
                    raise InvalidDimensionError("cannot normalize the zero vector")
                amps = amps / norm
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_tensor(cls, layout, tensor, normalize=True) -> "QuantumState":
        return cls(layout, np.asarray(tensor).reshape(-1), is_normalized=normalize)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.mode_dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        return QuantumState(self.layout, self.amplitudes, is_normalized=True)

    def overlap(self, other: "QuantumState") -> complex:
        _check_layouts(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise LayoutMismatchError(
                f"operator shape {m.shape} does not match layout dimension {self.layout.dim}"
            )
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_layouts(self.layout, other.layout)
            return OperatorMatrix(self.layout, self.entries @ other.entries)
        if isinstance(other, QuantumState):
            _check_layouts(self.layout, other.layout)
            return QuantumState(self.layout, self.entries @ other.amplitudes, is_normalized=False)
        return NotImplemented

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.entries.conj().T)

    def unitarity_error(self) -> float:
        m = self.entries
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SpaceLayout
    entries: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise LayoutMismatchError(
                f"density matrix shape {m.shape} does not match layout dimension {self.layout.dim}"
            )
        object.__setattr__(self, "entries", m)
        if self.check:
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(m) - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
            if np.linalg.eigvalsh(m).min() < -1e-10:
                raise ValueError("density matrix has negative eigenvalues")

    @classmethod
    def from_state(cls, state: QuantumState) -> "DensityMatrix":
        return state.to_density()

    @property
    def tensor(self) -> np.ndarray:
        dims = self.layout.mode_dims
        return self.entries.reshape(dims + dims)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))


# --- single-mode operators -------------------------------------------------


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {dim}")
    return int(dim)


def annihilation(dim: int) -> OperatorMatrix:
    dim = _check_dim(dim)
    return OperatorMatrix(SpaceLayout((dim,)), np.diag(np.sqrt(np.arange(1, dim)), 1))


def creation(dim: int) -> OperatorMatrix:
    return annihilation(dim).dag()


def number(dim: int) -> OperatorMatrix:
    dim = _check_dim(dim)
    return OperatorMatrix(SpaceLayout((dim,)), np.diag(np.arange(dim, dtype=float)))


def identity(layout: SpaceLayout) -> OperatorMatrix:
    return OperatorMatrix(layout, np.eye(layout.dim))


def quadratures(dim: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    a = annihilation(dim).entries
    ad = a.conj().T
    layout = SpaceLayout((dim,))
    return OperatorMatrix(layout, (a + ad) / SQRT2), OperatorMatrix(layout, 1j * (ad - a) / SQRT2)


class _DisplacementKit:
    """Exact truncated-space displacements from one eigendecomposition of p.

    In the truncated space ``beta a^dag - beta* a = e^{i theta n} r (a^dag - a) e^{-i theta n}``
    with ``beta = r e^{i theta}``, and ``a^dag - a = -i sqrt(2) p``. Diagonalising the
    truncated p once makes every displacement a diagonal phase sandwich.
    """

    def __init__(self, dim: int):
        _, p = quadratures(dim)
        lam, w = np.linalg.eigh(p.entries)
        self.dim = dim
        self.lam = lam
        self.w = w
        self.wh = w.conj().T
        self.n = np.arange(dim)

    def matrix(self, beta: complex) -> np.ndarray:
        r, theta = abs(beta), np.angle(beta)
        core = (self.w * np.exp(-1j * SQRT2 * r * self.lam)) @ self.wh
        ph = np.exp(1j * theta * self.n)
        return ph[:, None] * core * ph.conj()[None, :]

    def apply(self, beta: complex, vecs: np.ndarray) -> np.ndarray:
        """Apply D(beta) to the leading axis of ``vecs``; O(dim^2) per column."""
        r, theta = abs(beta), np.angle(beta)
        ph = np.exp(1j * theta * self.n)
        shape = vecs.shape
        v = vecs.reshape(self.dim, -1) * ph.conj()[:, None]
        v = self.wh @ v
        v *= np.exp(-1j * SQRT2 * r * self.lam)[:, None]
        v = self.w @ v
        return (v * ph[:, None]).reshape(shape)


@functools.lru_cache(maxsize=16)
def displacement_kit(dim: int) -> _DisplacementKit:
    return _DisplacementKit(_check_dim(dim))


def displacement(alpha: complex, dim: int) -> OperatorMatrix:
    """D(alpha) = exp(alpha a^dag - alpha* a) in the ``dim``-level truncated space.

    Accuracy near the truncation edge is the caller's concern; keep
    ``|alpha|^2`` well below ``dim``.
    """
    dim = _check_dim(dim)
    return OperatorMatrix(SpaceLayout((dim,)), displacement_kit(dim).matrix(complex(alpha)))


def embed(op: OperatorMatrix | np.ndarray, subsystem_index: int, layout: SpaceLayout) -> OperatorMatrix:
    """Lift a single-subsystem operator to ``layout`` (identity elsewhere)."""
    m = op.entries if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)
    if not 0 <= subsystem_index < layout.n_subsystems:
        raise IndexError(f"subsystem index {subsystem_index} out of range for {layout.mode_dims}")
    if m.shape != (layout.mode_dims[subsystem_index],) * 2:
        raise LayoutMismatchError(
            f"operator side {m.shape[0]} != subsystem dimension {layout.mode_dims[subsystem_index]}"
        )
    dims = layout.mode_dims
    before = int(np.prod(dims[:subsystem_index]))
    after = int(np.prod(dims[subsystem_index + 1 :]))
    full = np.kron(np.kron(np.eye(before), m), np.eye(after))
    return OperatorMatrix(layout, full)


def tensor_product(ops: Sequence[np.ndarray], layout: SpaceLayout) -> OperatorMatrix:
    """Kronecker product of one operator per subsystem, in layout order."""
    if len(ops) != layout.n_subsystems:
        raise LayoutMismatchError("need one factor per subsystem")
    full = np.ones((1, 1), dtype=complex)
    for m in ops:
        full = np.kron(full, m)
    return OperatorMatrix(layout, full)


def matrix_exponential(gen: OperatorMatrix | np.ndarray, scale: complex = 1.0):
    """exp(scale * gen) by scaling and squaring with a degree-13 Pade approximant.

    Returns the same type it was given. Raises NumericRangeError when the
    input or result is not finite.
    """
    m = gen.entries if isinstance(gen, OperatorMatrix) else np.asarray(gen, dtype=complex)
    if not np.all(np.isfinite(m)) or not np.isfinite(scale):
        raise NumericRangeError("matrix exponential input is not finite")
    a = complex(scale) * m
    # ||exp(A)|| <= exp(mu) with mu the top eigenvalue of the Hermitian part;
    # beyond ~700 float64 overflows regardless of algorithm.
    mu = np.linalg.eigvalsh((a + a.conj().T) / 2)[-1]
    if mu > 700:
        raise NumericRangeError(f"matrix exponential would overflow (log-norm bound {mu:.3g})")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = scipy.linalg.expm(a)
        except FloatingPointError as exc:
            raise NumericRangeError(f"matrix exponential overflowed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericRangeError("matrix exponential overflowed")
    if isinstance(gen, OperatorMatrix):
        return OperatorMatrix(gen.layout, out)
    return out


def expectation(state: QuantumState | DensityMatrix, op: OperatorMatrix) -> complex:
    _check_layouts(state.layout, op.layout)
    if isinstance(state, QuantumState):
        v = state.amplitudes
        return complex(np.vdot(v, op.entries @ v))
    return complex(np.sum(state.entries * op.entries.T))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    layout = rho.layout
    keep = sorted(set(int(k) for k in keep))
    n = layout.n_subsystems
    if not keep or any(k < 0 or k >= n for k in keep):
        raise IndexError(f"invalid subsystem indices {keep} for {n} subsystems")
    dims = layout.mode_dims
    t = rho.entries.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # Trace out from the highest index down so remaining axis numbers stay valid.
    current = n
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + current)
        current -= 1
    kdims = tuple(dims[k] for k in keep)
    d = int(np.prod(kdims))
    new_layout = SpaceLayout(kdims, has_aux=layout.has_aux and layout.aux_index in keep)
    return DensityMatrix(new_layout, t.reshape(d, d), check=False)


# --- states ---------------------------------------------------------------


def basis_state(layout: SpaceLayout, indices: Sequence[int]) -> QuantumState:
    t = np.zeros(layout.mode_dims, dtype=complex)
    t[tuple(indices)] = 1.0
    return QuantumState.from_tensor(layout, t)


def coherent_vector(alpha: complex, dim: int) -> np.ndarray:
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    return displacement_kit(_check_dim(dim)).apply(complex(alpha), vac)


def product_state(layout: SpaceLayout, factors: Sequence[np.ndarray]) -> QuantumState:
    if len(factors) != layout.n_subsystems:
        raise LayoutMismatchError("need one factor per subsystem")
    v = np.ones(1, dtype=complex)
    for f in factors:
        v = np.kron(v, np.asarray(f, dtype=complex))
    return QuantumState(layout, v)


def fock_populations(state: QuantumState | DensityMatrix, mode: int) -> np.ndarray:
    """Photon-number distribution of one oscillator."""
    layout = state.layout
    if isinstance(state, QuantumState):
        t = np.abs(state.tensor) ** 2
        other = tuple(i for i in range(layout.n_subsystems) if i != mode)
        return t.sum(axis=other)
    reduced = partial_trace(state, [mode])
    return np.real(np.diag(reduced.entries))


def tail_mass(state: QuantumState | DensityMatrix, mode: int, fraction: float = TAIL_FRACTION) -> float:
    pops = fock_populations(state, mode)
    cut = int(np.floor(len(pops) * (1 - fraction)))
    return float(pops[cut:].sum())


def check_truncation(state: QuantumState | DensityMatrix, context: str = "") -> list[float]:
    """Warn (never raise) when a mode's top Fock levels carry too much weight."""
    tails = [tail_mass(state, k) for k in range(state.layout.n_modes)]
    for k, t in enumerate(tails):
        if t > TAIL_THRESHOLD:
            warnings.warn(
                f"{context + ': ' if context else ''}mode {k} holds {t:.2e} of its weight "
                f"in the top {int(TAIL_FRACTION * 100)}% of Fock levels",
                TruncationWarning,
                stacklevel=2,
            )
    return tails
