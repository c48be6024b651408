"""Tensor kernels shared by the channel and execution code.

States are handled as batches: a ket batch has shape ``(B, *mode_dims)``.
A density matrix is pushed through the same kernels by treating its columns
as a batch of kets (see :func:`sandwich`).
"""

from __future__ import annotations

import functools

import numpy as np

from .fock import displacement_kit


@functools.lru_cache(maxsize=512)
def displacement_matrix(beta: complex, dim: int) -> np.ndarray:
    m = displacement_kit(dim).matrix(complex(beta))
    m.setflags(write=False)
    return m


def apply_local(batch: np.ndarray, mat: np.ndarray, subsystem: int) -> np.ndarray:
    """Apply ``mat`` to one subsystem of every ket in the batch."""
    ax = subsystem + 1
    return np.moveaxis(np.tensordot(mat, batch, axes=([1], [ax])), 0, ax)


def apply_displacements(batch: np.ndarray, betas, dims) -> np.ndarray:
    """Product displacement over the leading modes; ``batch`` has no aux axis."""
    out = batch
    for k, b in enumerate(betas):
        if b != 0:
            out = apply_local(out, displacement_matrix(complex(b), dims[k]), k)
    return out


def apply_ecd(batch: np.ndarray, betas, dims) -> np.ndarray:
    """D(b/2)|e><g| + D(-b/2)|g><e|; aux is the last axis."""
    half = [b / 2 for b in betas]
    out = np.empty_like(batch)
    out[..., 1] = apply_displacements(batch[..., 0], half, dims)
    out[..., 0] = apply_displacements(batch[..., 1], [-h for h in half], dims)
    return out


def apply_cond_displacement(batch: np.ndarray, betas, dims) -> np.ndarray:
    """D(b/2)|g><g| + D(-b/2)|e><e|."""
    half = [b / 2 for b in betas]
    out = np.empty_like(batch)
    out[..., 0] = apply_displacements(batch[..., 0], half, dims)
    out[..., 1] = apply_displacements(batch[..., 1], [-h for h in half], dims)
    return out


def sandwich(rho: np.ndarray, dims, ket_op) -> np.ndarray:
    """K rho K^dag for Hermitian ``rho`` of shape (D, D), given ``ket_op`` acting on a ket batch.

    Rows of rho^T are the columns of rho, so applying K to them gives (K rho)^T.
    The rows of conj(K rho) are the columns of (K rho)^dag, and applying K to
    those gives (K rho K^dag)^T.
    """
    d = rho.shape[0]
    a = ket_op(rho.T.reshape((d,) + tuple(dims))).reshape(d, d)
    b = ket_op(a.T.conj().reshape((d,) + tuple(dims))).reshape(d, d)
    return b.T


def batch_norms(batch: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(batch.reshape(batch.shape[0], -1)) ** 2, axis=1))
