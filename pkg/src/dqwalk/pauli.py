"""Pauli-basis (Bloch) representation of coin operators and superoperators.

A 2x2 coin operator O is stored as the real/complex 4-vector r with
O = sum_i r_i sigma_i, where (sigma_0..sigma_3) = (I, X, Y, Z).  Linear maps
on coin operators then become 4x4 matrices acting on these vectors, which is
the representation the moment engine works in.
"""

from __future__ import annotations

import numpy as np

from .errors import UnnormalizedCoinError

# Basis order is load-bearing: index 0 is the identity, so the top row of any
# trace-preserving map is (1, 0, 0, 0) and Tr(O) = 2 * r_0.
PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

#: Named initial coin states as Pauli 4-vectors of the density matrix.
COIN_PRESETS = {
    "R": (0.5, 0.0, 0.0, 0.5),
    "L": (0.5, 0.0, 0.0, -0.5),
    "symmetric": (0.5, 0.0, 0.5, 0.0),
    "mixed": (0.5, 0.0, 0.0, 0.0),
}


def to_pauli(op: np.ndarray) -> np.ndarray:
    """Expand a (..., 2, 2) operator into Pauli coordinates r_i = Tr(sigma_i O) / 2."""
    return 0.5 * np.einsum("iab,...ba->...i", PAULI, np.asarray(op, dtype=complex))

def from_pauli(vec: np.ndarray) -> np.ndarray:
    """Rebuild the (..., 2, 2) operator from Pauli coordinates."""
    return np.einsum("...i,iab->...ab", np.asarray(vec, dtype=complex), PAULI)

def trace(vec: np.ndarray) -> np.ndarray:
    """Trace of the operator encoded by ``vec``: 2 * r_0."""
    return 2.0 * np.asarray(vec)[..., 0]


def identity_superop() -> np.ndarray:
    """The 4x4 identity map."""
    return np.eye(4, dtype=complex)

def apply(superop: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Apply a (..., 4, 4) map to a (..., 4) Pauli vector."""
    return np.matmul(superop, vec[..., None])[..., 0]

def compose(after: np.ndarray, before: np.ndarray) -> np.ndarray:
    """Composition (after o before) of two maps."""
    return after @ before

def superop_power(superop: np.ndarray, n: int) -> np.ndarray:
    """n-fold composition of a single 4x4 map with itself."""
    return np.linalg.matrix_power(superop, n)


def left_mult(op: np.ndarray) -> np.ndarray:
    """Matrix of the map O -> A @ O in the Pauli basis."""
    return sandwich_superop(np.asarray(op, dtype=complex)[None], PAULI[0][None])

def right_mult(op: np.ndarray) -> np.ndarray:
    """Matrix of the map O -> O @ A in the Pauli basis.

    Note: right multiplication by A, not by A^dag; the sandwich helper
    conjugates its right factor, hence the adjoint below.
    """
    return sandwich_superop(PAULI[0][None], np.asarray(op, dtype=complex).conj().T[None])


def sandwich_superop(lefts: np.ndarray, rights: np.ndarray) -> np.ndarray:
    """Pauli matrix of the map O -> sum_n L_n @ O @ R_n^dag.

    ``lefts`` and ``rights`` have shape (n, ..., 2, 2) with a shared leading
    Kraus axis; any extra batch axes (e.g. a momentum grid) are carried
    through to the output, which has shape (..., 4, 4).  Column j holds the
    Pauli coordinates of sum_n L_n sigma_j R_n^dag.
    """
    lefts = np.asarray(lefts, dtype=complex)
    rights = np.asarray(rights, dtype=complex)
    return 0.5 * np.einsum(
        "iab,m...bc,jcd,m...ad->...ij", PAULI, lefts, PAULI, rights.conj()
    )


def coin_state(coin) -> np.ndarray:
    """Resolve a coin specification into a validated Pauli 4-vector.

    Accepts a preset name from ``COIN_PRESETS``, a length-2 amplitude vector
    (a pure state), a length-4 Pauli vector, or a 2x2 density matrix.
    """
    if isinstance(coin, str):
        try:
            vec = np.array(COIN_PRESETS[coin], dtype=float)
        except KeyError:
            raise UnnormalizedCoinError(
                f"unknown coin preset {coin!r}; options: {sorted(COIN_PRESETS)}"
            ) from None
        return vec
    arr = np.asarray(coin, dtype=complex)
    if arr.shape == (2,):
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > 1e-12:
            raise UnnormalizedCoinError(f"amplitude norm is {norm!r}, expected 1")
        vec = to_pauli(np.outer(arr, arr.conj()))
    elif arr.shape == (4,):
        vec = arr
    elif arr.shape == (2, 2):
        if np.max(np.abs(arr - arr.conj().T)) > 1e-12:
            raise UnnormalizedCoinError("coin density matrix is not Hermitian")
        vec = to_pauli(arr)
    else:
        raise UnnormalizedCoinError(f"cannot interpret shape {arr.shape} as a coin state")
    return validate_coin_state(vec)


def validate_coin_state(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Check that ``vec`` encodes a unit-trace, Hermitian, positive coin density.

    Returns the vector as a real float array (the imaginary parts must be
    negligible for a Hermitian operator).
    """
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (4,):
        raise UnnormalizedCoinError(f"coin state must be a 4-vector, got shape {vec.shape}")
    if np.max(np.abs(vec.imag)) > tol:
        raise UnnormalizedCoinError("coin density has non-real Pauli coordinates")
    real = vec.real.copy()
    if abs(real[0] - 0.5) > tol:
        raise UnnormalizedCoinError(f"coin trace is {2 * real[0]!r}, expected 1")
    bloch_sq = float(np.dot(real[1:], real[1:]))
    if bloch_sq > 0.25 + 1e-9:
        raise UnnormalizedCoinError("coin density is not positive semidefinite")
    return real
