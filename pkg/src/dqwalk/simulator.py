"""Brute-force density-matrix evolution on a finite window of the line.

This is the slow, obviously-correct reference implementation: the walker's
full density matrix is stored as a (N, 2, N, 2) array over (position, coin)
and each step applies the Kraus operators term by term.  The window is sized
exactly to the light cone and grows by ``channel.max_hop`` sites per side per
step, so no probability is ever lost at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import COIN_INDEX, WalkChannel
from .pauli import coin_state, from_pauli


@dataclass
class DensityState:
    """Walker state after ``t`` steps, supported on sites x_min..x_max."""

    t: int
    x_min: int
    x_max: int
    rho: np.ndarray  # complex, shape (n_sites, 2, n_sites, 2)

    @property
    def n_sites(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)


def init_state(coin, x0: int = 0) -> DensityState:
    """Point mass at site ``x0`` with the given coin state.

    ``coin`` may be a preset name ("R", "L", "symmetric", "mixed"), a
    length-2 amplitude vector, a Pauli 4-vector, or a 2x2 density matrix;
    see ``pauli.coin_state``.
    """
    rho_c = from_pauli(coin_state(coin))
    rho = np.zeros((1, 2, 1, 2), dtype=complex)
    rho[0, :, 0, :] = rho_c
    return DensityState(t=0, x_min=x0, x_max=x0, rho=rho)


def step(state: DensityState, channel: WalkChannel) -> DensityState:
    """One application of the channel; returns a new, wider state."""
    hop = channel.max_hop
    n_old = state.n_sites
    n_new = n_old + 2 * hop
    new = np.zeros((n_new, 2, n_new, 2), dtype=complex)
    for n in channel.kraus_indices:
        terms = channel.terms_for(n)
        half = np.zeros((n_new, 2, n_old, 2), dtype=complex)
        for t in terms:  # E_n rho
            i, j = COIN_INDEX[t.i], COIN_INDEX[t.j]
            lo = hop + t.l
            half[lo:lo + n_old, i, :, :] += t.amp * state.rho[:, j, :, :]
        for t in terms:  # (E_n rho) E_n^dag
            i, j = COIN_INDEX[t.i], COIN_INDEX[t.j]
            lo = hop + t.l
            new[:, :, lo:lo + n_old, i] += np.conj(t.amp) * half[:, :, :, j]
    return DensityState(
        t=state.t + 1,
        x_min=state.x_min - hop,
        x_max=state.x_max + hop,
        rho=new,
    )


def evolve(
    state: DensityState,
    channel: WalkChannel,
    steps: int,
    check_positivity: bool = False,
) -> DensityState:
    """Apply the channel ``steps`` times.

    With ``check_positivity`` the spectrum of the full density matrix is
    checked after every step (expensive; meant for diagnostics and tests).
    """
    if steps < 0:
        raise ValueError(f"step count must be nonnegative, got {steps}")
    for _ in range(steps):
        state = step(state, channel)
        if check_positivity:
            dim = 2 * state.n_sites
            lowest = np.linalg.eigvalsh(state.rho.reshape(dim, dim)).min()
            if lowest < -1e-10:
                raise ArithmeticError(
                    f"density matrix lost positivity at t={state.t}: "
                    f"lowest eigenvalue {lowest:.3g}"
                )
    return state


def position_distribution(state: DensityState) -> tuple[np.ndarray, np.ndarray]:
    """(positions, probabilities): the diagonal of rho traced over the coin."""
    probs = np.einsum("xaxa->x", state.rho).real
    return state.positions, probs


def moment_direct(state: DensityState, order: int) -> float:
    """Position moment <x^order> from the stored distribution."""
    if order < 0:
        raise ValueError(f"moment order must be nonnegative, got {order}")
    xs, probs = position_distribution(state)
    return float(np.sum(xs.astype(float) ** order * probs))


def variance_direct(state: DensityState) -> float:
    """Position variance <x^2> - <x>^2."""
    return moment_direct(state, 2) - moment_direct(state, 1) ** 2


def purity(state: DensityState) -> float:
    """Tr(rho^2); decreases (weakly) under any of these channels."""
    return float(np.einsum("xayb,ybxa->", state.rho, state.rho).real)
