"""Exact position moments via momentum-space transfer matrices.

For a translation-invariant channel started from a point mass at the origin,
every position moment is an integral over a single momentum k of traces of
small (4x4 in the Pauli basis) matrices:

    <x>_t   = i * Int dk/2pi  sum_{m=1..t} Tr{ G_k a_m }
    <x^2>_t =     Int dk/2pi [ sum_{m=1..t} Tr{ J_k a_m }
              + sum_{m=1..t} sum_{m'<m} ( Tr{ G*_k L^{m-m'-1} (G_k a_{m'}) }
                                        + Tr{ G_k L^{m-m'-1} (G*_k a_{m'}) } ) ]

with a_m = L_k^{m-1} rho0 and G*_k the partner map carrying the derivative
on the conjugated factor,

where L_k applies one step at fixed momentum, G_k is its derivative with the
right (conjugated) factor frozen, and J_k carries the derivative on both
sides.  The double sum telescopes into a second running vector, so the
default path costs O(t) matrix-vector products per momentum node
(``naive=True`` keeps the literal double sum for cross-checking).

The k-integral is evaluated on a uniform grid, which is *exact* once the
node count exceeds the trigonometric degree of the integrand
(4 * max_hop * t), not merely approximate.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import (
    WalkChannel,
    coin_matrix_at_k,
    coin_matrix_derivative_at_k,
    is_coin_channel,
)
from .errors import (
    DomainError,
    NonRealMomentError,
    NotACoinChannelError,
    NotContractingError,
    QuadratureTooCoarseWarning,
)
from .pauli import coin_state, sandwich_superop

# Momentum nodes are processed in fixed-size chunks and reduced in order, so
# results are bit-identical for every thread count.
_CHUNK = 512

# A moment whose imaginary part exceeds this is reported as an error rather
# than silently truncated.
_IMAG_TOL = 1e-8


def momentum_grid(n_k: int) -> np.ndarray:
    """``n_k`` equispaced momenta on [-pi, pi)."""
    if n_k < 1:
        raise ValueError(f"node count must be positive, got {n_k}")
    return -math.pi + 2.0 * math.pi * np.arange(n_k) / n_k


def default_node_count(channel: WalkChannel, t_max: int) -> int:
    """Node count that makes the uniform rule exact, with a little headroom."""
    return 4 * channel.max_hop * max(t_max, 1) + 8


def exact_node_bound(channel: WalkChannel, t_max: int) -> int:
    """Minimum node count for which the uniform rule is exact at horizon t."""
    return 4 * channel.max_hop * t_max + 1


def thread_count(threads: int | None = None) -> int:
    """Resolve the worker count: argument, else DQWALK_THREADS, else 1.

    A value of 0 means "use all CPUs".
    """
    if threads is None:
        raw = os.environ.get("DQWALK_THREADS", "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(
                f"DQWALK_THREADS must be an integer, got {raw!r}"
            ) from None
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"thread count must be nonnegative, got {threads}")
    return threads


# --- transfer matrices ------------------------------------------------------

def _coin_stacks(channel: WalkChannel, k) -> tuple[np.ndarray, np.ndarray]:
    """Stack C_n(k) and dC_n/dk over the Kraus index: shapes (m, ..., 2, 2)."""
    cs = np.stack([coin_matrix_at_k(channel, n, k) for n in channel.kraus_indices])
    ds = np.stack(
        [coin_matrix_derivative_at_k(channel, n, k) for n in channel.kraus_indices]
    )
    return cs, ds


def transfer_matrix(channel: WalkChannel, k) -> np.ndarray:
    """One-step map at momentum k: O -> sum_n C_n O C_n^dag (Pauli basis).

    Trace preservation makes its top row (1, 0, 0, 0).
    """
    cs, _ = _coin_stacks(channel, k)
    return sandwich_superop(cs, cs)


def drift_matrix(channel: WalkChannel, k) -> np.ndarray:
    """Momentum derivative on the left factor: O -> sum_n C_n' O C_n^dag."""
    cs, ds = _coin_stacks(channel, k)
    return sandwich_superop(ds, cs)


def drift_matrix_adjoint(channel: WalkChannel, k) -> np.ndarray:
    """The map O -> sum_n C_n O C_n'^dag.

    Its Pauli matrix is the entrywise conjugate of ``drift_matrix``: in this
    basis (sum_n C_n' sigma_i C_n^dag)^dag = conj of the same expansion,
    because the sigma_i are Hermitian.
    """
    cs, ds = _coin_stacks(channel, k)
    return sandwich_superop(cs, ds)


def dispersion_matrix(channel: WalkChannel, k) -> np.ndarray:
    """Both factors differentiated: O -> sum_n C_n' O C_n'^dag."""
    _, ds = _coin_stacks(channel, k)
    return sandwich_superop(ds, ds)


@dataclass(frozen=True)
class TransferGrids:
    """The four superoperator grids evaluated on a momentum grid.

    Arrays have shape (len(ks), 4, 4).
    """

    ks: np.ndarray
    step: np.ndarray
    drift: np.ndarray
    drift_adj: np.ndarray
    dispersion: np.ndarray


def transfer_grids(channel: WalkChannel, ks: np.ndarray) -> TransferGrids:
    """Evaluate step/drift/dispersion maps on a whole momentum grid at once."""
    cs, ds = _coin_stacks(channel, ks)
    step = sandwich_superop(cs, cs)
    drift = sandwich_superop(ds, cs)
    dispersion = sandwich_superop(ds, ds)
    return TransferGrids(
        ks=ks,
        step=step,
        drift=drift,
        drift_adj=np.conj(drift),
        dispersion=dispersion,
    )


# --- the moment sweep -------------------------------------------------------

def _mv(mats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Batched matrix @ vector over the momentum axis."""
    return np.matmul(mats, vecs[..., None])[..., 0]


def _accumulate(
    grids: TransferGrids, rho_vec: np.ndarray, t_max: int, naive: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-chunk sweep.

    Returns three complex arrays of length t_max + 1 holding, for each
    horizon t, the *sum over this chunk's momenta* of

        first:  sum_{m<=t} Tr{ G a_m }
        cross:  the double sum over m' < m <= t (both orderings),
        jsum:   sum_{m<=t} Tr{ J a_m },

    with a_m = L^{m-1} rho0.  Means and prefactors are applied by the caller.
    """
    step = grids.step
    n_k = step.shape[0]
    # Tr{A O} = 2 * (row 0 of A) . (Pauli vector of O); fold in the factor 2.
    g_row = 2.0 * grids.drift[:, 0, :]
    gd_row = 2.0 * grids.drift_adj[:, 0, :]
    j_row = 2.0 * grids.dispersion[:, 0, :]

    first = np.zeros(t_max + 1, dtype=complex)
    cross = np.zeros(t_max + 1, dtype=complex)
    jsum = np.zeros(t_max + 1, dtype=complex)
    a = np.tile(np.asarray(rho_vec, dtype=complex), (n_k, 1))

    if not naive:
        # w_m = sum_{m'<m} [ L^{m-m'-1} (G - G^dag') a_{m'} ]; then the double
        # sum collapses to sum_m Tr{ G^dag' w_m } because for each inner pair
        # the G term and the G^dag' term differ only in which factor carries
        # the derivative, and the remaining imbalance telescopes.
        run1 = np.zeros(n_k, dtype=complex)
        run2 = np.zeros(n_k, dtype=complex)
        runj = np.zeros(n_k, dtype=complex)
        w = np.zeros((n_k, 4), dtype=complex)
        g_minus_gd = grids.drift - grids.drift_adj
        for m in range(1, t_max + 1):
            run1 += np.einsum("ni,ni->n", g_row, a)
            run2 += np.einsum("ni,ni->n", gd_row, w)
            runj += np.einsum("ni,ni->n", j_row, a)
            first[m] = run1.sum()
            cross[m] = run2.sum()
            jsum[m] = runj.sum()
            w = _mv(step, w) + _mv(g_minus_gd, a)
            a = _mv(step, a)
        return first, cross, jsum

    # Literal double sum, O(t^2) per momentum: kept as an independent route
    # to catch bookkeeping errors in the telescoped recursion.
    a_list = [a]
    for _ in range(1, t_max):
        a_list.append(_mv(step, a_list[-1]))
    run1 = np.zeros(n_k, dtype=complex)
    runj = np.zeros(n_k, dtype=complex)
    inner = np.zeros(t_max + 1, dtype=complex)  # value of the m-th inner sum
    for m in range(1, t_max + 1):
        run1 += np.einsum("ni,ni->n", g_row, a_list[m - 1])
        runj += np.einsum("ni,ni->n", j_row, a_list[m - 1])
        first[m] = run1.sum()
        jsum[m] = runj.sum()
    for m_prime in range(1, t_max):
        y1 = _mv(grids.drift, a_list[m_prime - 1])
        y2 = _mv(grids.drift_adj, a_list[m_prime - 1])
        for m in range(m_prime + 1, t_max + 1):
            inner[m] += np.einsum("ni,ni->", gd_row, y1)
            inner[m] += np.einsum("ni,ni->", g_row, y2)
            if m < t_max:
                y1 = _mv(step, y1)
                y2 = _mv(step, y2)
    cross[:] = np.cumsum(inner)
    return first, cross, jsum


def _series_sums(
    channel: WalkChannel,
    rho_vec: np.ndarray,
    t_max: int,
    n_k: int,
    threads: int,
    naive: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chunked (optionally threaded) sweep over the full momentum grid."""
    ks = momentum_grid(n_k)
    chunks = [ks[i:i + _CHUNK] for i in range(0, n_k, _CHUNK)]

    def work(ks_chunk: np.ndarray):
        return _accumulate(transfer_grids(channel, ks_chunk), rho_vec, t_max, naive)

    if threads <= 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    first = sum(p[0] for p in parts)
    cross = sum(p[1] for p in parts)
    jsum = sum(p[2] for p in parts)
    return first, cross, jsum


@dataclass(frozen=True)
class MomentSeries:
    """First and second position moments for t = 0 .. t_max.

    ``max_imag_residue`` records the largest imaginary part discarded when
    realizing the moments; it is a numerical health indicator and is kept
    far below any physical scale by construction.
    """

    channel_label: str
    coin: tuple[float, float, float, float]
    n_k: int
    first: np.ndarray
    second: np.ndarray
    variance: np.ndarray
    max_imag_residue: float

    @property
    def t_max(self) -> int:
        return len(self.first) - 1

    def to_csv(self, fh) -> None:
        fh.write("t,first,second,variance\n")
        for t in range(self.t_max + 1):
            fh.write(
                f"{t},{self.first[t]:.17g},{self.second[t]:.17g},"
                f"{self.variance[t]:.17g}\n"
            )

    def to_json_dict(self) -> dict:
        return {
            "channel": self.channel_label,
            "coin": list(self.coin),
            "n_k": self.n_k,
            "max_imag_residue": self.max_imag_residue,
            "t": list(range(self.t_max + 1)),
            "first": [float(v) for v in self.first],
            "second": [float(v) for v in self.second],
            "variance": [float(v) for v in self.variance],
        }


def _finalize(
    first_sums: np.ndarray,
    cross_sums: np.ndarray,
    j_sums: np.ndarray,
    n_k: int,
    label: str,
    rho_vec: np.ndarray,
) -> MomentSeries:
    first_c = 1j * first_sums / n_k
    second_c = (cross_sums + j_sums) / n_k
    residue = max(
        float(np.max(np.abs(first_c.imag))), float(np.max(np.abs(second_c.imag)))
    )
    if residue > _IMAG_TOL:
        raise NonRealMomentError(
            f"moments acquired imaginary part {residue:.3g}; "
            "the channel data are inconsistent"
        )
    first = first_c.real.copy()
    second = second_c.real.copy()
    return MomentSeries(
        channel_label=label,
        coin=tuple(float(v) for v in rho_vec),
        n_k=n_k,
        first=first,
        second=second,
        variance=second - first**2,
        max_imag_residue=residue,
    )


def _check_node_count(channel: WalkChannel, t_max: int, n_k: int) -> None:
    bound = exact_node_bound(channel, t_max)
    if n_k < bound:
        warnings.warn(
            QuadratureTooCoarseWarning(
                f"{n_k} momentum nodes < {bound} needed for exactness at t={t_max}; "
                "results are approximate"
            ),
            stacklevel=3,
        )


def moment_series(
    channel: WalkChannel,
    coin,
    t_max: int,
    n_k: int | None = None,
    naive: bool = False,
    threads: int | None = None,
) -> MomentSeries:
    """Exact <x>_t, <x^2>_t and variance for all t up to ``t_max``.

    The walker starts as a point mass at the origin with the given coin
    state (any form accepted by ``pauli.coin_state``).  ``n_k`` defaults to
    the smallest grid that integrates the moments exactly (plus headroom);
    smaller values are allowed but trigger ``QuadratureTooCoarseWarning``.
    ``naive`` switches the second moment to the literal double sum.
    ``threads`` overrides the DQWALK_THREADS worker count.
    """
    if t_max < 0:
        raise ValueError(f"horizon must be nonnegative, got {t_max}")
    rho_vec = coin_state(coin)
    if n_k is None:
        n_k = default_node_count(channel, t_max)
    _check_node_count(channel, t_max, n_k)
    workers = thread_count(threads)
    first, cross, jsum = _series_sums(channel, rho_vec, t_max, n_k, workers, naive)
    return _finalize(first, cross, jsum, n_k, channel.label, rho_vec)


def moment_series_from_grids(
    grids: TransferGrids,
    coin,
    t_max: int,
    naive: bool = False,
    label: str = "custom-grids",
) -> MomentSeries:
    """Moment sweep over prebuilt transfer grids (single pass, no threading).

    Exists so cross-check harnesses can perturb individual grids and watch
    the comparison fail.
    """
    if t_max < 0:
        raise ValueError(f"horizon must be nonnegative, got {t_max}")
    rho_vec = coin_state(coin)
    first, cross, jsum = _accumulate(grids, rho_vec, t_max, naive)
    return _finalize(first, cross, jsum, len(grids.ks), label, rho_vec)


def first_moment(channel: WalkChannel, coin, t: int, **kwargs) -> float:
    """<x>_t; see ``moment_series`` for keyword arguments."""
    return float(moment_series(channel, coin, t, **kwargs).first[t])


def second_moment(channel: WalkChannel, coin, t: int, **kwargs) -> float:
    """<x^2>_t; see ``moment_series`` for keyword arguments."""
    return float(moment_series(channel, coin, t, **kwargs).second[t])


def j_term(
    channel: WalkChannel,
    coin,
    t: int,
    n_k: int | None = None,
    threads: int | None = None,
) -> float:
    """The single-sum (dispersion) part of <x^2>_t.

    For any channel whose Kraus operators each displace by a fixed +-1 or 0,
    this equals the mean squared hop per step times t; it is a useful
    structural probe on its own.
    """
    if t < 0:
        raise ValueError(f"horizon must be nonnegative, got {t}")
    rho_vec = coin_state(coin)
    if n_k is None:
        n_k = default_node_count(channel, t)
    _check_node_count(channel, t, n_k)
    workers = thread_count(threads)
    _, _, jsum = _series_sums(channel, rho_vec, t, n_k, workers, naive=False)
    val = jsum[t] / n_k
    if abs(val.imag) > _IMAG_TOL:
        raise NonRealMomentError(f"dispersion term has imaginary part {val.imag:.3g}")
    return float(val.real)


def second_moment_coin_specialized(
    channel: WalkChannel, coin, t: int, n_k: int | None = None
) -> float:
    """<x^2>_t for coin-noise channels via the reduced recursion.

    When every Kraus operator is (shift) * (coin operator), the derivative
    maps collapse onto multiplication by the coin-basis sign operator Z and
    the dispersion term equals t exactly, leaving

        <x^2>_t = t + Int dk/2pi sum_{m'<m<=t} [ Tr{ Z L^{m-m'}(Z b_{m'}) }
                                               + Tr{ Z L^{m-m'}(b_{m'} Z) } ]

    with b_m = L^m rho0.  Both traces are evaluated with one running vector.

    Raises:
        NotACoinChannelError: if the channel has any other shift structure.
    """
    if not is_coin_channel(channel):
        raise NotACoinChannelError(
            f"channel {channel.label!r} is not of coin-noise form"
        )
    if t < 0:
        raise ValueError(f"horizon must be nonnegative, got {t}")
    rho_vec = coin_state(coin)
    if n_k is None:
        n_k = default_node_count(channel, t)
    _check_node_count(channel, t, n_k)
    ks = momentum_grid(n_k)
    step = transfer_grids(channel, ks).step
    n = len(ks)
    b = _mv(step, np.tile(np.asarray(rho_vec, dtype=complex), (n, 1)))
    u = np.zeros((n, 4), dtype=complex)
    acc = 0.0 + 0.0j
    for _ in range(1, t + 1):
        acc += 2.0 * u[:, 3].sum()  # Tr{Z u} = 2 u_3
        # anticommutator {Z, b} in Pauli coordinates: swaps components 0 and 3
        y = np.zeros_like(u)
        y[:, 0] = 2.0 * b[:, 3]
        y[:, 3] = 2.0 * b[:, 0]
        u = _mv(step, u + y)
        b = _mv(step, b)
    val = acc / n
    if abs(val.imag) > _IMAG_TOL:
        raise NonRealMomentError(
            f"second moment has imaginary part {val.imag:.3g}"
        )
    return float(t + val.real)


# --- long-time behaviour ----------------------------------------------------

def asymptotic_first_moment(channel: WalkChannel, coin, n_k: int = 512) -> float:
    """Limit of <x>_t for channels whose Bloch block is a strict contraction.

    Writing the one-step map as the affine action r -> M_k r + c_k r_0 on the
    Bloch part, each momentum relaxes to r*(k) = (I - M_k)^{-1} c_k r_0, and
    summing the geometric transient gives

        lim_t <x>_t = i * Int dk/2pi  2 gamma(k) . (I - M_k)^{-1} (r_init - r*(k))

    provided the k-average of the stationary drift vanishes (it must, or no
    limit exists and a DomainError is raised).

    Raises:
        NotContractingError: if some momentum block has spectral radius
            within 1e-9 of 1 (e.g. the fully coherent walk).
    """
    rho_vec = coin_state(coin)
    ks = momentum_grid(n_k)
    grids = transfer_grids(channel, ks)
    block = grids.step[:, 1:, 1:]
    radius = np.abs(np.linalg.eigvals(block)).max(axis=1)
    worst = int(np.argmax(radius))
    if radius[worst] >= 1.0 - 1e-9:
        raise NotContractingError(
            f"momentum block at k = {ks[worst]:.6f} has spectral radius "
            f"{radius[worst]:.12f}; no stationary first moment exists",
            k=float(ks[worst]),
            spectral_radius=float(radius[worst]),
        )
    r0 = rho_vec[0]
    r_init = np.asarray(rho_vec, dtype=complex)[1:]
    inhom = grids.step[:, 1:, 0] * r0
    eye3 = np.eye(3, dtype=complex)
    r_star = np.linalg.solve(eye3 - block, inhom[..., None])[..., 0]
    gamma0 = grids.drift[:, 0, 0]
    gamma = grids.drift[:, 0, 1:]
    stationary = 2.0 * (gamma0 * r0 + np.einsum("ni,ni->n", gamma, r_star))
    drift = 1j * stationary.mean()
    if abs(drift) > _IMAG_TOL:
        raise DomainError(
            f"channel has nonzero stationary drift {drift!r}; "
            "the first moment grows linearly and has no limit"
        )
    transient = np.linalg.solve(eye3 - block, (r_init - r_star)[..., None])[..., 0]
    val = 1j * (2.0 * np.einsum("ni,ni->n", gamma, transient)).mean()
    if abs(val.imag) > _IMAG_TOL:
        raise NonRealMomentError(
            f"asymptotic first moment has imaginary part {val.imag:.3g}"
        )
    return float(val.real)


def diffusion_from_slope(
    channel: WalkChannel,
    coin,
    t_lo: int = 400,
    t_hi: int = 500,
    n_k: int | None = None,
    threads: int | None = None,
) -> float:
    """Finite-horizon diffusion estimate D = (var(t_hi) - var(t_lo)) / 2 dt."""
    if not 1 <= t_lo < t_hi:
        raise ValueError(f"need 1 <= t_lo < t_hi, got {t_lo}, {t_hi}")
    series = moment_series(channel, coin, t_hi, n_k=n_k, threads=threads)
    return float(
        0.5 * (series.variance[t_hi] - series.variance[t_lo]) / (t_hi - t_lo)
    )
