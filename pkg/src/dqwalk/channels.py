"""Translation-invariant Kraus channels for a walk on the integer line.

A single time step acts on the walker's density matrix as
rho -> sum_n E_n rho E_n^dag, where every Kraus operator is a finite sum of
hop-and-coin terms

    E_n = sum_{l,i,j} a^(n)_{l,i,j} (shift by l) (x) |i><j|,

with coin labels i, j in {R, L}.  A channel is stored sparsely as the list of
nonzero amplitudes a^(n)_{l,i,j}.  In momentum space each Kraus operator
collapses to a 2x2 coin matrix

    C_n(k) = sum_{l,i,j} a^(n)_{l,i,j} e^{-i l k} |i><j|,

and trace preservation is equivalent to sum_n C_n(k)^dag C_n(k) = I at every
momentum.  Builders for the standard models live here:

* ``build_coherent`` -- noiseless coined walk for any unitary coin,
* ``build_broken_line`` -- each lattice link next to the walker fails
  independently with probability p each step (four Kraus operators),
* ``build_coin_channel`` -- noise acting on the coin alone, followed by the
  usual conditional shift,
* ``dephasing_channel`` -- the coin-measurement special case of the above.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CompletenessError,
    DomainError,
    InvalidCoinKrausError,
    NonUnitaryCoinError,
    PhaseConstraintError,
)

COIN_LABELS = ("R", "L")
COIN_INDEX = {"R": 0, "L": 1}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class KrausTerm:
    """One nonzero amplitude a^(n)_{l,i,j} of Kraus operator ``n``.

    Attributes:
        n: index of the Kraus operator the term belongs to.
        l: hop distance (positive = rightward shift).
        i: output coin label, "R" or "L".
        j: input coin label.
        amp: complex amplitude.
    """

    n: int
    l: int
    i: str
    j: str
    amp: complex


@dataclass(frozen=True)
class WalkChannel:
    """A translation-invariant channel, stored as its nonzero Kraus terms."""

    label: str
    terms: tuple[KrausTerm, ...]

    @property
    def kraus_indices(self) -> tuple[int, ...]:
        """Sorted distinct Kraus-operator indices present in the term list."""
        return tuple(sorted({t.n for t in self.terms}))

    @property
    def num_kraus(self) -> int:
        return len(self.kraus_indices)

    @property
    def max_hop(self) -> int:
        """Largest |l| over all terms; the light cone grows this fast."""
        return max(abs(t.l) for t in self.terms)

    def terms_for(self, n: int) -> tuple[KrausTerm, ...]:
        return tuple(t for t in self.terms if t.n == n)


def _renumbered(groups: Sequence[Sequence[KrausTerm]]) -> tuple[KrausTerm, ...]:
    """Drop all-zero Kraus operators and renumber the rest 0..m-1."""
    terms: list[KrausTerm] = []
    idx = 0
    for group in groups:
        kept = [t for t in group if t.amp != 0]
        if not kept:
            continue
        terms.extend(
            KrausTerm(idx, t.l, t.i, t.j, complex(t.amp)) for t in kept
        )
        idx += 1
    return tuple(terms)


def build_coherent(coin: np.ndarray, label: str = "coherent") -> WalkChannel:
    """Noiseless coined walk: flip the coin with a unitary, then shift.

    The single Kraus operator moves the |R> component one site right and the
    |L> component one site left after the coin flip.

    Raises:
        NonUnitaryCoinError: if ``coin`` is not unitary to 1e-12.
    """
    coin = np.asarray(coin, dtype=complex)
    if coin.shape != (2, 2):
        raise NonUnitaryCoinError(f"coin must be 2x2, got shape {coin.shape}")
    if np.max(np.abs(coin.conj().T @ coin - np.eye(2))) > 1e-12:
        raise NonUnitaryCoinError("coin matrix is not unitary")
    group = [
        KrausTerm(0, +1, "R", j, coin[0, COIN_INDEX[j]]) for j in COIN_LABELS
    ] + [
        KrausTerm(0, -1, "L", j, coin[1, COIN_INDEX[j]]) for j in COIN_LABELS
    ]
    return WalkChannel(label, _renumbered([group]))


@dataclass(frozen=True)
class BrokenLineParams:
    """Parameters of the broken-line noise model.

    ``p`` is the per-step probability that a given link adjacent to the
    walker is down.  The four phases are picked up on the reflected
    components; trace preservation forces theta2 - theta3 = pi (mod 2*pi),
    while theta1 and theta4 are free knobs (exposed here, defaulted to 0).
    """

    p: float
    theta1: float = 0.0
    theta2: float = math.pi
    theta3: float = 0.0
    theta4: float = 0.0


def _broken_line_groups(params: BrokenLineParams) -> list[list[KrausTerm]]:
    p = params.p
    h = HADAMARD
    w = math.sqrt(p * (1.0 - p))
    e1 = cmath.exp(1j * params.theta1)
    e2 = cmath.exp(1j * params.theta2)
    e3 = cmath.exp(1j * params.theta3)
    e4 = cmath.exp(1j * params.theta4)
    groups = []
    # Both links intact: flip, then move.
    groups.append(
        [KrausTerm(0, +1, "R", j, (1 - p) * h[0, COIN_INDEX[j]]) for j in COIN_LABELS]
        + [KrausTerm(0, -1, "L", j, (1 - p) * e1 * h[1, COIN_INDEX[j]]) for j in COIN_LABELS]
    )
    # Exactly one adjacent link broken, in each orientation: the mover on the
    # intact side passes, the other component is reflected in place.
    groups.append(
        [KrausTerm(1, +1, "R", j, w * h[0, COIN_INDEX[j]]) for j in COIN_LABELS]
        + [KrausTerm(1, 0, "R", j, w * e2 * h[1, COIN_INDEX[j]]) for j in COIN_LABELS]
    )
    groups.append(
        [KrausTerm(2, 0, "L", j, w * h[0, COIN_INDEX[j]]) for j in COIN_LABELS]
        + [KrausTerm(2, -1, "L", j, w * e3 * h[1, COIN_INDEX[j]]) for j in COIN_LABELS]
    )
    # Both links broken: the walker is boxed in and both components reflect.
    groups.append(
        [KrausTerm(3, 0, "R", j, p * h[1, COIN_INDEX[j]]) for j in COIN_LABELS]
        + [KrausTerm(3, 0, "L", j, p * e4 * h[0, COIN_INDEX[j]]) for j in COIN_LABELS]
    )
    return groups


def build_broken_line(params: BrokenLineParams) -> WalkChannel:
    """Build the broken-line channel (Hadamard coin with failing links).

    Raises:
        DomainError: if p is outside [0, 1].
        PhaseConstraintError: if theta2 - theta3 != pi (mod 2*pi); the error
            carries the completeness residual of the offending channel.
    """
    p = params.p
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"link-failure probability must be in [0, 1], got {p!r}")
    label = f"broken-line(p={p:g})"
    channel = WalkChannel(label, _renumbered(_broken_line_groups(params)))
    wrapped = (params.theta2 - params.theta3 - math.pi + math.pi) % (2 * math.pi) - math.pi
    if abs(wrapped) > 1e-9:
        _, residual = completeness_residual(channel)
        raise PhaseConstraintError(
            "broken-line phases must satisfy theta2 - theta3 = pi (mod 2*pi); "
            f"got theta2 - theta3 = {params.theta2 - params.theta3!r} "
            f"(completeness residual {residual:.3g})",
            residual=residual,
        )
    validate_completeness(channel)
    return channel


def build_coin_channel(
    coin: np.ndarray,
    coin_kraus: Sequence[tuple[float, np.ndarray]],
    label: str = "coin-noise",
) -> WalkChannel:
    """Noise on the coin alone, then the usual conditional shift.

    Each step applies the coin unitary preceded by one of the 2x2 operators
    D_n with probability weight p_n, i.e. Kraus operators
    E_n = sqrt(p_n) * shift * (coin @ D_n).

    Args:
        coin: 2x2 unitary coin matrix.
        coin_kraus: sequence of (weight, D_n) pairs.  Weights must sum to 1
            and the D_n must satisfy sum_n p_n D_n^dag D_n = I.
        label: free-text channel label.

    Raises:
        NonUnitaryCoinError: if ``coin`` is not unitary.
        InvalidCoinKrausError: if the weights or the completeness sum are off.
    """
    coin = np.asarray(coin, dtype=complex)
    if coin.shape != (2, 2) or np.max(np.abs(coin.conj().T @ coin - np.eye(2))) > 1e-12:
        raise NonUnitaryCoinError("coin matrix is not unitary")
    weights = np.array([float(p) for p, _ in coin_kraus])
    if np.any(weights < 0):
        raise InvalidCoinKrausError("coin Kraus weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidCoinKrausError(
            f"coin Kraus weights sum to {weights.sum()!r}, expected 1"
        )
    total = np.zeros((2, 2), dtype=complex)
    for p_n, d_n in coin_kraus:
        d_n = np.asarray(d_n, dtype=complex)
        if d_n.shape != (2, 2):
            raise InvalidCoinKrausError(f"coin Kraus operator has shape {d_n.shape}")
        total += p_n * (d_n.conj().T @ d_n)
    if np.max(np.abs(total - np.eye(2))) > 1e-10:
        raise InvalidCoinKrausError(
            "sum_n p_n D_n^dag D_n deviates from the identity by "
            f"{np.max(np.abs(total - np.eye(2))):.3g}"
        )
    groups = []
    for p_n, d_n in coin_kraus:
        gamma = math.sqrt(p_n) * (coin @ np.asarray(d_n, dtype=complex))
        groups.append(
            [KrausTerm(0, +1, "R", j, gamma[0, COIN_INDEX[j]]) for j in COIN_LABELS]
            + [KrausTerm(0, -1, "L", j, gamma[1, COIN_INDEX[j]]) for j in COIN_LABELS]
        )
    return WalkChannel(label, _renumbered(groups))


def dephasing_channel(q: float, coin: np.ndarray | None = None) -> WalkChannel:
    """Coin measured in the walk basis with probability q before each flip.

    q = 0 is the coherent walk; q = 1 destroys the coin coherences every step
    and the position variance grows exactly like the classical random walk.

    Raises:
        DomainError: if q is outside [0, 1].
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"dephasing strength must be in [0, 1], got {q!r}")
    if coin is None:
        coin = HADAMARD
    proj_r = np.array([[1, 0], [0, 0]], dtype=complex)
    proj_l = np.array([[0, 0], [0, 1]], dtype=complex)
    sets = [
        (1.0 - q, np.eye(2, dtype=complex)),
        (q / 2.0, math.sqrt(2.0) * proj_r),
        (q / 2.0, math.sqrt(2.0) * proj_l),
    ]
    return build_coin_channel(coin, sets, label=f"coin-dephasing(q={q:g})")


def is_coin_channel(channel: WalkChannel) -> bool:
    """True if every Kraus operator factors as shift * (2x2 coin operator).

    Equivalently: every term with output coin R hops +1 and every term with
    output coin L hops -1.
    """
    return all(t.l == (+1 if t.i == "R" else -1) for t in channel.terms)


def coin_matrix_at_k(channel: WalkChannel, n: int, k) -> np.ndarray:
    """Momentum-space coin matrix C_n(k); ``k`` may be a scalar or an array.

    Returns an array of shape k.shape + (2, 2).
    """
    if n not in channel.kraus_indices:
        raise DomainError(f"channel has no Kraus operator {n}")
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape + (2, 2), dtype=complex)
    for t in channel.terms_for(n):
        out[..., COIN_INDEX[t.i], COIN_INDEX[t.j]] += t.amp * np.exp(-1j * t.l * k)
    return out


def coin_matrix_derivative_at_k(channel: WalkChannel, n: int, k) -> np.ndarray:
    """d C_n / d k: each term picks up a factor -i l."""
    if n not in channel.kraus_indices:
        raise DomainError(f"channel has no Kraus operator {n}")
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape + (2, 2), dtype=complex)
    for t in channel.terms_for(n):
        out[..., COIN_INDEX[t.i], COIN_INDEX[t.j]] += (
            -1j * t.l * t.amp * np.exp(-1j * t.l * k)
        )
    return out


def completeness_residual(
    channel: WalkChannel, num_k_samples: int | None = None
) -> tuple[float, float]:
    """Worst deviation of sum_n C_n(k)^dag C_n(k) from the identity.

    The residual is a trigonometric polynomial of degree 2*max_hop in k, so
    sampling 4*max_hop + 1 equispaced momenta (the default) certifies it
    exactly: a degree-d trig polynomial vanishing on 2d+1 equispaced points
    vanishes identically.

    Returns:
        (worst_k, residual): the momentum of the largest deviation and its
        max-norm.
    """
    if num_k_samples is None:
        num_k_samples = 4 * channel.max_hop + 1
    ks = -math.pi + 2.0 * math.pi * np.arange(num_k_samples) / num_k_samples
    total = np.zeros(ks.shape + (2, 2), dtype=complex)
    for n in channel.kraus_indices:
        c = coin_matrix_at_k(channel, n, ks)
        total += np.einsum("...ba,...bc->...ac", c.conj(), c)
    dev = np.max(np.abs(total - np.eye(2)), axis=(-2, -1))
    worst = int(np.argmax(dev))
    return float(ks[worst]), float(dev[worst])


def validate_completeness(
    channel: WalkChannel,
    tol: float = 1e-10,
    num_k_samples: int | None = None,
) -> None:
    """Raise CompletenessError if the channel is not trace preserving."""
    worst_k, residual = completeness_residual(channel, num_k_samples)
    if residual > tol:
        raise CompletenessError(
            f"channel {channel.label!r} violates Kraus completeness: "
            f"residual {residual:.3g} at k = {worst_k:.6f}",
            worst_k=worst_k,
            residual=residual,
        )


# --- JSON serialization ----------------------------------------------------

def channel_to_dict(channel: WalkChannel) -> dict:
    """Plain-dict form used by the JSON channel files."""
    return {
        "label": channel.label,
        "terms": [
            {
                "n": t.n,
                "l": t.l,
                "i": t.i,
                "j": t.j,
                "re": float(t.amp.real),
                "im": float(t.amp.imag),
            }
            for t in channel.terms
        ],
    }


def channel_from_dict(data: dict) -> WalkChannel:
    """Inverse of ``channel_to_dict``.  Performs schema checks only."""
    try:
        label = data["label"]
        raw_terms = data["terms"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"channel dict is missing field {exc}") from None
    if not isinstance(label, str):
        raise ValueError("channel label must be a string")
    terms = []
    for raw in raw_terms:
        try:
            n, l = int(raw["n"]), int(raw["l"])
            i, j = raw["i"], raw["j"]
            amp = complex(float(raw["re"]), float(raw["im"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed channel term {raw!r}: {exc}") from None
        if i not in COIN_INDEX or j not in COIN_INDEX:
            raise ValueError(f"coin labels must be 'R' or 'L', got {i!r}, {j!r}")
        terms.append(KrausTerm(n, l, i, j, amp))
    if not terms:
        raise ValueError("channel has no terms")
    return WalkChannel(label, tuple(terms))


def save_channel(channel: WalkChannel, path) -> None:
    """Write the channel to a JSON file (round-trips amplitudes bit-exactly)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(channel_to_dict(channel), fh, indent=2)
        fh.write("\n")


def load_channel(path) -> WalkChannel:
    """Load a channel from JSON and reject it if completeness fails.

    Raises:
        ValueError: on malformed JSON or schema violations.
        CompletenessError: if the stored channel is not trace preserving.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    channel = channel_from_dict(data)
    validate_completeness(channel)
    return channel
