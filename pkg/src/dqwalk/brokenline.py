"""Closed forms for the broken-line model (Hadamard coin, failing links).

For this channel the momentum-space transfer matrices have compact explicit
entries in the Pauli basis, the long-time variance growth is exactly linear,
and the diffusion constant reduces to a single elementary integral:

    D(p) = (1 - p) / p * K(p),
    K(p) = (1 - (1 - p) * I(1 - p)) / 2,
    I(x) = Int dk/2pi (cos k + x) / (x cos^2 k + x cos k + 2 x^2 - 2 x + 1).

K grows monotonically from about 0.19 at p = 0 to exactly 1/2 at p = 1, so
D crosses the classical value 1/2 at a single link-failure probability
(near p = 0.417): below it the walker out-diffuses the classical random
walk, above it the blocked, reflected walker under-performs it.

Everything here is independent of the generic engine in ``moments``; the
test suite plays the two against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import BrokenLineParams, build_broken_line
from .errors import (
    BallisticRegimeError,
    BracketingError,
    DomainError,
    SingularDenominatorError,
)
from .moments import diffusion_from_slope, momentum_grid

#: Fixed phase choice used throughout (theta2 = pi, others 0).
DEFAULT_PARAMS = dict(theta1=0.0, theta2=math.pi, theta3=0.0, theta4=0.0)


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"link-failure probability must be in [0, 1], got {p!r}")
    return p


def _efgh(p: float, k):
    """The four trigonometric building blocks of the closed-form matrices."""
    p = _check_p(p)
    k = np.asarray(k, dtype=float)
    coherent = (1.0 - p) ** 2
    mixed = p * (1.0 - p)
    return (
        coherent * np.sin(2 * k),
        coherent * np.cos(2 * k),
        mixed * np.sin(k),
        mixed * np.cos(k),
    )


def transfer_matrix_closed_form(p: float, k) -> np.ndarray:
    """One-step Pauli transfer matrix of the broken-line channel at momentum k."""
    e, f, g, h = _efgh(p, k)
    out = np.zeros(np.shape(e) + (4, 4), dtype=complex)
    out[..., 0, 0] = 1.0
    out[..., 1, 2] = e
    out[..., 1, 3] = f + p * p
    out[..., 2, 2] = -f + p * p
    out[..., 2, 3] = e
    out[..., 3, 1] = 1.0 - 2.0 * p
    out[..., 3, 2] = -2.0 * g
    out[..., 3, 3] = -2.0 * h
    return out


def drift_matrix_closed_form(p: float, k) -> np.ndarray:
    """Closed form of the left-derivative map; its top row is pure imaginary."""
    e, f, g, h = _efgh(p, k)
    out = np.zeros(np.shape(e) + (4, 4), dtype=complex)
    out[..., 0, 1] = 1j * (p - 1.0)
    out[..., 0, 2] = 1j * g
    out[..., 0, 3] = 1j * h
    out[..., 1, 2] = f
    out[..., 1, 3] = -e
    out[..., 2, 2] = e
    out[..., 2, 3] = f
    out[..., 3, 0] = 1j * (p - 1.0)
    out[..., 3, 2] = -h
    out[..., 3, 3] = g
    return out


def dispersion_matrix_closed_form(p: float, k) -> np.ndarray:
    """Closed form of the doubly-differentiated map; top row ((1-p), 0, 0, 0)."""
    e, f, _, _ = _efgh(p, k)
    out = np.zeros(np.shape(e) + (4, 4), dtype=complex)
    out[..., 0, 0] = 1.0 - p
    out[..., 1, 2] = -e
    out[..., 1, 3] = -f
    out[..., 2, 2] = f
    out[..., 2, 3] = -e
    out[..., 3, 1] = 1.0 - p
    return out


def contraction_block_closed_form(p: float, k) -> np.ndarray:
    """Bloch-part 3x3 block of the transfer matrix (rows/cols 1..3)."""
    return transfer_matrix_closed_form(p, k)[..., 1:, 1:]


def default_channel(p: float):
    """The broken-line channel with the standard phase choice."""
    return build_broken_line(BrokenLineParams(p=p, **DEFAULT_PARAMS))


# --- diffusion constant -----------------------------------------------------

def _integrand_mean(x: float, n_nodes: int) -> float:
    ks = momentum_grid(n_nodes)
    c = np.cos(ks)
    # The denominator is strictly positive for x in (0, 1]: its minimum over
    # c in [-1, 1] sits at c = -1/2 and equals 2x^2 - 9x/4 + 1 > 0.  The
    # runtime guard below is belt and braces against bad inputs.
    den = x * c * c + x * c + 2.0 * x * x - 2.0 * x + 1.0
    if den.min() <= 1e-14:
        raise SingularDenominatorError(
            f"integral denominator reaches {den.min():.3g} at x = {x!r}"
        )
    return float(np.mean((c + x) / den))


def diffusion_integral(x: float, tol: float = 1e-12, max_nodes: int = 1 << 22) -> float:
    """I(x) by node doubling on a uniform grid until the value stops moving.

    The integrand is smooth and 2pi-periodic, so the uniform rule converges
    geometrically; doubling stops once successive values differ by at most
    ``tol``.

    Raises:
        DomainError: unless 0 < x <= 1 (the physical range of x = 1 - p).
    """
    x = float(x)
    if not 0.0 < x <= 1.0:
        raise DomainError(f"diffusion integral needs 0 < x <= 1, got {x!r}")
    n = 64
    prev = _integrand_mean(x, n)
    while n < max_nodes:
        n *= 2
        cur = _integrand_mean(x, n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise ArithmeticError(
        f"diffusion integral did not converge to {tol:g} within {max_nodes} nodes"
    )


def diffusion_prefactor(p: float) -> float:
    """K(p) = (1 - (1 - p) I(1 - p)) / 2; equals 1/2 exactly at p = 1."""
    p = _check_p(p)
    if p == 1.0:
        return 0.5
    return 0.5 * (1.0 - (1.0 - p) * diffusion_integral(1.0 - p))


@dataclass(frozen=True)
class DiffusionResult:
    """One evaluation of the diffusion constant.

    ``method`` is "closed-form" for the integral route and "slope" for the
    finite-horizon variance-slope estimate; ``prefactor`` and ``integral``
    are back-derived (or nan) in the latter case.
    """

    p: float
    prefactor: float
    diffusion: float
    integral: float
    method: str


def diffusion_closed_form(p: float) -> DiffusionResult:
    """D(p) from the closed form.

    Raises:
        BallisticRegimeError: at p = 0, where variance grows quadratically
            and no diffusion constant exists.
        DomainError: outside [0, 1].
    """
    p = _check_p(p)
    if p == 0.0:
        raise BallisticRegimeError(
            "the coherent walk (p = 0) spreads ballistically; "
            "the diffusion constant diverges"
        )
    if p == 1.0:
        # I(x) -> 0 as x -> 0+, so report the limiting values.
        return DiffusionResult(p=1.0, prefactor=0.5, diffusion=0.0,
                               integral=0.0, method="closed-form")
    integral = diffusion_integral(1.0 - p)
    prefactor = 0.5 * (1.0 - (1.0 - p) * integral)
    return DiffusionResult(
        p=p,
        prefactor=prefactor,
        diffusion=(1.0 - p) / p * prefactor,
        integral=integral,
        method="closed-form",
    )


def diffusion_slope_estimate(
    p: float,
    coin="mixed",
    t_lo: int = 400,
    t_hi: int = 500,
    n_k: int | None = None,
    threads: int | None = None,
) -> DiffusionResult:
    """D(p) from the finite-horizon variance slope of the generic engine.

    This route never touches the closed forms above, which is what makes
    comparing the two a meaningful check.
    """
    p = _check_p(p)
    if p == 0.0:
        raise BallisticRegimeError(
            "the coherent walk (p = 0) spreads ballistically; "
            "a variance slope does not converge"
        )
    diffusion = diffusion_from_slope(
        default_channel(p), coin, t_lo=t_lo, t_hi=t_hi, n_k=n_k, threads=threads
    )
    if p < 1.0:
        prefactor = p / (1.0 - p) * diffusion
        integral = (1.0 - 2.0 * prefactor) / (1.0 - p)
    else:
        prefactor = float("nan")
        integral = float("nan")
    return DiffusionResult(
        p=p, prefactor=prefactor, diffusion=diffusion,
        integral=integral, method="slope",
    )


def critical_p(tol: float = 1e-10) -> float:
    """The link-failure probability where D(p) = 1/2, by bisection.

    D(p) is checked to be strictly decreasing on a coarse bracketing grid
    first, so the bisection target is the unique crossing.

    Raises:
        BracketingError: if the bracketing grid is not strictly decreasing
            or the interval [0.05, 0.95] does not straddle the crossing.
    """
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")
    lo, hi = 0.05, 0.95
    grid = np.linspace(lo, hi, 19)
    values = [diffusion_closed_form(p).diffusion for p in grid]
    if any(b >= a for a, b in zip(values, values[1:])):
        raise BracketingError("D(p) is not strictly decreasing on [0.05, 0.95]")
    if not values[0] > 0.5 > values[-1]:
        raise BracketingError(
            "D(p) - 1/2 does not change sign on [0.05, 0.95]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if diffusion_closed_form(mid).diffusion > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep(p_values) -> list[DiffusionResult]:
    """Closed-form diffusion constants for each p, in the given order."""
    return [diffusion_closed_form(p) for p in p_values]


def write_sweep_csv(results, fh, slopes=None) -> None:
    """CSV with columns p,K,D,I,method (plus D_slope when ``slopes`` given)."""
    header = "p,K,D,I,method"
    fh.write(header + ",D_slope\n" if slopes is not None else header + "\n")
    for idx, res in enumerate(results):
        row = (
            f"{res.p:.17g},{res.prefactor:.17g},{res.diffusion:.17g},"
            f"{res.integral:.17g},{res.method}"
        )
        if slopes is not None:
            row += f",{slopes[idx]:.17g}"
        fh.write(row + "\n")
