"""Command-line front end.

Subcommands:
    walk       brute-force density-matrix run; writes the position
               distribution (and optionally the per-step moment table)
    moments    momentum-space engine; writes the exact moment series
    diffusion  closed-form diffusion-constant sweep / crossover probability
    xcheck     plays the independent routes against each other

Exit codes: 0 ok, 1 cross-check failure, 2 invalid input or channel,
3 regime error (non-contracting / ballistic).  The DQWALK_THREADS
environment variable sets the momentum-loop worker count (0 = all CPUs).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np

from . import brokenline
from .channels import (
    HADAMARD,
    BrokenLineParams,
    WalkChannel,
    build_broken_line,
    build_coherent,
    dephasing_channel,
    load_channel,
)
from .errors import (
    BallisticRegimeError,
    DomainError,
    DQWalkError,
    NonRealMomentError,
    NotContractingError,
)
from .moments import (
    asymptotic_first_moment,
    default_node_count,
    j_term,
    moment_series,
    moment_series_from_grids,
    momentum_grid,
    second_moment_coin_specialized,
    transfer_grids,
)
from .pauli import COIN_PRESETS
from .simulator import init_state, moment_direct, position_distribution, step

_BUILTIN_CHANNELS = ("coherent", "broken-line", "coin-dephasing")


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs, as plain JSON-serializable values."""

    subcommand: str
    channel: str = "broken-line"
    channel_file: str | None = None
    p: float = 0.5
    q: float = 0.5
    theta1: float = 0.0
    theta2: float = math.pi
    theta3: float = 0.0
    theta4: float = 0.0
    coin: str | tuple = "R"
    x0: int = 0
    t: int = 20
    t_lo: int = 400
    t_hi: int = 500
    n_k: int | None = None
    out: str | None = None
    moments_out: str | None = None
    fmt: str = "csv"
    naive: bool = False
    asymptotic: bool = False
    p_min: float = 0.05
    p_max: float = 1.0
    p_step: float = 0.05
    critical: bool = False
    with_slope: bool = False
    coin_reduction: bool = False
    corrupt_drift: bool = False

    def to_json_dict(self) -> dict:
        data = dataclasses.asdict(self)
        if not isinstance(self.coin, str):
            data["coin"] = [float(v) for v in self.coin]
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        coin = data.get("coin")
        if isinstance(coin, list):
            data["coin"] = tuple(float(v) for v in coin)
        return cls(**data)


def _parse_coin(text: str):
    """A preset name, or four comma-separated Pauli coordinates."""
    if text in COIN_PRESETS:
        return text
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"coin must be one of {sorted(COIN_PRESETS)} or four comma-separated reals"
        )
    try:
        return tuple(float(v) for v in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse coin {text!r}") from None


def _coin_arg(config: RunConfig):
    return config.coin if isinstance(config.coin, str) else np.array(config.coin)


def _resolve_channel(config: RunConfig) -> WalkChannel:
    if config.channel_file is not None:
        return load_channel(config.channel_file)
    if config.channel == "coherent":
        return build_coherent(HADAMARD)
    if config.channel == "broken-line":
        return build_broken_line(
            BrokenLineParams(
                p=config.p,
                theta1=config.theta1,
                theta2=config.theta2,
                theta3=config.theta3,
                theta4=config.theta4,
            )
        )
    if config.channel == "coin-dephasing":
        return dephasing_channel(config.q)
    raise ValueError(f"unknown channel {config.channel!r}")


def _out_stream(path: str | None):
    if path in (None, "-"):
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


# --- subcommands -------------------------------------------------------------

def cmd_walk(config: RunConfig) -> int:
    channel = _resolve_channel(config)
    state = init_state(_coin_arg(config), x0=config.x0)
    firsts = [moment_direct(state, 1)]
    seconds = [moment_direct(state, 2)]
    for _ in range(config.t):
        state = step(state, channel)
        firsts.append(moment_direct(state, 1))
        seconds.append(moment_direct(state, 2))
    xs, probs = position_distribution(state)
    with _out_stream(config.out) as fh:
        fh.write("x,prob\n")
        for x, prob in zip(xs, probs):
            if prob == 0.0:
                continue  # parity / light-cone sites that were never touched
            fh.write(f"{x},{prob:.17g}\n")
    if config.moments_out is not None:
        with _out_stream(config.moments_out) as fh:
            fh.write("t,first,second,variance\n")
            for t, (m1, m2) in enumerate(zip(firsts, seconds)):
                fh.write(f"{t},{m1:.17g},{m2:.17g},{m2 - m1 * m1:.17g}\n")
    return 0


def cmd_moments(config: RunConfig) -> int:
    channel = _resolve_channel(config)
    coin = _coin_arg(config)
    if config.asymptotic:
        value = asymptotic_first_moment(channel, coin, n_k=config.n_k or 512)
        with _out_stream(config.out) as fh:
            fh.write(f"{value:.17g}\n")
        return 0
    series = moment_series(
        channel, coin, config.t, n_k=config.n_k, naive=config.naive
    )
    with _out_stream(config.out) as fh:
        if config.fmt == "json":
            json.dump(series.to_json_dict(), fh, indent=2)
            fh.write("\n")
        else:
            series.to_csv(fh)
    return 0


def cmd_diffusion(config: RunConfig) -> int:
    if config.critical:
        value = brokenline.critical_p()
        with _out_stream(config.out) as fh:
            fh.write(f"{value:.17g}\n")
        return 0
    if config.p_step <= 0 or config.p_max < config.p_min:
        raise ValueError("need p_step > 0 and p_max >= p_min")
    count = int(round((config.p_max - config.p_min) / config.p_step)) + 1
    ps = [config.p_min + i * config.p_step for i in range(count)]
    ps = [p for p in ps if p <= config.p_max + 1e-12]
    results = []
    slopes = [] if config.with_slope else None
    for p in ps:
        try:
            results.append(brokenline.diffusion_closed_form(p))
        except (BallisticRegimeError, DomainError) as exc:
            # Per-point failures are annotated in the row, not fatal.
            results.append(
                brokenline.DiffusionResult(
                    p=p,
                    prefactor=float("nan"),
                    diffusion=float("nan"),
                    integral=float("nan"),
                    method=f"error: {type(exc).__name__}",
                )
            )
        if slopes is not None:
            try:
                slopes.append(
                    brokenline.diffusion_slope_estimate(
                        p, t_lo=config.t_lo, t_hi=config.t_hi, n_k=config.n_k
                    ).diffusion
                )
            except (BallisticRegimeError, DomainError):
                slopes.append(float("nan"))
    with _out_stream(config.out) as fh:
        brokenline.write_sweep_csv(results, fh, slopes)
    return 0


def _oracle_moments(channel: WalkChannel, coin, t_max: int):
    state = init_state(coin)
    firsts = [0.0]
    seconds = [0.0]
    for _ in range(t_max):
        state = step(state, channel)
        firsts.append(moment_direct(state, 1))
        seconds.append(moment_direct(state, 2))
    return np.array(firsts), np.array(seconds)


def _xcheck_rows(config: RunConfig) -> list[tuple[str, float, float]]:
    """Each row is (name, max |delta|, tolerance)."""
    rows: list[tuple[str, float, float]] = []

    def engine_vs_oracle(name: str, channel: WalkChannel, coin, t_max: int,
                         tol: float = 1e-9) -> None:
        grids = transfer_grids(
            channel, momentum_grid(default_node_count(channel, t_max))
        )
        if config.corrupt_drift:
            grids = dataclasses.replace(grids, drift=-grids.drift)
        first_ref, second_ref = _oracle_moments(channel, coin, t_max)
        try:
            series = moment_series_from_grids(grids, coin, t_max, label=channel.label)
        except NonRealMomentError:
            # Not even a real number: report both rows as hard failures.
            rows.append((f"{name}: first moment vs oracle", float("inf"), tol))
            rows.append((f"{name}: second moment vs oracle", float("inf"), tol))
            return
        rows.append((
            f"{name}: first moment vs oracle",
            float(np.max(np.abs(series.first - first_ref))),
            tol,
        ))
        rows.append((
            f"{name}: second moment vs oracle",
            float(np.max(np.abs(series.second - second_ref))),
            tol,
        ))

    engine_vs_oracle("coherent, coin R", build_coherent(HADAMARD), "R", 12)
    engine_vs_oracle(
        "broken-line p=0.3, mixed coin", brokenline.default_channel(0.3), "mixed", 12
    )
    engine_vs_oracle(
        "broken-line p=0.8, coin R", brokenline.default_channel(0.8), "R", 12
    )
    engine_vs_oracle(
        "coin-dephasing q=0.5, symmetric coin", dephasing_channel(0.5), "symmetric", 12
    )

    bl = brokenline.default_channel(0.3)
    rows.append((
        "broken-line p=0.3: dispersion term vs (1-p)t",
        abs(j_term(bl, "mixed", 10) - 0.7 * 10),
        1e-12,
    ))
    series_fast = moment_series(bl, "R", 10)
    series_naive = moment_series(bl, "R", 10, naive=True)
    rows.append((
        "broken-line p=0.3: naive double sum vs recursion",
        float(np.max(np.abs(series_fast.second - series_naive.second))),
        1e-11,
    ))
    deph = dephasing_channel(0.2)
    rows.append((
        "coin-dephasing q=0.2: generic vs coin-specialized <x^2>",
        abs(
            moment_series(deph, "R", 12).second[12]
            - second_moment_coin_specialized(deph, "R", 12)
        ),
        1e-10,
    ))
    if config.coin_reduction:
        for q in (0.0, 0.2, 0.5, 1.0):
            chan = dephasing_channel(q)
            series = moment_series(chan, "symmetric", 20)
            worst = max(
                abs(series.second[t] - second_moment_coin_specialized(chan, "symmetric", t))
                for t in range(21)
            )
            rows.append((
                f"coin-dephasing q={q:g}: generic vs coin-specialized, t<=20",
                worst,
                1e-10,
            ))
            rows.append((
                f"coin-dephasing q={q:g}: dispersion term vs t",
                abs(j_term(chan, "mixed", 15) - 15.0),
                1e-12,
            ))
    return rows


def cmd_xcheck(config: RunConfig) -> int:
    rows = _xcheck_rows(config)
    width = max(len(name) for name, _, _ in rows)
    failures = 0
    with _out_stream(config.out) as fh:
        fh.write(f"{'check':<{width}}  {'max|delta|':>12}  {'tol':>8}  status\n")
        for name, delta, tol in rows:
            ok = delta <= tol
            failures += 0 if ok else 1
            fh.write(
                f"{name:<{width}}  {delta:>12.3e}  {tol:>8.0e}  "
                f"{'PASS' if ok else 'FAIL'}\n"
            )
        fh.write(f"{len(rows) - failures}/{len(rows)} checks passed\n")
    return 0 if failures == 0 else 1


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqwalk",
        description="Decoherent quantum walks on the line: exact moments "
        "and diffusion constants.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    channel_parent = argparse.ArgumentParser(add_help=False)
    group = channel_parent.add_argument_group("channel")
    group.add_argument("--channel", choices=_BUILTIN_CHANNELS, default="broken-line")
    group.add_argument("--channel-file", metavar="PATH",
                       help="load a channel from JSON instead of --channel")
    group.add_argument("--p", type=float, default=0.5,
                       help="broken-line link-failure probability")
    group.add_argument("--q", type=float, default=0.5,
                       help="coin-dephasing measurement probability")
    for i in (1, 2, 3, 4):
        group.add_argument(f"--theta{i}", type=float,
                           default=math.pi if i == 2 else 0.0,
                           help=argparse.SUPPRESS)
    channel_parent.add_argument(
        "--coin", type=_parse_coin, default="R",
        help="initial coin: preset name or four comma-separated Pauli coordinates",
    )
    channel_parent.add_argument("--nk", type=int, default=None, dest="n_k",
                                help="momentum node count override")
    channel_parent.add_argument("--out", default=None,
                                help="output path ('-' or omitted = stdout)")

    p_walk = sub.add_parser("walk", parents=[channel_parent],
                            help="run the brute-force density-matrix simulator")
    p_walk.add_argument("--t", type=int, default=20, help="number of steps")
    p_walk.add_argument("--x0", type=int, default=0, help="starting site")
    p_walk.add_argument("--moments-out", metavar="PATH",
                        help="also write the per-step moment table here")

    p_mom = sub.add_parser("moments", parents=[channel_parent],
                           help="run the momentum-space moment engine")
    p_mom.add_argument("--t", type=int, default=20, help="horizon")
    p_mom.add_argument("--naive", action="store_true",
                       help="use the literal double sum for the second moment")
    p_mom.add_argument("--asymptotic", action="store_true",
                       help="print the long-time first moment instead of a series")
    p_mom.add_argument("--format", choices=("csv", "json"), default="csv",
                       dest="fmt")

    p_diff = sub.add_parser("diffusion",
                            help="broken-line diffusion-constant sweep")
    p_diff.add_argument("--p-min", type=float, default=0.05)
    p_diff.add_argument("--p-max", type=float, default=1.0)
    p_diff.add_argument("--p-step", type=float, default=0.05)
    p_diff.add_argument("--critical", action="store_true",
                        help="print the p where D = 1/2 and exit")
    p_diff.add_argument("--with-slope", action="store_true",
                        help="add a D_slope column from the finite-horizon engine")
    p_diff.add_argument("--t-lo", type=int, default=400)
    p_diff.add_argument("--t-hi", type=int, default=500)
    p_diff.add_argument("--nk", type=int, default=None, dest="n_k")
    p_diff.add_argument("--out", default=None)

    p_x = sub.add_parser("xcheck",
                         help="cross-check the independent computation routes")
    p_x.add_argument("--coin-reduction", action="store_true",
                     help="include the extended coin-noise reduction checks")
    p_x.add_argument("--corrupt-drift", action="store_true",
                     help=argparse.SUPPRESS)  # mutation hook for tests
    p_x.add_argument("--out", default=None)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**values)


_DISPATCH = {
    "walk": cmd_walk,
    "moments": cmd_moments,
    "diffusion": cmd_diffusion,
    "xcheck": cmd_xcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)
    try:
        return _DISPATCH[config.subcommand](config)
    except (NotContractingError, BallisticRegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DQWalkError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
