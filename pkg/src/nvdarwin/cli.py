"""Command-line front end: run a study and write CSV plus a JSON metadata sidecar.

Exit codes: 0 success, 2 bad arguments or bath file, 3 domain error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .axy import COUPLING_BOUND, TIMING_HEADER, resonance_spacing, solve_timings
from .bath import BathConfig, bath_as_dict
from .config import ConfigError, load_bath
from .experiments import (RandomBathSpec, chernoff_curve, generate_random_bath, ghz_plateau,
                          holevo_surface, ramsey_curve, record_count_vs_time)
from .metrics import redundancy
from .model import evolve_branches, initial_branched_state
from .protocols import loschmidt_echo_signal

OUTPUT_DIR_ENV = "NVDARWIN_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
CURVE_HEADER = "time_us,value"
SURFACE_HEADER = "time_us,fragment_size,chi_bits,mi_bits,discord_bits"
GHZ_HEADER = "fragment_size,chi_corrected_bits,chi_uncorrected_bits"
SPECTRUM_HEADER = "frequency_hz,magnitude"

log = logging.getLogger("nvdarwin")


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _csv(header: str, rows) -> str:
    return "\n".join([header, *(",".join(_fmt(x) if not isinstance(x, int) else str(x) for x in r)
                                for r in rows)]) + "\n"


def _times(args) -> np.ndarray:
    if args.n_times < 1:
        raise ValueError("--n-times must be >= 1")
    if args.t_stop_us < args.t_start_us or args.t_start_us < 0:
        raise ValueError("need 0 <= --t-start-us <= --t-stop-us")
    return np.linspace(args.t_start_us, args.t_stop_us, args.n_times) * 1e-6


def _output_path(raw: str) -> Path:
    p = Path(raw)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _echo_args(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        out[k] = v
    return out


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_outputs(args, files: dict[Path, str], extra: dict, bath: BathConfig | None) -> None:
    for path, text in files.items():
        _write(path, text)
    meta = {
        "tool": "nvdarwin",
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "config": _echo_args(args),
        "bath": bath_as_dict(bath) if bath is not None else None,
        "outputs": sorted(p.name for p in files),
        **extra,
    }
    main_out = _output_path(args.output)
    _write(main_out.with_name(main_out.name + ".meta.json"),
           json.dumps(meta, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(x: float):
    return x if math.isfinite(x) else None


# -- commands ------------------------------------------------------------------

def cmd_surface(args, bath):
    res = holevo_surface(bath, _times(args), args.max_fragment, corrected=not args.uncorrected)
    rows = [(t * 1e6, m, res.chi_surface[i, j], res.mi_surface[i, j], res.discord_surface[i, j])
            for i, t in enumerate(res.times) for j, m in enumerate(res.fragment_sizes)]
    state0 = initial_branched_state(bath)
    if not args.uncorrected:
        state0 = state0.with_polarizations(1.0)
    red = []
    for t in res.times:
        r = redundancy(evolve_branches(state0, bath, float(t)), args.delta)
        red.append({"time_us": float(t * 1e6), "f_delta": r.f_delta, "redundancy": r.redundancy})
    return {_output_path(args.output): _csv(SURFACE_HEADER, rows)}, {
        "corrected": not args.uncorrected, "delta": args.delta, "redundancy": red}


def cmd_ghz(args, bath):
    res = ghz_plateau(bath, args.n_spins, args.polarization)
    rows = [(m, c, u) for m, c, u in zip(res.fragment_sizes, res.chi_corrected, res.chi_uncorrected)]
    return {_output_path(args.output): _csv(GHZ_HEADER, rows)}, {
        "polarizations": list(res.polarizations)}


def cmd_chernoff(args, bath):
    t = _times(args)
    xi = chernoff_curve(bath, t, corrected=not args.uncorrected)
    return {_output_path(args.output): _csv(CURVE_HEADER, zip(t * 1e6, xi))}, {
        "corrected": not args.uncorrected, "units": "nats"}


def cmd_ramsey(args, bath):
    t = _times(args)
    y = ramsey_curve(bath, t, coherence=args.coherence)
    return {_output_path(args.output): _csv(CURVE_HEADER, zip(t * 1e6, y))}, {
        "quantity": "coherence" if args.coherence else "population"}


def cmd_echo(args, bath):
    taus = np.arange(args.n_points) * args.step_us * 1e-6
    res = loschmidt_echo_signal(bath, taus, args.n_spins, args.entangling_angle)
    out = _output_path(args.output)
    spec_path = out.with_name(out.stem + "_spectrum" + out.suffix)
    return {
        out: _csv(CURVE_HEADER, zip(res.taus * 1e6, res.signal)),
        spec_path: _csv(SPECTRUM_HEADER, zip(res.frequencies, res.spectrum)),
    }, {"precession_hz": [float(x) for x in res.precession_hz],
        "bin_width_hz": float(res.frequencies[1] - res.frequencies[0])}


def cmd_axy(args, bath):
    if args.tau_us is not None:
        tau = args.tau_us * 1e-6
    else:
        if not 1 <= args.spin <= bath.n_spins:
            raise ValueError(f"--spin {args.spin} outside 1..{bath.n_spins}")
        tau = resonance_spacing(bath.larmor_frequency, bath.spins[args.spin - 1].a_parallel)
    designs = [solve_timings(f, tau) for f in args.f_dd]
    rows = "\n".join([TIMING_HEADER, *(d.csv_row() for d in designs)]) + "\n"
    return {_output_path(args.output): rows}, {
        "coupling_bound": COUPLING_BOUND,
        "residuals": [list(d.residuals) for d in designs]}


def cmd_random_bath(args, bath):
    spec = RandomBathSpec(args.concentration, args.radius_nm, args.seed, args.realizations,
                          args.polarization, bath.larmor_frequency)
    t = _times(args)
    baths = generate_random_bath(spec)
    counts = record_count_vs_time(spec, t, args.delta, baths)
    return {_output_path(args.output): _csv(CURVE_HEADER, zip(t * 1e6, counts))}, {
        "n_spins": [b.n_spins for b in baths], "delta": args.delta}


COMMANDS = {
    "surface": (cmd_surface, "Holevo/mutual-information/discord surface over time and fragment size"),
    "ghz": (cmd_ghz, "Holevo plateau of the GHZ protocol"),
    "chernoff": (cmd_chernoff, "mean single-spin quantum Chernoff information versus time"),
    "ramsey": (cmd_ramsey, "electron Ramsey signal versus free evolution time"),
    "echo": (cmd_echo, "Loschmidt echo signal and spectrum around the GHZ state"),
    "axy-design": (cmd_axy, "AXY pulse timings for target filter coefficients"),
    "random-bath": (cmd_random_bath, "record count versus time for random 13C baths"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nvdarwin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, default_out, times=True):
        p.add_argument("--bath", help="bath file (default: bundled four-spin register)")
        p.add_argument("-o", "--output", default=default_out,
                       help=f"CSV path; relative paths go under ${OUTPUT_DIR_ENV} if set")
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        if times:
            p.add_argument("--t-start-us", type=float, default=0.0)
            p.add_argument("--t-stop-us", type=float, default=30.0)
            p.add_argument("--n-times", type=int, default=61)

    for name, (func, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.set_defaults(func=func)
        common(p, f"{name}.csv", times=name in ("surface", "chernoff", "ramsey", "random-bath"))
        if name == "surface":
            p.add_argument("--max-fragment", type=int, default=None)
            p.add_argument("--delta", type=float, default=1 / math.e,
                           help="information deficit for the redundancy summary (default 1/e)")
            p.add_argument("--uncorrected", action="store_true",
                           help="keep the bath polarizations instead of P = 1")
        elif name == "ghz":
            p.add_argument("--n-spins", type=int, default=3)
            p.add_argument("--polarization", type=float, default=None,
                           help="override P for the uncorrected curve")
        elif name == "chernoff":
            p.add_argument("--uncorrected", action="store_true")
        elif name == "ramsey":
            p.add_argument("--coherence", action="store_true",
                           help="write Re of the electron coherence instead of the population")
        elif name == "echo":
            p.add_argument("--n-spins", type=int, default=3)
            p.add_argument("--n-points", type=int, default=1024)
            p.add_argument("--step-us", type=float, default=0.05)
            p.add_argument("--entangling-angle", type=float, default=math.pi / 2)
        elif name == "axy-design":
            p.add_argument("--f-dd", type=float, nargs="+", required=True)
            p.add_argument("--tau-us", type=float, default=None,
                           help="interpulse spacing; default is the resonance of --spin")
            p.add_argument("--spin", type=int, default=1, help="1-based spin index (default 1)")
        elif name == "random-bath":
            p.add_argument("--concentration", type=float, default=0.011)
            p.add_argument("--radius-nm", type=float, default=2.0)
            p.add_argument("--realizations", type=int, default=10)
            p.add_argument("--polarization", type=float, default=1.0)
            p.add_argument("--delta", type=float, default=1 / math.e)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    op = args.command
    try:
        bath = load_bath(args.bath)
    except ConfigError as e:
        print(f"error: {op}: invalid bath file: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {op}: cannot read bath file: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        files, extra = args.func(args, bath)
    except (ValueError, ArithmeticError) as e:
        print(f"error: {op}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        _write_outputs(args, files, extra, bath)
    except OSError as e:
        print(f"error: {op}: cannot write output: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
