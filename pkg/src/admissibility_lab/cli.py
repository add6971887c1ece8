"""Command-line entry point: run a sweep or simulation, write ``<command>.csv`` and ``<command>.json``.

Parameters come from an optional TOML file (``--config``) and are overridden
by ``--key value`` flags. Exit status is 0 on success, 2 for invalid input,
3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import decay, diagonal, halfspace, rectangle, sobolev
from .errors import NumericalFailure
from .fitting import ExponentFit, fit_exponent
from .parallel import ordered_map
from .textio import load_toml, loads_toml, write_rows

REQUIRED = object()


def parse_grid(text: str) -> tuple[float, float, int, str]:
    """Parse ``lo:hi:N(log|lin)``, e.g. ``10:1000:24log``."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} must look like lo:hi:Nlog or lo:hi:Nlin")
    lo, hi = float(parts[0]), float(parts[1])
    spec = parts[2].strip()
    kind = spec[-3:]
    if kind not in ("log", "lin") or not spec[:-3].isdigit():
        raise ValueError(f"grid {text!r}: last field must be an integer followed by 'log' or 'lin'")
    n = int(spec[:-3])
    if n < 1 or not lo < hi or (kind == "log" and lo <= 0):
        raise ValueError(f"grid {text!r}: need n >= 1, lo < hi, and lo > 0 for log grids")
    return lo, hi, n, kind


def grid_points(text: str) -> np.ndarray:
    lo, hi, n, kind = parse_grid(text)
    if n == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, n) if kind == "log" else np.linspace(lo, hi, n)


def resonance_free_points(text: str) -> np.ndarray:
    """Grid with irrational offsets, used wherever exact resonances must be avoided."""
    lo, hi, n, kind = parse_grid(text)
    return rectangle.irrational_grid(lo, hi, n, log=(kind == "log"))


def _bool(x) -> bool:
    if isinstance(x, bool):
        return x
    s = str(x).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {x!r}")


def _int(x) -> int:
    if isinstance(x, float) and not x.is_integer():
        raise ValueError(f"not an integer: {x!r}")
    return int(x)


@dataclass
class Outcome:
    header: list
    rows: list
    fit: ExponentFit | None
    extras: dict


@dataclass(frozen=True)
class Command:
    keys: dict  # name -> (converter, default or REQUIRED)
    run: Callable[[dict, int, int], Outcome]


RECT_KEYS = {
    "a": (float, 1.0),
    "b": (float, 1.0),
    "M": (_int, REQUIRED),
    "grid": (str, REQUIRED),
    "side": (str, "S"),
    "s0": (float, 0.0),
    "s1": (float, None),
}


def _patch(cfg, model, amplitude):
    s1 = model.side_length(cfg["side"]) if cfg["s1"] is None else cfg["s1"]
    return rectangle.BoundaryPatch(cfg["side"], cfg["s0"], s1, amplitude)


def run_symbols(cfg, seed, workers) -> Outcome:
    sweep, fit = halfspace.sweep_and_fit(cfg["kind"], cfg["weight"], grid_points(cfg["grid"]),
                                         cfg["tau_max_factor"], workers)
    return Outcome(["freq", "sup", "weight", "kind"], list(sweep.rows()), fit, {})


def run_rect_ntd(cfg, seed, workers) -> Outcome:
    model = rectangle.build_model(cfg["a"], cfg["b"], cfg["M"])
    sweep = rectangle.ntd_sweep(model, resonance_free_points(cfg["grid"]), cfg["J"], cfg["sigma"], workers)
    return Outcome(
        ["lambda", "norm_l2", "norm_h1"],
        list(zip(sweep.lams, sweep.norm_l2, sweep.norm_h1)),
        sweep.fit_l2,
        {"h1_slope": sweep.fit_h1.slope, "h1_stderr": sweep.fit_h1.stderr,
         "h1_curvature_flag": sweep.fit_h1.curvature_flag, "resolved_J": sweep.J},
    )


def run_hautus(cfg, seed, workers) -> Outcome:
    model = rectangle.build_model(cfg["a"], cfg["b"], cfg["M"])
    scan = rectangle.hautus_scan(model, _patch(cfg, model, 1.0), resonance_free_points(cfg["grid"]), workers)
    fit = fit_exponent(scan.lams, scan.values) if scan.lams.size >= 3 and np.all(scan.values > 0) else None
    i = int(np.argmin(scan.values))
    return Outcome(["lambda", "sigma_min"], list(zip(scan.lams, scan.values)), fit,
                   {"min_sigma": float(scan.values[i]), "argmin_lambda": float(scan.lams[i]),
                    "all_positive": bool(np.all(scan.values > 0))})


def run_damped_resolvent(cfg, seed, workers) -> Outcome:
    model = rectangle.build_model(cfg["a"], cfg["b"], cfg["M"])
    res = rectangle.damped_resolvent_sweep(model, _patch(cfg, model, cfg["b0"]),
                                           resonance_free_points(cfg["grid"]), workers)
    return Outcome(["lambda", "res_norm"], list(zip(res.lams, res.values)), res.fit,
                   {"max_res_norm": float(np.max(res.values))})


def run_decay(cfg, seed, workers) -> Outcome:
    model = rectangle.build_model(cfg["a"], cfg["b"], cfg["M"])
    system = decay.DampedGalerkinSystem.from_rectangle(model, _patch(cfg, model, cfg["b0"]))
    rec = decay.simulate(system, decay.classical_data(model, cfg["profile"]), cfg["T"], cfg["dt"])
    window = (cfg["fit_t0"], cfg["T"] if cfg["fit_t1"] is None else cfg["fit_t1"])
    fit = decay.decay_fit(rec, window)
    stride = max(1, cfg["stride"])
    rows = list(zip(rec.times[::stride], rec.energies[::stride], rec.cumulative_dissipation[::stride]))
    return Outcome(["t", "E", "cumulative_dissipation"], rows, fit, {
        "decay_rate": -fit.slope,
        "dissipation_residual": decay.dissipation_residual(rec, system),
        "max_energy_increase": decay.max_energy_increase(rec),
        "one_sided_ratio": decay.one_sided_decay_ratio(rec, window),
        "final_energy": float(rec.energies[-1]),
        "caveat": decay.DECAY_CAVEAT,
    })


def run_sobolev(cfg, seed, workers) -> Outcome:
    if cfg["signal"]:
        u = sobolev.read_signal_csv(cfg["signal"])
        orders = grid_points(cfg["orders"])
        norms = [sobolev.hs_norm(u, s, cfg["pad_factor"]) for s in orders]
        return Outcome(["s", "norm"], list(zip(orders, norms)), None, {})
    # frequency sweep of exp(i k t): the norm grows like k^s
    T, n, s = cfg["T"], cfg["n"], cfg["s"]
    ks = grid_points(cfg["grid"])
    norms = ordered_map(
        lambda k: sobolev.hs_norm(sobolev.SampledSignal.sample(lambda t: np.exp(1j * k * t), T, n), s,
                                  cfg["pad_factor"]),
        ks, workers)
    return Outcome(["freq", "norm"], list(zip(ks, norms)), fit_exponent(ks, norms), {})


def run_diag(cfg, seed, workers) -> Outcome:
    if cfg["model"]:
        model = diagonal.load_model(cfg["model"])
    else:
        model = diagonal.skew_model(cfg["K"], cfg["eta_c"], cfg["eta_b"], cfg["symmetric"])
    omegas = grid_points(cfg["grid"])
    vals, fit = diagonal.resolvent_sweep(model, cfg["sigma"], omegas, cfg["quantity"])
    extras = {}
    if cfg["eta"] is not None:
        st = diagonal.admissibility_ratio(model, cfg["eta"], cfg["T"], cfg["trials"], seed)
        extras = {"max_ratio": st.max_ratio, "mean_ratio": st.mean_ratio}
    return Outcome(["omega", "value"], list(zip(omegas, vals)), fit, extras)


COMMANDS = {
    "symbols": Command(
        {"kind": (str, REQUIRED), "weight": (str, "one"), "grid": (str, REQUIRED),
         "tau_max_factor": (float, None)},
        run_symbols,
    ),
    "rect-ntd": Command(
        {"a": (float, 1.0), "b": (float, 1.0), "M": (_int, REQUIRED), "grid": (str, REQUIRED),
         "J": (_int, None), "sigma": (float, 1.0)},
        run_rect_ntd,
    ),
    "hautus": Command(dict(RECT_KEYS), run_hautus),
    "damped-resolvent": Command({**RECT_KEYS, "b0": (float, 1.0)}, run_damped_resolvent),
    "decay": Command(
        {k: v for k, v in RECT_KEYS.items() if k != "grid"}
        | {"b0": (float, 1.0), "T": (float, REQUIRED), "dt": (float, REQUIRED),
           "profile": (str, "gaussian_bump"), "fit_t0": (float, REQUIRED), "fit_t1": (float, None),
           "stride": (_int, 1)},
        run_decay,
    ),
    "sobolev": Command(
        {"signal": (str, None), "orders": (str, "-1:2:13lin"), "grid": (str, "4:64:5log"),
         "s": (float, 0.5), "T": (float, 2 * math.pi), "n": (_int, 4096), "pad_factor": (_int, 8)},
        run_sobolev,
    ),
    "diag": Command(
        {"model": (str, None), "K": (_int, 512), "eta_c": (float, 0.5), "eta_b": (float, 0.0),
         "symmetric": (_bool, False), "sigma": (float, 1.0), "grid": (str, REQUIRED),
         "quantity": (str, "observation"), "eta": (float, None), "T": (float, 2 * math.pi),
         "trials": (_int, 8)},
        run_diag,
    ),
}


class MissingKey(ValueError):
    pass


def _coerce_override(text: str):
    """Type a raw ``--key value`` string (TOML scalar rules, falling back to a string)."""
    try:
        return loads_toml(f"v = {text}")["v"]
    except Exception:
        return text


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    spec = COMMANDS[command].keys
    merged = {k: v for k, v in file_cfg.items() if not isinstance(v, dict)}
    merged.update(file_cfg.get(command, {}) if isinstance(file_cfg.get(command), dict) else {})
    merged.update(overrides)
    unknown = sorted(set(merged) - set(spec))
    if unknown:
        raise ValueError(f"unknown key(s) for {command}: {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in spec.items():
        if key in merged and merged[key] is not None:
            try:
                out[key] = conv(merged[key])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"bad value for {key}: {merged[key]!r} ({exc})") from exc
        elif default is REQUIRED:
            raise MissingKey(f"missing required key '{key}' for {command}")
        else:
            out[key] = default
    return out


def _split_overrides(extra: list[str]) -> dict:
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ValueError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ValueError(f"flag --{key} needs a value")
            val = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = _coerce_override(val)
    return out


def _json_value(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def build_summary(command: str, outcome: Outcome, cfg: dict, seed: int) -> dict:
    fit = outcome.fit.summary() if outcome.fit is not None else dict.fromkeys(
        ("slope", "stderr", "window_lo", "window_hi", "n_points", "curvature_flag"))
    summary = {"command": command, **fit, "seed": seed}
    summary.update(outcome.extras)
    summary.update({f"config_{k}": v for k, v in cfg.items()})
    return {k: _json_value(v) for k, v in summary.items()}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="admissibility-lab",
        allow_abbrev=False,
        description="Frequency sweeps, Hautus scans and decay simulations with exponent fits.",
        epilog="Any further --key value pair overrides the matching config key.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="TOML file with parameters")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    p.add_argument("--seed", type=int, default=diagonal.DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1, help="threads for sweep points")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    command = args.command
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if args.workers < 1:
            raise ValueError("workers must be >= 1")
        file_cfg = load_toml(args.config) if args.config else {}
        cfg = resolve_config(command, file_cfg, _split_overrides(extra))
        outcome = COMMANDS[command].run(cfg, args.seed, args.workers)
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        print(f"{command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"{command}: invalid input: {msg}", file=sys.stderr)
        return 2

    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / command
    write_rows(stem.with_suffix(".csv"), outcome.header, outcome.rows)
    summary = build_summary(command, outcome, cfg, args.seed)
    stem.with_suffix(".json").write_text(json.dumps(summary, indent=1) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
