"""Batch command-line interface: config ingestion, dispatch, serialization.

Verbs: derive, variance, spectrum, simulate, fock, sweep, compare.
A single JSON config document drives every verb; all randomness is pinned
by explicit seeds, so repeated invocations produce identical files.

Exit codes: 0 success, 2 validation, 3 instability, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import fock as fock_mod
from .bath import EffectiveBath, bath_from_rates, build_bath, check_stability, with_gain
from .errors import (
    MirrorCoolError,
    NumericalError,
    StabilityError,
    UnstableBathError,
    UnsupportedPhaseError,
    ValidationError,
)
from .langevin import SimConfig, psd_vs_analytic, simulate
from .params import PhysicalConstants, PhysicalSetup, derive_coupling
from .spectrum import default_grid, eval_spectrum, fig1_scale, sum_rule_check
from .steady_state import closed_form_moments, high_gain_moments, lyapunov_moments

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INSTABILITY = 3
EXIT_NUMERICAL = 4

_SETUP_FIELDS = {f.name for f in dataclasses.fields(PhysicalSetup)}
_SETUP_REQUIRED = {
    f.name
    for f in dataclasses.fields(PhysicalSetup)
    if f.default is dataclasses.MISSING
}
_BATH_FIELDS = {"omega_m", "gamma_m", "Gamma", "eta", "n_bar", "g", "phi"}


# ---------------------------------------------------------------------------
# serialization helpers

def _plain(value: Any) -> Any:
    """Make dataclasses/arrays/complex JSON-representable, full precision."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, complex):
        return {"real": value.real, "imag": value.imag}
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(_plain(payload), indent=1)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _write_csv(path_or_none: str | None, header: list[str], rows: list[list],
               comments: list[str] | None = None) -> None:
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path_or_none:
        Path(path_or_none).write_text(text, encoding="utf-8")
    else:
        print(text, end="")


def _csv_cell(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# config ingestion

def _load_config(path: str) -> dict:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError("config", f"cannot read {path}: {exc}") from exc
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError("config", f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ValidationError("config", "top-level document must be an object")
    return config


def _constants(config: dict) -> PhysicalConstants:
    block = config.get("unsafe_constants")
    if block is None:
        return PhysicalConstants()
    if not isinstance(block, dict):
        raise ValidationError("unsafe_constants", "must be an object")
    unknown = set(block) - {"hbar", "k_B", "c"}
    if unknown:
        raise ValidationError("unsafe_constants", f"unknown keys {sorted(unknown)}")
    return PhysicalConstants(**{k: float(v) for k, v in block.items()})


def _resolve_bath(config: dict) -> tuple[EffectiveBath, dict]:
    """Build the effective bath from exactly one of setup / bath override."""
    has_setup = "setup" in config
    has_bath = "bath" in config
    if has_setup == has_bath:
        raise ValidationError(
            "config", "exactly one of 'setup' and 'bath' must be present"
        )
    constants = _constants(config)
    if has_setup:
        setup = _setup_from(config["setup"])
        coupling = derive_coupling(setup, constants)
        bath = build_bath(coupling, setup)
        return bath, {"setup": setup, "coupling": coupling, "constants": constants}
    block = config["bath"]
    if not isinstance(block, dict):
        raise ValidationError("bath", "must be an object")
    missing = _BATH_FIELDS - set(block)
    if missing:
        raise ValidationError(sorted(missing)[0], "missing bath field")
    unknown = set(block) - _BATH_FIELDS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown bath field")
    bath = bath_from_rates(**{k: _number(k, block[k]) for k in _BATH_FIELDS})
    return bath, {"constants": constants}


def _number(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"expected a number, got {value!r}")
    return float(value)


def _setup_from(block: Any) -> PhysicalSetup:
    if not isinstance(block, dict):
        raise ValidationError("setup", "must be an object")
    missing = _SETUP_REQUIRED - set(block)
    if missing:
        raise ValidationError(sorted(missing)[0], "missing setup field")
    unknown = set(block) - _SETUP_FIELDS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown setup field")
    return PhysicalSetup(**{k: _number(k, v) for k, v in block.items()})


def _grid(config: dict, bath: EffectiveBath) -> np.ndarray:
    block = config.get("grid")
    if block is None:
        return default_grid(bath)
    omega_min = float(block.get("omega_min", -5 * (bath.omega_m + bath.g)))
    omega_max = float(block.get("omega_max", 5 * (bath.omega_m + bath.g)))
    n_points = int(block.get("n_points", 4096))
    if n_points < 2 or not omega_max > omega_min:
        raise ValidationError("grid", "need omega_max > omega_min and n_points >= 2")
    return np.linspace(omega_min, omega_max, n_points)


# ---------------------------------------------------------------------------
# commands

def cmd_derive(config: dict, args) -> int:
    if "setup" not in config:
        raise ValidationError("setup", "derive requires a physical setup block")
    try:
        bath, ctx = _resolve_bath(config)
        report = {
            "coupling": ctx["coupling"],
            "bath": bath,
            "stability": check_stability(bath),
        }
    except UnstableBathError as exc:
        # reporting is not an error: emit the margins even where the bath
        # coefficients themselves are ill-defined (gamma <= 0)
        setup = _setup_from(config["setup"])
        coupling = derive_coupling(setup, _constants(config))
        sin_phi = math.sin(setup.phi)
        report = {
            "coupling": coupling,
            "bath": None,
            "bath_error": str(exc),
            "stability": {
                "stable": False,
                "lindblad_positive": False,
                "margin_damping": setup.gamma_m - setup.g * sin_phi,
                "margin_spring": coupling.omega_m**2
                - setup.gamma_m * setup.g * sin_phi,
                "positivity_gap": math.nan,
            },
        }
    _emit(report, args.out)
    return EXIT_OK


def cmd_variance(config: dict, args) -> int:
    bath, ctx = _resolve_bath(config)
    constants = ctx["constants"]
    # the closed forms exist only at phi = -pi/2; the Lyapunov route
    # covers every stable phase
    report = {}
    if abs(bath.phi + math.pi / 2) < 1e-9:
        report["closed_form"] = closed_form_moments(bath, constants)
    report["lyapunov"] = lyapunov_moments(bath, constants)
    if bath.g > 0 and "closed_form" in report:
        report["high_gain"] = high_gain_moments(bath, constants)
    if args.format == "csv":
        header = ["method", "var_x", "var_p", "cov_xp_sym", "t_eff"]
        rows = [
            [name, m.var_x, m.var_p, m.cov_xp_sym, m.t_eff]
            for name, m in report.items()
        ]
        _write_csv(args.out, header, rows)
    else:
        _emit(report, args.out)
    return EXIT_OK


def cmd_spectrum(config: dict, args) -> int:
    bath, ctx = _resolve_bath(config)
    constants = ctx["constants"]

    if args.fig1 or args.g_list is not None:
        g_values = (
            [float(x) for x in args.g_list.split(",")]
            if args.g_list
            else [0.0, 1.0, 10.0, 100.0, 1000.0]
        )
        grid = (
            _grid(config, bath)
            if "grid" in config
            else np.linspace(0.0, 8 * bath.omega_m, 2048)
        )
        var_x_g0 = closed_form_moments(with_gain(bath, 0.0), constants).var_x
        columns, sum_rules = {}, {}
        for g in g_values:
            bath_g = with_gain(bath, g)
            series = eval_spectrum(bath_g, grid)
            if args.fig1:
                series = fig1_scale(series, var_x_g0)
            columns[f"S_g{g:g}"] = series.values
            integral, var_x, rel = sum_rule_check(bath_g)
            sum_rules[f"g={g:g}"] = {
                "integral": integral, "var_x": var_x, "rel_err": rel,
            }
        if args.format == "csv":
            header = ["omega"] + list(columns)
            rows = [
                [grid[i]] + [columns[c][i] for c in columns]
                for i in range(grid.size)
            ]
            comments = [
                f"sum_rule {k}: integral={v['integral']!r} var_x={v['var_x']!r} "
                f"rel_err={v['rel_err']:.3e}"
                for k, v in sum_rules.items()
            ]
            _write_csv(args.out, header, rows, comments)
        else:
            _emit(
                {
                    "omega": grid,
                    "series": columns,
                    "normalization": "fig1_scaled" if args.fig1 else "raw",
                    "sum_rule": sum_rules,
                },
                args.out,
            )
        return EXIT_OK

    series = eval_spectrum(bath, _grid(config, bath))
    integral, var_x, rel = sum_rule_check(bath)
    if args.format == "csv":
        comments = [f"sum_rule: integral={integral!r} var_x={var_x!r} rel_err={rel:.3e}"]
        if args.out:
            series.to_csv(args.out, comments)
        else:
            _write_csv(None, ["omega", "S"],
                       [[w, s] for w, s in zip(series.omega_grid, series.values)],
                       comments)
    else:
        _emit(
            {
                "omega": series.omega_grid,
                "S": series.values,
                "normalization": series.normalization,
                "sum_rule": {"integral": integral, "var_x": var_x, "rel_err": rel},
            },
            args.out,
        )
    return EXIT_OK


def _sim_config(config: dict, args) -> SimConfig:
    block = config.get("sim")
    if not isinstance(block, dict):
        raise ValidationError("sim", "simulate/compare need a 'sim' config block")
    known = {"dt", "t_relax", "t_sample", "n_traj", "seed", "welch_segment", "welch_overlap"}
    unknown = set(block) - known
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown sim field")
    merged = dict(block)
    if args.seed is not None:
        merged["seed"] = args.seed
    try:
        return SimConfig(
            dt=float(merged["dt"]),
            t_relax=float(merged["t_relax"]),
            t_sample=float(merged["t_sample"]),
            n_traj=int(merged["n_traj"]),
            seed=int(merged.get("seed", 0)),
            welch_segment=int(merged.get("welch_segment", 4096)),
            welch_overlap=float(merged.get("welch_overlap", 0.5)),
        )
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing sim field") from exc


def _stats_payload(stats) -> dict:
    return {
        "var_x_hat": stats.var_x_hat,
        "var_x_stderr": stats.var_x_stderr,
        "var_p_hat": stats.var_p_hat,
        "var_p_stderr": stats.var_p_stderr,
        "cov_xp_hat": stats.cov_xp_hat,
        "cov_xp_stderr": stats.cov_xp_stderr,
        "psd_var_integral": stats.psd_var_integral,
        "psd_var_integral_stderr": stats.psd_var_integral_stderr,
        "n_effective": stats.n_effective,
        "n_traj": stats.n_traj,
    }


def cmd_simulate(config: dict, args) -> int:
    bath, _ = _resolve_bath(config)
    cfg = _sim_config(config, args)
    stats = simulate(bath, cfg, keep_trajectories=args.dump_traj)

    if args.out:
        base = Path(args.out)
        _emit(_stats_payload(stats), str(base) + ".stats.json")
        _write_csv(
            str(base) + ".psd.csv",
            ["omega", "S", "stderr"],
            [
                [w, s, e]
                for w, s, e in zip(stats.psd_omega, stats.psd_values, stats.psd_stderr)
            ],
        )
        if stats.raw_trajectories is not None:
            np.savez_compressed(
                str(base) + ".traj.npz",
                t=stats.raw_trajectories["t"],
                x=stats.raw_trajectories["x"],
                p=stats.raw_trajectories["p"],
            )
    else:
        payload = _stats_payload(stats)
        payload["psd"] = {
            "omega": stats.psd_omega,
            "S": stats.psd_values,
            "stderr": stats.psd_stderr,
        }
        _emit(payload, None)
    return EXIT_OK


def cmd_fock(config: dict, args) -> int:
    bath, _ = _resolve_bath(config)
    block = dict(config.get("fock") or {})
    max_nbar = float(block.pop("max_nbar", 50.0))
    max_dim = int(block.pop("max_dim", 400))
    if bath.n_bar > max_nbar:
        raise ValidationError(
            "n_bar",
            f"thermal occupation {bath.n_bar:g} exceeds the Fock ceiling "
            f"{max_nbar:g}; this oracle is for desk-scale parameters",
        )
    needed = fock_mod.required_dim(bath.n_bar)
    dim = int(block.pop("dim", needed))
    if max(dim, needed) > max_dim:
        raise ValidationError(
            "dim", f"required dimension {max(dim, needed)} exceeds ceiling {max_dim}"
        )
    cfg = fock_mod.FockConfig(
        dim=dim,
        dt=float(block.pop("dt", 1e-3)),
        t_final=float(block.pop("t_final", 50.0 / max(bath.gamma, 1e-12))),
        tol=float(block.pop("tol", 1e-7)),
    )
    if block:
        raise ValidationError(sorted(block)[0], "unknown fock field")
    gen = fock_mod.build_generator(bath, dim)
    sol = fock_mod.evolve_to_steady(gen, cfg)
    if args.dump_rho:
        if not args.out:
            raise ValidationError("out", "--dump-rho needs --out for the binary file")
        # row-major complex128: interleaved (re, im) float64 pairs
        Path(str(args.out) + ".rho.bin").write_bytes(
            np.ascontiguousarray(sol.rho, dtype=np.complex128).tobytes()
        )
    _emit(
        {
            "mean_a": sol.mean_a,
            "mean_a2": sol.mean_a2,
            "mean_n": sol.mean_n,
            "var_x": sol.var_x,
            "var_p": sol.var_p,
            "trace_error": sol.trace_error,
            "hermiticity_error": sol.hermiticity_error,
            "min_eigenvalue": sol.min_eigenvalue,
            "tail_population": sol.tail_population,
            "t_steady": sol.t_steady,
            "steps": sol.steps,
            "dim": dim,
        },
        args.out,
    )
    return EXIT_OK


_SWEEP_AXES = ("g", "phi", "Gamma", "eta", "T")


def cmd_sweep(config: dict, args) -> int:
    bath, ctx = _resolve_bath(config)
    constants = ctx["constants"]
    block = config.get("sweep")
    if not isinstance(block, dict) or not block:
        raise ValidationError("sweep", "need a nonempty 'sweep' block")
    unknown = set(block) - set(_SWEEP_AXES)
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown sweep axis")
    axes = [(name, [float(v) for v in block[name]]) for name in _SWEEP_AXES if name in block]
    if any(len(values) == 0 for _, values in axes):
        raise ValidationError("sweep", "sweep axes must be nonempty lists")

    header = (
        [name for name, _ in axes]
        + ["gamma", "var_x", "var_p", "cov_xp_sym", "t_eff", "stable",
           "lindblad_positive", "positivity_gap"]
    )
    rows = []
    for combo in itertools.product(*(values for _, values in axes)):
        point = dict(zip((name for name, _ in axes), combo))
        n_bar = bath.n_bar
        if "T" in point:
            n_bar = constants.k_B * point["T"] / (constants.hbar * bath.omega_m)
        try:
            bath_pt = bath_from_rates(
                omega_m=bath.omega_m,
                gamma_m=bath.gamma_m,
                Gamma=point.get("Gamma", bath.Gamma),
                eta=point.get("eta", bath.eta),
                n_bar=n_bar,
                g=point.get("g", bath.g),
                phi=point.get("phi", bath.phi),
            )
            report = check_stability(bath_pt)
            moments = lyapunov_moments(bath_pt, constants)
            row_tail = [
                bath_pt.gamma, moments.var_x, moments.var_p, moments.cov_xp_sym,
                moments.t_eff, report.stable, report.lindblad_positive,
                report.positivity_gap,
            ]
        except (UnstableBathError, StabilityError):
            row_tail = [math.nan] * 5 + [False, False, math.nan]
        rows.append(list(combo) + row_tail)

    if args.format == "json":
        _emit({"header": header, "rows": rows}, args.out)
    else:
        _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_compare(config: dict, args) -> int:
    bath, ctx = _resolve_bath(config)
    constants = ctx["constants"]
    cfg = _sim_config(config, args)
    stats = simulate(bath, cfg)
    closed = closed_form_moments(bath, constants)

    pad = 2 * math.pi / (cfg.welch_segment * cfg.dt)
    grid = np.linspace(0.0, stats.psd_omega.max() + pad, 4096)
    series = eval_spectrum(bath, grid)
    psd_report = psd_vs_analytic(stats, series)

    def z(hat, stderr, ref):
        return (hat - ref) / stderr if stderr > 0 else math.inf

    payload = {
        "moments": {
            "var_x": {"simulated": stats.var_x_hat, "analytic": closed.var_x,
                      "z": z(stats.var_x_hat, stats.var_x_stderr, closed.var_x)},
            "var_p": {"simulated": stats.var_p_hat, "analytic": closed.var_p,
                      "z": z(stats.var_p_hat, stats.var_p_stderr, closed.var_p)},
            "cov_xp": {"simulated": stats.cov_xp_hat, "analytic": closed.cov_xp_sym,
                       "z": z(stats.cov_xp_hat, stats.cov_xp_stderr, closed.cov_xp_sym)},
        },
        "psd": {
            "chi2_per_bin": psd_report.chi2_per_bin,
            "max_abs_z": psd_report.max_abs_z,
            "peak_rel_dev": psd_report.peak_rel_dev,
            "passed": psd_report.passed,
        },
    }
    _emit(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorcool",
        description="Feedback cooling of a mirror by homodyne detection: "
        "analytics, Monte Carlo, and number-basis oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--seed", type=int, default=None, help="override sim seed")
        p.add_argument("--fig1", action="store_true",
                       help="spectrum: emit the scaled multi-gain dataset")
        p.add_argument("--g-list", default=None,
                       help="spectrum: comma-separated gains for the dataset")
        p.add_argument("--dump-traj", type=int, default=0,
                       help="simulate: dump this many raw trajectories (npz)")
        p.add_argument("--dump-rho", action="store_true",
                       help="fock: dump the steady density matrix "
                       "(row-major complex128 binary)")
    return parser


_COMMANDS = {
    "derive": cmd_derive,
    "variance": cmd_variance,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "fock": cmd_fock,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        return _COMMANDS[args.command](config, args)
    except (ValidationError, UnsupportedPhaseError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnstableBathError, StabilityError) as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (NumericalError, MirrorCoolError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
