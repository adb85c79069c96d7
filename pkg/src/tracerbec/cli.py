"""Command-line entry point: ``tracerbec <subcommand> [--config FILE] [--out DIR]``.

Outputs are plain CSV (one header line, fixed columns), a JSON manifest per
run carrying the SHA-256 of the resolved configuration, and flat binary
field snapshots (header int64 n, float64 L, float64 t; then n^3
little-endian float64 (re, im) pairs in C order).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from . import __version__
from .acceptance import run_suite
from .config import Config, default_config, load_config
from .dynamics import RunConfig, SpongeConfig, evolve
from .errors import ConfigError, TracerError
from .reduced import decade_integrals, fit_decay_exponent, integrate_reduced, radiated_norm_proxy, trailing_envelope
from .spectral import critical_speed, default_k_max, dispersion_omega, phase_velocity, sound_speed
from .statics import decay_profile, self_force, shell_average, static_profile, static_residual
from .twave import (FrictionEvaluator, analytic_friction_constant, forced_branches,
                    friction_force_closed, response_curve, traveling_profile)

log = logging.getLogger("tracerbec")

SUBCOMMANDS = ("dispersion", "static", "twave", "friction-curve", "forced", "evolve", "reduced", "verify")


# -- output helpers --------------------------------------------------------------


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_manifest(path: Path, cfg: Config, subcommand: str, results: dict, wall_time: Optional[float] = None):
    doc = {
        "subcommand": subcommand,
        "version": __version__,
        "config_sha256": cfg.digest,
        "config": cfg.data,
        "results": results,
    }
    if wall_time is not None:
        doc["wall_time"] = wall_time
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_snapshot(path: Path, values: np.ndarray, L: float, t: float) -> None:
    n = values.shape[0]
    with open(path, "wb") as fh:
        fh.write(np.array([n], dtype="<i8").tobytes())
        fh.write(np.array([L, t], dtype="<f8").tobytes())
        pairs = np.empty(values.shape + (2,), dtype="<f8")
        pairs[..., 0] = values.real
        pairs[..., 1] = values.imag
        fh.write(pairs.tobytes(order="C"))


def read_snapshot(path) -> tuple:
    """Inverse of the snapshot writer: (values, L, t)."""
    raw = Path(path).read_bytes()
    n = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    L, t = np.frombuffer(raw[8:24], dtype="<f8")
    pairs = np.frombuffer(raw[24:], dtype="<f8").reshape((n, n, n, 2))
    return pairs[..., 0] + 1j * pairs[..., 1], float(L), float(t)


def _speeds(sec: dict, geometric: bool) -> np.ndarray:
    f = np.geomspace if geometric else np.linspace
    return f(float(sec["speed_min"]), float(sec["speed_max"]), int(sec["count"]))


# -- subcommands -----------------------------------------------------------------


def cmd_dispersion(cfg: Config, out: Path, args) -> dict:
    sec = cfg.section("dispersion")
    k_max = sec["k_max"] or default_k_max(cfg.Phi, cfg.grid)
    ks = np.linspace(k_max / sec["samples"], k_max, int(sec["samples"]))
    om = dispersion_omega(cfg.params, cfg.Phi, np.stack([ks, 0 * ks, 0 * ks], axis=-1))
    write_csv(out / "dispersion.csv", ["k", "omega", "phase_velocity"],
              zip(ks, om, phase_velocity(cfg.params, cfg.Phi, ks)))
    return {"v_star": sound_speed(cfg.params, cfg.Phi),
            "v_star_display_form": sound_speed(cfg.params, cfg.Phi, display_form=True),
            "v_c": critical_speed(cfg.params, cfg.Phi, k_max=k_max), "k_max": k_max}


def cmd_static(cfg: Config, out: Path, args) -> dict:
    sec = cfg.section("static")
    X = sec["X"]
    beta = static_profile(cfg.params, cfg.W, cfg.Phi, X, cfg.grid, sec["project_zero_mode"])
    r, prof = shell_average(beta.values.real, cfg.grid, X)
    write_csv(out / "static_profile.csv", ["r", "re_beta_shell_mean"], zip(r, prof))
    write_snapshot(out / "static_field.bin", beta.values, cfg.grid.L, 0.0)
    rep = decay_profile(beta, X)
    return {
        "residual": static_residual(cfg.params, cfg.W, cfg.Phi, beta, X),
        "self_force": self_force(cfg.params, cfg.W, beta, X).tolist(),
        "zero_mode_projected": beta.meta["zero_mode_projected"],
        "decay": {"classification": rep.classification, "rate": rep.rate, "exponent": rep.exponent,
                  "diagnostic": rep.diagnostic},
    }


def cmd_twave(cfg: Config, out: Path, args) -> dict:
    sec = cfg.section("twave")
    speed = args.speed if args.speed is not None else float(sec["speed"])
    d = np.asarray(sec["direction"], dtype=float)
    v = speed * d / np.linalg.norm(d)
    ev = FrictionEvaluator(cfg.params, cfg.W, cfg.Phi, cfg.grid)
    est = ev.force(v)
    eps = sec["eps"] if sec["eps"] is not None else float(est.eps[-1]) if len(est.eps) else 0.0
    prof = traveling_profile(cfg.params, cfg.W, cfg.Phi, v, eps, cfg.grid, v_c=ev.v_c)
    g = cfg.grid
    mid = g.n // 2
    line = prof.profile.values[:, mid, mid]
    write_csv(out / "twave_axis.csv", ["x", "re_gamma", "im_gamma"], zip(g.x, line.real, line.imag))
    write_snapshot(out / "twave_field.bin", prof.profile.values, g.L, 0.0)
    return {"velocity": v.tolist(), "regime": prof.regime, "v_c": ev.v_c,
            "v_star": sound_speed(cfg.params, cfg.Phi), "eps": eps,
            "friction": est.force.tolist(), "friction_error": est.error}


def cmd_friction_curve(cfg: Config, out: Path, args) -> dict:
    sec = cfg.section("friction")
    speeds = _speeds(sec, geometric=sec["speed_min"] > 0)
    p = cfg.params
    if sec["method"] == "closed":
        C = sec["C"] if sec["C"] is not None else analytic_friction_constant(p)
        F = [float(np.linalg.norm(friction_force_closed(p, cfg.W, (s, 0, 0), C))) for s in speeds]
        err = [0.0] * len(speeds)
        res = {"method": "closed", "C": C, "v_c": 0.0, "v_star": 0.0}
    else:
        ev = FrictionEvaluator(p, cfg.W, cfg.Phi, cfg.grid)
        F, err = [], []
        for s in speeds:
            est = ev.force((s, 0.0, 0.0), check_resolution=False)
            F.append(float(-est.force[0]))
            err.append(est.error)
        res = {"method": "spectral", "v_c": ev.v_c, "v_star": sound_speed(p, cfg.Phi)}
    write_csv(out / "friction_curve.csv", ["speed", "friction", "error"], zip(speeds, F, err))
    F = np.asarray(F)
    pos = F > 0
    if pos.sum() >= 6:
        lv, lf = np.log(speeds[pos]), np.log(F[pos])
        res["slope_low"] = float(np.polyfit(lv[:5], lf[:5], 1)[0])
        res["slope_high"] = float(np.polyfit(lv[-5:], lf[-5:], 1)[0])
    return res


def _parse_force(text: str, F_max: float) -> float:
    t = text.replace(" ", "")
    for suffix in ("*Fmax", "xFmax", "Fmax"):
        if t.endswith(suffix):
            head = t[: -len(suffix)]
            return (float(head) if head else 1.0) * F_max
    return float(t)


def cmd_forced(cfg: Config, out: Path, args) -> dict:
    sec = cfg.section("forced")
    speeds = _speeds(sec, geometric=False)
    curve = response_curve(cfg.params, cfg.W, cfg.Phi, speeds, cfg.grid)
    write_csv(out / "response_curve.csv",
              ["speed", "force_parallel", "force_transverse_max", "epsilon_extrapolation_error"],
              zip(curve.speeds, curve.forces, curve.transverse, curve.errors))
    if args.force is not None:
        F = _parse_force(args.force, curve.F_max)
    elif sec["force"] is not None:
        F = float(sec["force"])
    else:
        F = 0.5 * curve.F_max
    br = forced_branches(curve, F)
    return {
        "v_c": curve.v_c, "v_star": sound_speed(cfg.params, cfg.Phi),
        "v_peak": curve.v_peak, "F_max": curve.F_max, "force": F,
        "branch_kind": br.kind, "branch_count": br.count, "speeds": list(br.speeds),
        "force_residuals": [abs(curve.force_at(s) - F) / F if F else 0.0 for s in br.speeds],
    }


def cmd_evolve(cfg: Config, out: Path, args):
    sec = cfg.section("evolve")
    sp = sec["sponge"]
    g = cfg.grid
    t_max = args.tmax if args.tmax is not None else float(sec["t_max"])
    P0 = sec["P0"] if args.speed is None else [args.speed, 0.0, 0.0]
    rc = RunConfig(grid=g, params=cfg.params, W=cfg.W, Phi=cfg.Phi, dt=float(sec["dt"]), t_max=t_max,
                   X0=tuple(sec["X0"]), P0=tuple(P0), beta0=sec["beta0"],
                   sponge=SpongeConfig(sp["width_fraction"] * g.L, float(sp["strength"]), int(sp["interval"])),
                   sample_every=int(sec["sample_every"]), r_obs=float(sec["r_obs"]),
                   snapshot_every=int(sec["snapshot_every"]), log_times=bool(sec["log_times"]))
    traj = evolve(rc)
    speed = traj.speed
    rows = (list(traj.X[i]) + list(traj.P[i]) for i in range(len(traj.t)))
    write_csv(out / "trajectory.csv",
              ["t", "X1", "X2", "X3", "P1", "P2", "P3", "abs_P", "E", "ball_sup_dev"],
              ([traj.t[i], *r, speed[i], traj.energy[i], traj.ball_dev[i]] for i, r in enumerate(rows)))
    for j, (t, beta) in enumerate(traj.snapshots):
        write_snapshot(out / f"snapshot_{j:05d}.bin", beta.values, g.L, t)
    res = {"final_speed": float(speed[-1]), "ball_dev_peak": float(traj.ball_dev.max()),
           "ball_dev_final": float(traj.ball_dev[-1]), "snapshots": len(traj.snapshots)}
    try:
        te, env = trailing_envelope(traj.t, speed, traj.t[-1] / 10.0)
        res["decay_slope"], res["decay_slope_stderr"] = fit_decay_exponent(te, env)
    except TracerError as exc:
        res["decay_slope"] = None
        res["decay_slope_note"] = str(exc)
    return res, traj.wall_time


def cmd_reduced(cfg: Config, out: Path, args) -> dict:
    if cfg.params.kappa != 0:
        raise ConfigError("the reduced ODE needs the closed-form friction law (kappa = 0)")
    sec = cfg.section("reduced")
    C = sec["C"] if sec["C"] is not None else analytic_friction_constant(cfg.params)
    T = args.tmax if args.tmax is not None else float(sec["t_max"])
    v0 = sec["v0"] if args.speed is None else [args.speed, 0.0, 0.0]
    sol = integrate_reduced(cfg.params, cfg.W, C, v0, T, rtol=float(sec["rtol"]), n_samples=int(sec["samples"]))
    proxy = radiated_norm_proxy(cfg.params, cfg.W, C, sol)
    write_csv(out / "reduced.csv", ["t", "speed", "radiated_proxy"], zip(sol.t, sol.speed, proxy))
    lo, hi = (float(x) for x in sec["fit_window"])
    slope, err = fit_decay_exponent(sol.t, sol.speed, (lo, min(hi, T)))
    return {"C": C, "exponent": slope, "stderr": err, "window": [lo, min(hi, T)],
            "decade_integrals": decade_integrals(sol.t, proxy, 1.0).tolist(), "nfev": sol.nfev}


def cmd_verify(cfg: Config, out: Path, args) -> dict:
    results = run_suite(args.suite, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed ({args.suite} suite)")
    rows = [(r.number, r.passed, r.runtime, r.budget) for r in results]
    write_csv(out / "verify.csv", ["criterion", "passed", "runtime", "budget"], rows)
    return {"suite": args.suite, "passed": passed, "total": len(results),
            "criteria": {str(r.number): {"name": r.name, "passed": r.passed, "details": r.details,
                                         "error": r.error} for r in results}}


COMMANDS = {
    "dispersion": cmd_dispersion,
    "static": cmd_static,
    "twave": cmd_twave,
    "friction-curve": cmd_friction_curve,
    "forced": cmd_forced,
    "evolve": cmd_evolve,
    "reduced": cmd_reduced,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tracerbec", description="Tracer particle in a Bose gas: spectral solvers")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML configuration file")
        p.add_argument("--out", type=Path, help="output directory (default from [output] dir)")
        p.add_argument("--threads", type=int, default=1, help="FFT worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("twave", "evolve", "reduced"):
            p.add_argument("--speed", type=float, help="speed override (twave |v|, evolve P0_x, reduced v0_x)")
        if name == "forced":
            p.add_argument("--force", help="force magnitude, absolute or relative like '2xFmax'")
        if name in ("evolve", "reduced"):
            p.add_argument("--tmax", type=float, help="final time override")
        if name == "verify":
            p.add_argument("--suite", choices=("fast", "full"), default="fast")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
        out = args.out or Path(cfg.section("output")["dir"])
        out.mkdir(parents=True, exist_ok=True)
        with sfft.set_workers(max(1, args.threads)):
            res = COMMANDS[args.command](cfg, out, args)
    except (TracerError, ValueError, OSError) as exc:
        print(f"tracerbec {args.command}: {exc}", file=sys.stderr)
        return 2
    wall = None
    if isinstance(res, tuple):
        res, wall = res
    write_manifest(out / f"{args.command}.json", cfg, args.command, res, wall)
    if args.command == "verify" and res["passed"] != res["total"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
