"""Command-line surface: solve, sweep, inner, spectrum, verify.

One JSON configuration file plus flag overrides (flags win).  Exit codes:
0 success, 1 configuration or input error, 2 numerical failure.  Runs are
deterministic; no clock-dependent seeds exist anywhere.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, connect, inner, linop, verify
from .integrate import read_profile_csv
from .params import AdmissibilityError, derive_params, load_config

_DEFAULT_CONFIG = {
    "epsilon": 0.1,
    "g": 1.5,
    "nu_minus": None,
    "nu_plus": None,
    "tolerances": {
        "newton": 1e-10,
        "inner": 1e-12,
        "ode_rtol": 1e-12,
        "ode_atol": 1e-14,
        "refine": 2e-7,
    },
    "grid": {"inner_points": 2048, "profile_points": 4001},
    "tail_efolds": 8.0,
}


class ConfigError(ValueError):
    pass


def _resolve_config(args) -> dict:
    cfg = json.loads(json.dumps(_DEFAULT_CONFIG))
    if getattr(args, "config", None):
        try:
            user = load_config(args.config)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for key, val in user.items():
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
    for key in ("epsilon", "g", "nu_minus", "nu_plus"):
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if getattr(args, "tol", None) is not None:
        cfg["tolerances"]["newton"] = args.tol
    if getattr(args, "grid", None) is not None:
        cfg["grid"]["profile_points"] = args.grid
    return cfg


def _solve_config(cfg: dict) -> connect.SolveConfig:
    tol = cfg["tolerances"]
    return connect.SolveConfig(
        nu_minus=cfg.get("nu_minus"),
        nu_plus=cfg.get("nu_plus"),
        newton_tol=tol["newton"],
        inner_tol=tol["inner"],
        ode_rtol=tol["ode_rtol"],
        ode_atol=tol["ode_atol"],
        refine_tol=tol["refine"],
        inner_grid_points=cfg["grid"]["inner_points"],
        profile_points=cfg["grid"]["profile_points"],
        tail_efolds=cfg["tail_efolds"],
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    if not out.exists():
        if not out.parent.exists():
            raise ConfigError(f"parent of output directory {out} does not exist")
        out.mkdir()
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _manifest(out: Path, cfg: dict, outputs: list[str], metrics: dict) -> None:
    _write_json(out / "manifest.json", {
        "tool": "orthowall",
        "version": __version__,
        "command": sys.argv,
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": cfg,
        "outputs": outputs,
        "metrics": metrics,
    })


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def cmd_solve(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args)
    p = derive_params(cfg["epsilon"], cfg["g"])
    profile = connect.heteroclinic_solve(p, _solve_config(cfg))
    profile.to_csv(str(out / "profile.csv"))
    report = profile.report()
    report["tail_rates"] = {
        name: {"rate": fit.rate, "target": fit.target, "rel_err": fit.rel_err}
        for name, fit in verify.fit_decay_rates(profile).items()
    }
    _write_json(out / "report.json", report)
    _manifest(out, cfg, ["profile.csv", "report.json", "manifest.json"], {
        "b0_at_zero": report["b0_at_zero"],
        "a0_at_zero": report["a0_at_zero"],
        "sup_w": report["sup_w"],
        "newton_iterations": report["newton_iterations"],
    })
    _say(args, f"solve: converged in {report['newton_iterations']} iterations, "
               f"sup|W| = {report['sup_w']:.3e}, wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args)
    eps_list = cfg.get("epsilon_list")
    if getattr(args, "epsilons", None):
        eps_list = [float(v) for v in args.epsilons.split(",")]
    if not eps_list or len(eps_list) < 4:
        raise ConfigError("sweep needs an epsilon_list with at least 4 values")

    def run_member(eps):
        # per-member artifacts go to distinct subdirectories, so concurrent
        # members never contend on writes
        p = derive_params(eps, cfg["g"])
        profile = connect.heteroclinic_solve(p, _solve_config(cfg))
        sub = out / f"eps_{eps:g}"
        sub.mkdir(exist_ok=True)
        profile.to_csv(str(sub / "profile.csv"))
        _write_json(sub / "report.json", profile.report())
        return {
            "epsilon": eps,
            "a0_at_zero": profile.a0_at_zero,
            "corner_half_width": abs(profile.x_star_left),
            "b0_at_zero": profile.b0_at_zero,
        }

    rows, excluded = [], []
    members = sorted(eps_list)
    workers = max(1, int(getattr(args, "workers", 1) or 1))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {eps: pool.submit(run_member, eps) for eps in members}
        results = {eps: fut for eps, fut in futures.items()}
    else:
        results = None
    for eps in members:
        try:
            rows.append(results[eps].result() if results else run_member(eps))
        except Exception as exc:  # noqa: BLE001 - recorded per member
            excluded.append({"epsilon": eps, "error": str(exc)})
            _say(args, f"sweep: epsilon = {eps:g} failed: {exc}")
    scaling = {"rows": rows, "excluded": excluded}
    if len(rows) >= 2:
        le = np.log([r["epsilon"] for r in rows])
        scaling["slope_a0"] = float(np.polyfit(
            le, np.log([abs(r["a0_at_zero"]) for r in rows]), 1)[0])
        scaling["slope_width"] = float(np.polyfit(
            le, np.log([r["corner_half_width"] for r in rows]), 1)[0])
    _write_json(out / "scaling.json", scaling)
    _manifest(out, cfg, ["scaling.json"], {
        "converged": len(rows), "failed": len(excluded),
        "slope_a0": scaling.get("slope_a0"),
        "slope_width": scaling.get("slope_width"),
    })
    _say(args, f"sweep: {len(rows)} converged, {len(excluded)} failed; wrote {out}")
    if len(excluded) * 2 > len(eps_list):
        return 2
    return 0


def cmd_inner(args) -> int:
    out = _out_dir(args)
    prob = inner.InnerProblem(
        a_minus=args.a_minus, a_plus=args.a_plus,
        boundary_plus=tuple(inner.assemble_boundary(
            "plus", (args.x10, args.x20), args.a_plus)),
        grid_points=args.points,
    )
    sol = inner.solve_inner(prob)
    sol.to_csv(str(out / "inner.csv"))
    residual = inner.inner_residual(sol)
    payload = {
        "a_minus": args.a_minus, "a_plus": args.a_plus,
        "x10": args.x10, "x20": args.x20,
        "residual": residual,
        "sweeps": len(sol.segments),
        "contraction_constant": inner.contraction_constant(args.a_plus),
        "max_delta_ratio": max(sol.delta_ratios(floor=1e-13), default=0.0),
    }
    _write_json(out / "inner_report.json", payload)
    _manifest(out, {"inner": payload}, ["inner.csv", "inner_report.json"],
              {"residual": residual})
    _say(args, f"inner: residual {residual:.3e} over {len(sol.segments)} sweeps")
    return 0


def _load_profile(args):
    path = Path(args.profile)
    if not path.exists():
        raise ConfigError(f"profile file {path} not found")
    x, states, w = read_profile_csv(str(path))
    report = None
    rp = Path(args.report) if getattr(args, "report", None) else path.parent / "report.json"
    if rp.exists():
        report = json.loads(rp.read_text(encoding="utf-8"))
    return x, states, w, report


def cmd_spectrum(args) -> int:
    out = _out_dir(args)
    x, states, w, report = _load_profile(args)
    if report is None:
        raise ConfigError("spectrum needs the report.json written next to the profile")
    p = derive_params(report["epsilon"], report["g"])
    op = linop.assemble_Mg(x, states, p)
    diag = linop.kernel_diagnostics(op, states, p)
    payload = {
        "smallest_singular_values": list(diag.smallest),
        "separation": diag.separation,
        "kernel_angle": diag.kernel_angle,
        "orthogonality_defect": diag.orthogonality_defect,
        "l_smallest": diag.l_smallest,
        "kernel_residual": linop.kernel_residual(
            op, states, exclude=report.get("blend_windows", ())),
        "essential_edges": {
            "M": linop.asymptotic_spectrum(p.g, "minus", "M"),
            "L_minus": linop.asymptotic_spectrum(p.g, "minus", "L"),
            "L_plus": linop.asymptotic_spectrum(p.g, "plus", "L"),
        },
    }
    _write_json(out / "spectrum.json", payload)
    _manifest(out, {"profile": str(args.profile)}, ["spectrum.json"],
              {"kernel_angle": diag.kernel_angle})
    _say(args, f"spectrum: kernel angle {diag.kernel_angle:.3e} rad, "
               f"separation {diag.separation:.3e}")
    return 0


def cmd_verify(args) -> int:
    out = _out_dir(args)
    x, states, w, report = _load_profile(args)
    rep = verify.VerificationReport()
    rep.add("first_integral", "sup |W| < 1e-8 over the profile",
            float(np.abs(w).max()), 1e-8, 0.0, one_sided=True)
    rep.add("b_prime_positive", "B' > 0 at every sample",
            float(-states[:, 5].min()), 0.0, 0.0, one_sided=True)
    rep.add("b_monotone", "B strictly increasing over the grid",
            float(-np.min(np.diff(states[:, 4]))), 0.0, 0.0, one_sided=True)
    if report is not None:
        p = derive_params(report["epsilon"], report["g"])
        eps, delta = p.epsilon, p.delta
        xsp = report["x_star_plus"]
        guard = 2.0 * xsp

        def window_fit(lo, hi, values, name, target, envelope=False):
            mask = (x >= lo) & (x <= hi)
            fit = verify.fit_exponential_rate(x[mask], values[mask],
                                              envelope=envelope, name=name,
                                              target=target)
            rep.add(f"rate_{name}", f"{name} rate within 10% of {target:.6g}",
                    fit.rate, fit.target, 0.1 * abs(target))

        window_fit(0.9 * x[0], -guard, states[:, 4], "left_b", eps * delta)
        window_fit(guard, 0.9 * x[-1], 1.0 - states[:, 4], "right_b",
                   2.0**0.5 * eps)
        window_fit(guard, 0.9 * x[-1], states[:, 0], "right_a_envelope",
                   (delta / 2.0) ** 0.5, envelope=True)
    _write_json(out / "verify.json", rep.to_dict())
    _manifest(out, {"profile": str(args.profile)}, ["verify.json"],
              {"passed": rep.passed})
    _say(args, f"verify: {'PASS' if rep.passed else 'FAIL'} "
               f"({sum(e.passed for e in rep.entries)}/{len(rep.entries)} checks)")
    return 0 if rep.passed else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orthowall",
        description="Construct and verify the domain-wall connecting orbit "
                    "of the 6-D amplitude system.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, profile=False):
        sp.add_argument("--config", "-c", help="JSON configuration file")
        sp.add_argument("--out", "-o", required=True, help="output directory")
        sp.add_argument("--quiet", action="store_true")
        if not profile:
            sp.add_argument("--epsilon", type=float)
            sp.add_argument("--g", type=float)
            sp.add_argument("--nu-minus", dest="nu_minus", type=float)
            sp.add_argument("--nu-plus", dest="nu_plus", type=float)
            sp.add_argument("--tol", type=float, help="matching Newton tolerance")
            sp.add_argument("--grid", type=int, help="profile grid points")

    sp = sub.add_parser("solve", help="compute one connecting orbit")
    common(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("sweep", help="epsilon sweep with scaling exponents")
    common(sp)
    sp.add_argument("--epsilons", help="comma-separated epsilon list")
    sp.add_argument("--workers", type=int, default=1,
                    help="worker pool size for concurrent member solves")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("inner", help="solve the rescaled corner-layer problem")
    common(sp, profile=True)
    sp.add_argument("--a-plus", dest="a_plus", type=float, required=True)
    sp.add_argument("--a-minus", dest="a_minus", type=float, required=True)
    sp.add_argument("--x10", type=float, default=0.0)
    sp.add_argument("--x20", type=float, default=0.0)
    sp.add_argument("--points", type=int, default=2048)
    sp.set_defaults(fn=cmd_inner)

    sp = sub.add_parser("spectrum", help="linearized-operator diagnostics")
    common(sp, profile=True)
    sp.add_argument("profile", help="profile.csv path")
    sp.add_argument("--report", help="report.json path (default: next to profile)")
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("verify", help="check quantitative claims on a profile")
    common(sp, profile=True)
    sp.add_argument("profile", help="profile.csv path")
    sp.add_argument("--report", help="report.json path (default: next to profile)")
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, AdmissibilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (connect.MatchingError, connect.RealizationError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
