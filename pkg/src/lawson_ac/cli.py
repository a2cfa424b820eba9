"""Command-line front end: ``lawson-ac <command> --config <file> [--out <dir>]``.

Exit codes: 0 success, 2 configuration error, 3 numerical nonconvergence,
4 geometry or validity error. Every run writes ``manifest.json`` listing the
files it produced with their sha256 checksums.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

from .cone import (curvature_power_coefficient, indicial_polynomial, make_cone,
                   principal_curvatures, write_cone_table, xi_shift)
from .config import COMMANDS, read_config
from .errors import ArtifactError, ConfigError
from .fermi import FermiChart
from .fitting import _jsonable
from .leaf import leaf_asymptotics, leaf_for_coefficient
from .nodal import extract_nodal, fit_asymptotics, general_cone_expansion, graph_difference
from .pde import SolverConfig, barrier_check, minimize, perturbation_check, prepare_field
from .profile1d import build_profiles

log = logging.getLogger("lawson_ac")


class _Outputs:
    """Tracks every file written so the manifest has no orphans."""

    def __init__(self, root):
        self.root = root
        self.files = []
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        full = os.path.join(self.root, name)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        self.files.append(name)
        return full

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out, command, echo, exit_code, error):
    files = [{"path": f, "sha256": _sha256(os.path.join(out.root, f))}
             for f in sorted(set(out.files))]
    manifest = {"command": command, "config": echo, "exit_code": exit_code,
                "error": error, "files": files}
    with open(os.path.join(out.root, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# commands


def _cone_info(cfg, out):
    cone = make_cone(cfg.i, cfg.j)
    write_cone_table([cone], out.path("cone_table.csv"))
    curv = principal_curvatures(cone, 1.0)
    info = {
        "i": cone.i, "j": cone.j, "n": cone.n, "slope": cone.slope,
        "alpha_plus": cone.alpha_plus, "alpha_minus": cone.alpha_minus,
        "class": cone.minimizing_class, "swapped": cone.swapped,
        "curvatures_at_l1": [[float(v), int(k)] for v, k in curv],
        "A2_coefficient": curvature_power_coefficient(cone, 2),
        "A3_coefficient": curvature_power_coefficient(cone, 3),
        "A2_note": f"A2 = {cone.n - 2}/l^2",
    }
    out.json("cone_info.json", info)


def _profile(cfg, out):
    ps = build_profiles()
    ps.H.to_csv(out.path("profile_H.csv"))
    ps.eta.to_csv(out.path("profile_eta.csv"))
    ps.eta2.to_csv(out.path("profile_eta2.csv"))
    out.json("moments.json", {
        "sigma0": ps.moments.sigma0, "c_star": ps.moments.c_star,
        "eta_residual": ps.eta.residual, "eta_orthogonality": ps.eta.orthogonality,
        "eta2_residual": ps.eta2.residual, "eta2_orthogonality": ps.eta2.orthogonality,
    })


def _target_leaf(cone, a, r_max):
    side = "+" if a >= 0 else "-"
    return leaf_for_coefficient(cone, abs(a), r_max, side)


def _leaf(cfg, out):
    cone = make_cone(cfg.i, cfg.j)
    a = cfg.a[0]
    r_max = max(cfg.d[0], 1.05 * cfg.fit_window_hi)
    leaf = _target_leaf(cone, a, r_max)
    leaf.to_csv(out.path("leaf.csv"))
    FermiChart.from_leaf(leaf).to_csv(out.path("chart.csv"))
    report = {"a": a, "lambda": leaf.lam, "side": leaf.side, "r_max": r_max}
    if not leaf.is_cone_line:
        report["fit"] = leaf_asymptotics(leaf, cfg.fit_window).to_dict()
    out.json("leaf_fit.json", report)


def _xi(cone, c_star):
    if abs(curvature_power_coefficient(cone, 3)) < 1e-12:
        return None
    return xi_shift(cone, c_star)


def predicted_c0(cone, c_star):
    """r^-1 coefficient of the nodal shift: J(c l^-1) = -c_star A_3."""
    return -c_star * curvature_power_coefficient(cone, 3) / indicial_polynomial(cone.n, -1.0)


def _solve_case(cfg, cone, a, d, profiles):
    leaf = _target_leaf(cone, a, 1.3 * d + 5.0)
    xi = _xi(cone, profiles.moments.c_star)
    field, chart = prepare_field(cone, leaf, d, cfg.delta, profiles, xi, cfg.epsilon_cutoff)
    report, sol = minimize(field, cone, SolverConfig(tol=cfg.tol, max_iter=cfg.max_iter))
    return leaf, chart, report, sol


def _fit_case(cfg, cone, a, d, leaf, sol, profiles):
    nodal = extract_nodal(sol)
    result = {"a": a, "d": d, "delta": cfg.delta, "monotone_graph": nodal.monotone,
              "increasing": nodal.increasing}
    if abs(curvature_power_coefficient(cone, 3)) < 1e-12:
        gd = graph_difference(nodal, leaf)
        fit = fit_asymptotics(gd, (cone.alpha_plus, cone.alpha_minus), cfg.fit_window,
                              weight_exponent=-cone.alpha_plus)
        result["graph_difference_fit"] = fit.to_dict()
        result["c1"] = fit.coefficients[0]
    else:
        fit = general_cone_expansion(cone, nodal, cfg.fit_window)
        result["expansion_fit"] = fit.to_dict()
        result["c_ij"] = fit.coefficients[0]
        result["k"] = fit.coefficients[1]
        result["c0_prediction"] = predicted_c0(cone, profiles.moments.c_star)
    return nodal, result


def _solve(cfg, out, analyze=False):
    cone = make_cone(cfg.i, cfg.j)
    profiles = build_profiles()
    a, d = cfg.a[0], cfg.d[0]
    leaf, chart, report, sol = _solve_case(cfg, cone, a, d, profiles)
    sol.to_csv(out.path("field.csv"))
    report.to_json(out.path("solve_report.json"), cfg.echo())
    nodal = extract_nodal(sol)
    nodal.to_csv(out.path("nodal.csv"), chart)
    if not analyze:
        return
    _, result = _fit_case(cfg, cone, a, d, leaf, sol, profiles)
    out.json("fit_report.json", result)
    barrier = barrier_check(sol, cone, cfg.lambda_star, profiles, cfg.epsilon_cutoff)
    out.json("barrier_report.json", barrier.to_dict())
    changes = perturbation_check(sol, cone, seed=cfg.seed)
    out.json("perturbation_report.json", {
        "seed": cfg.seed, "count": len(changes),
        "changes": [c for c, _ in changes], "roundoff": [n for _, n in changes],
        "passed": all(c >= -n for c, n in changes),
    })


def _sweep(cfg, out):
    cone = make_cone(cfg.i, cfg.j)
    profiles = build_profiles()
    summary = {"members": [], "trends": []}
    for a in cfg.a:
        c1 = []
        for d in cfg.d:
            tag = f"a{a!r}_d{d!r}"
            leaf, _, report, sol = _solve_case(cfg, cone, a, d, profiles)
            report.to_json(out.path(os.path.join(tag, "solve_report.json")), cfg.echo())
            _, result = _fit_case(cfg, cone, a, d, leaf, sol, profiles)
            out.json(os.path.join(tag, "fit_report.json"), result)
            summary["members"].append({"a": a, "d": d, "dir": tag})
            c1.append(result.get("c1", result.get("c_ij")))
        mags = [abs(c) for c in c1]
        summary["trends"].append({
            "a": a, "d": list(cfg.d), "leading": c1,
            "decreasing": all(y < x for x, y in zip(mags, mags[1:])),
            "within_bound": bool(mags[-1] <= 0.15 * abs(a)) if a else None,
        })
    out.json("sweep.json", summary)


def run_pipeline(cfg):
    """Run one configured command; returns the exit status."""
    out = _Outputs(cfg.output_dir)
    handlers = {
        "cone-info": _cone_info,
        "profile": _profile,
        "leaf": _leaf,
        "solve": _solve,
        "analyze": lambda c, o: _solve(c, o, analyze=True),
        "sweep": _sweep,
    }
    code, error = 0, None
    try:
        handlers[cfg.command](cfg, out)
    except ArtifactError as exc:
        code, error = exc.exit_code, exc.to_dict()
        log.error("%s", exc)
    _write_manifest(out, cfg.command, cfg.echo(), code, error)
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(prog="lawson-ac", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat key=value file")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = read_config(args.config, args.command, args.out)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        out = _Outputs(args.out)
        _write_manifest(out, args.command, None, exc.exit_code, exc.to_dict())
        return exc.exit_code
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ConfigError([str(exc)]).exit_code
    return run_pipeline(cfg)


if __name__ == "__main__":
    sys.exit(main())
