"""Command-line entry point: ``pfaffian-cqed <subcommand> [--config FILE] [flags]``.

Exit status 0 on success, 1 when a computation fails, 2 for usage or
validation errors. Outputs are staged and moved into ``--out`` only after the
whole job has succeeded.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .config import SCHEMA, ConfigError, RunConfig, load_config
from .errors import ParameterError
from .output import OutputDir, manifest

log = logging.getLogger("pfaffian_cqed")

SUBCOMMANDS = ("qubit", "qubit-sweep", "two-site", "ed", "chern", "fig4a", "fig4b", "feasibility")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out", help="output directory (default: results/<subcommand>)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="solver seed (overrides [solver] seed)")
    common.add_argument("--tol", type=float, help="solver tolerance (overrides [solver] tol)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config key; repeatable")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="pfaffian-cqed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "qubit": "effective omega0, U2, U3 of one fluxonium",
        "qubit-sweep": "U2/U3 map over (EL, phi_x) and the U2 = 0 contour",
        "two-site": "two coupled qubits, populations versus time",
        "ed": "lowest levels of the lattice model",
        "chern": "Chern number of the ground manifold",
        "fig4a": "spectra for the NN, NNN and long-range schemes",
        "fig4b": "order parameter over (U2, U3)",
        "feasibility": "U3/J against hardware scales",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name in ("qubit", "qubit-sweep", "two-site", "feasibility"):
            p.add_argument("--Ec", type=float)
            p.add_argument("--EL", type=float)
            p.add_argument("--EJ", type=float)
        if name in ("qubit", "two-site", "feasibility"):
            p.add_argument("--phix", type=float, help="external flux; omitted means the U2 = 0 root")
        if name in ("ed", "chern", "fig4b"):
            p.add_argument("--scheme", help="NN, NNN or long-range")
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    flag_map = {"Ec": "qubit.Ec", "EL": "qubit.EL", "EJ": "qubit.EJ", "phix": "qubit.phi_x",
                "seed": "solver.seed", "tol": "solver.tol"}
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = repr(value)
    scheme = getattr(args, "scheme", None)
    if scheme is not None:
        out["sweep.scheme" if args.command == "fig4b" else "lattice.scheme"] = scheme
    return out


def config_text(cfg: RunConfig) -> str:
    """Resolved configuration as a config file that reproduces the run."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            value = cfg.values[sec][key]
            if value is None:
                text = "none" if not (sec == "interaction" and key == "U3") else "hardcore"
            elif isinstance(value, tuple):
                text = ", ".join(repr(v) for v in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


# -- job preparation (validation only, exit 2 on failure) and execution -------

def _qubit_params(cfg: RunConfig, phi_x=None):
    from .qubit import QubitParams
    q = cfg.section("qubit")
    return QubitParams(q["Ec"], q["EL"], q["phi_x"] if phi_x is None else phi_x,
                       q["EJ"], q["basis_size"])


def _resolve_qubit(cfg: RunConfig):
    """QubitParams at the configured flux, or at the U2 = 0 root when none is set."""
    from .qubit import find_zero_U2
    q = cfg.section("qubit")
    if q["phi_x"] is not None:
        return _qubit_params(cfg), None
    res = find_zero_U2(q["Ec"], q["EL"], (q["phi_min"], q["phi_max"]), EJ=q["EJ"],
                       basis_size=q["basis_size"])
    return _qubit_params(cfg, res.phi_x), res


def _lattice_spec(cfg: RunConfig, scheme=None):
    from .lattice.hamiltonian import LatticeSpec
    lat, inter, tw = cfg.section("lattice"), cfg.section("interaction"), cfg.section("twist")
    return LatticeSpec(Lx=lat["Lx"], Ly=lat["Ly"], alpha=lat["alpha"], N=lat["N"],
                       n_max=lat["n_max"], U2=inter["U2"], U3=inter["U3"],
                       scheme=scheme or lat["scheme"], R=lat["R"],
                       theta_x=tw["theta_x"], theta_y=tw["theta_y"])


def _prepare(command: str, cfg: RunConfig):
    if command in ("qubit", "qubit-sweep", "two-site", "feasibility"):
        _qubit_params(cfg, 0.0 if cfg.get("qubit", "phi_x") is None else None)
    if command == "two-site":
        from .dynamics import CoupledSpec
        q = _qubit_params(cfg, 0.0)
        c = cfg.section("coupling")
        CoupledSpec(q, q, c["M"], c["levels_per_qubit"], c["t_max"], c["n_steps"])
        if any(n < 0 or n >= c["levels_per_qubit"] for n in c["initial"]):
            raise ConfigError(f"[coupling] initial {c['initial']} outside the truncation")
    if command == "qubit-sweep":
        for key in ("EL_grid", "phi_grid"):
            g = np.asarray(cfg.get("qubit_sweep", key))
            if g.size > 1 and np.any(np.diff(g) <= 0):
                raise ConfigError(f"[qubit_sweep] {key} must be strictly ascending")
    if command in ("ed", "chern", "fig4a"):
        spec = _lattice_spec(cfg)
        if command == "chern" and cfg.get("twist", "manifold") < 1:
            raise ConfigError("[twist] manifold must be >= 1")
        return spec
    if command == "fig4b":
        base = _lattice_spec(cfg, cfg.get("sweep", "scheme")).replace(U3=None, U2=0.0)
        if min(cfg.get("sweep", "U3_grid")) <= 0:
            raise ConfigError("[sweep] U3_grid values must be positive")
        return base
    return None


def _solver(cfg: RunConfig) -> dict:
    s = cfg.section("solver")
    return {"tol": s["tol"], "block_size": s["block_size"], "seed": s["seed"],
            "max_restarts": s["max_restarts"]}


def run_qubit(cfg, out, threads):
    from .qubit import diagonalize_qubit, extract_effective_model, ladder_leakage
    params, root = _resolve_qubit(cfg)
    spec = diagonalize_qubit(params, m=cfg.get("qubit", "levels"))
    model = extract_effective_model(spec)
    print(f"phi_x  = {params.phi_x:.10f}" + ("  (U2 = 0 root)" if root is not None else ""))
    print(f"omega0 = {model.omega0:.10g} EJ")
    print(f"U2     = {model.U2:.6e} EJ")
    print(f"U3     = {model.U3:.6e} EJ")
    out.write_json("qubit.json", {
        "Ec": params.Ec, "EL": params.EL, "EJ": params.EJ, "phi_x": params.phi_x,
        "omega0": model.omega0, "U2": model.U2, "U3": model.U3,
        "energies": spec.energies - spec.energies[0], "ladder_leakage": ladder_leakage(spec),
        "root_found": root is not None, "root_flagged": bool(root.flagged) if root else False,
    })


def run_qubit_sweep(cfg, out, threads):
    from .sweeps import run_fig2
    q, s = cfg.section("qubit"), cfg.section("qubit_sweep")
    table, contour = run_fig2(q["Ec"], s["EL_grid"], s["phi_grid"], basis_size=q["basis_size"],
                              workers=threads)
    out.write_csv("qubit_sweep.csv", ["EL", "phi_x", "omega0", "U2", "U3"], [r[:5] for r in table])
    out.write_json("qubit_sweep.json", {
        "Ec": q["Ec"], "columns": ["EL", "phi_x", "omega0", "U2", "U3", "error"], "rows": table})
    rows = []
    for el, phi, model, leak in contour:
        if model is None:
            rows.append((el, math.nan, math.nan, math.nan, math.nan, math.nan))
        else:
            rows.append((el, phi, model.omega0, model.U2, model.U3, leak))
    out.write_csv("zero_U2_contour.csv", ["EL", "phi_x", "omega0", "U2", "U3", "leakage"], rows)
    failed = sum(1 for r in table if r[5])
    print(f"{len(table)} grid points ({failed} failed), {sum(1 for r in contour if r[2])} contour roots")


def _label(lab) -> str:
    return f"P{lab[0]}{lab[1]}"


def run_two_site(cfg, out, threads):
    from .dynamics import (CoupledSpec, bosonic_reference, compare_traces, evolve, j_eff,
                           reference_U2, triple_occupancy)
    params, _ = _resolve_qubit(cfg)
    c = cfg.section("coupling")
    spec = CoupledSpec(params, params, c["M"], c["levels_per_qubit"], c["t_max"], c["n_steps"])
    trace = evolve(spec, c["initial"])
    J = j_eff(spec)
    U2 = reference_U2(spec)
    ref = bosonic_reference(J, U2, c["initial"], trace.times)
    cmp = compare_traces(trace, ref, labels=ref.labels)
    triple = triple_occupancy(trace)

    keep = [k for k, lab in enumerate(trace.labels) if np.max(trace.populations[:, k]) > 1e-12]
    keep.sort(key=lambda k: (sum(trace.labels[k]), -trace.labels[k][0]))
    header = ["t"] + [_label(trace.labels[k]) for k in keep]
    rows = [[t] + list(trace.populations[i, keep]) for i, t in enumerate(trace.times)]
    out.write_csv("two_site.csv", header, rows)
    ref_header = ["t"] + [_label(lab) for lab in ref.labels]
    out.write_csv("bosonic_reference.csv", ref_header,
                  [[t] + list(ref.populations[i]) for i, t in enumerate(ref.times)])
    out.write_json("two_site.json", {
        "initial": list(c["initial"]), "M": c["M"], "J_eff": J, "U2": U2, "phi_x": params.phi_x,
        "times": trace.times,
        "populations": {_label(trace.labels[k]): trace.populations[:, k] for k in keep},
        "max_triple_occupancy": float(np.max(triple)),
        "max_norm_error": float(np.max(np.abs(trace.total() - 1))),
        "bosonic_max_deviation": cmp.overall_max,
        "bosonic_deviation_by_label": {_label(k): v for k, v in cmp.max_deviation.items()},
    })
    print(f"J_eff = {J:.6e} EJ, max triple occupancy = {np.max(triple):.3e}, "
          f"max deviation from bosonic reference = {cmp.overall_max:.3e}")


def run_ed(cfg, out, threads, spec):
    from .sweeps import solve_lattice
    s = cfg.section("solver")
    manifold = cfg.get("twist", "manifold")
    res = solve_lattice(spec, s["k"], manifold=manifold, seed=s["seed"], tol=s["tol"],
                        block_size=s["block_size"])
    out.write_csv("spectrum.csv", ["n", "E_over_J"], list(enumerate(res.eigenvalues)))
    d = res.degeneracy
    summary = {"spec": spec.to_dict(), "dimension": res.dimension, "eigenvalues": res.eigenvalues,
               "residuals": res.residuals}
    if d is not None:
        summary.update(d.to_dict())
        print(f"gap = {d.gap:.10g} J  spread = {d.spread:.3e} J  lambda = {d.lambda_order:.6g}  "
              f"(dimension {res.dimension})")
    out.write_json("ed.json", summary)


def run_chern(cfg, out, threads, spec):
    from .lattice.chern import chern_number
    tw = cfg.section("twist")
    solver = _solver(cfg)
    solver["tol"] = max(solver["tol"], 1e-9)
    solver.pop("max_restarts")
    coarse = chern_number(spec, tw["manifold"], tw["grid"], workers=threads, solver=solver)
    result = {"coarse": coarse.to_dict(), "total": coarse.total, "grid": coarse.grid,
              "per_state": coarse.per_state, "curvature": coarse.curvature}
    print(f"grid {tw['grid']}x{tw['grid']}: total Chern = {coarse.total}  "
          f"per state = {coarse.per_state:g}  min gap = {coarse.min_gap:.4g} J")
    if tw["refine"]:
        fine = chern_number(spec, tw["manifold"], 2 * tw["grid"], workers=threads, solver=solver)
        result["fine"] = fine.to_dict()
        result["stable_under_refinement"] = fine.total == coarse.total
        print(f"grid {fine.grid}x{fine.grid}: total Chern = {fine.total}")
        if fine.total != coarse.total:
            raise RuntimeError("Chern number changed under grid doubling")
    out.write_json("chern.json", result)


def run_fig4a(cfg, out, threads, spec):
    from .sweeps import run_fig4a as fig4a
    s = cfg.section("solver")
    results = fig4a(spec, k=s["k"], seed=s["seed"], tol=s["tol"])
    schemes = list(results)
    rows = [[n] + [results[sc].eigenvalues[n] for sc in schemes] for n in range(s["k"])]
    out.write_csv("fig4a.csv", ["n"] + [f"E_{sc}" for sc in schemes], rows)
    out.write_json("fig4a.json", {sc: {"eigenvalues": r.eigenvalues, **r.degeneracy.to_dict()}
                                  for sc, r in results.items()})
    for sc, r in results.items():
        print(f"{sc:>10}: gap = {r.degeneracy.gap:.6g} J  spread = {r.degeneracy.spread:.3e} J")


def run_fig4b(cfg, out, threads, base):
    from .sweeps import hardcore_lambda, monotonic_trends
    from .sweeps import run_fig4b as fig4b
    sw, s = cfg.section("sweep"), cfg.section("solver")
    cells = fig4b(sw["U2_grid"], sw["U3_grid"], base, workers=threads, seed=s["seed"], tol=s["tol"])
    out.write_csv("order_parameter.csv", ["U2", "U3", "lambda", "gap", "spread"],
                  [(c.U2, c.U3, c.lambda_order, c.gap, c.spread) for c in cells])
    trends = monotonic_trends(cells)
    hc = hardcore_lambda(base, seed=s["seed"], tol=s["tol"])
    out.write_json("order_parameter.json", {"base": base.to_dict(), "hardcore_lambda": hc,
                                            "trends": trends})
    print(f"{len(cells)} cells; hard-core lambda = {hc:.6g}; "
          f"decreasing in U2: {trends['decreasing_in_U2']}; increasing in U3: {trends['increasing_in_U3']}")


def run_feasibility(cfg, out, threads):
    from .qubit import effective_model
    from .sweeps import feasibility_report
    params, _ = _resolve_qubit(cfg)
    f = cfg.section("feasibility")
    model = effective_model(params)
    rows = feasibility_report(model, f["J_MHz"], f["EJ_GHz"], threshold=f["threshold"])
    out.write_csv("feasibility.csv",
                  ["EJ_GHz", "U3_over_EJ", "U3_MHz", "J_MHz", "ratio", "ratio_ok", "J_ok", "feasible"],
                  [(r.EJ_GHz, r.U3_over_EJ, r.U3_MHz, r.J_MHz, r.ratio, r.ratio_ok, r.J_ok, r.feasible)
                   for r in rows])
    for r in rows:
        print(f"EJ = {r.EJ_GHz:g} GHz: U3 = {r.U3_MHz:.1f} MHz, U3/J = {r.ratio:.1f}, "
              f"{'feasible' if r.feasible else 'not feasible'}")


RUNNERS = {
    "qubit": run_qubit, "qubit-sweep": run_qubit_sweep, "two-site": run_two_site,
    "ed": run_ed, "chern": run_chern, "fig4a": run_fig4a, "fig4b": run_fig4b,
    "feasibility": run_feasibility,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        cfg = load_config(args.config, _overrides(args))
        prepared = _prepare(args.command, cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    out_dir = args.out or f"results/{args.command}"
    start = time.perf_counter()
    try:
        with OutputDir(out_dir) as out:
            runner = RUNNERS[args.command]
            if prepared is None:
                runner(cfg, out, args.threads)
            else:
                runner(cfg, out, args.threads, prepared)
            out.write_text("run.cfg", config_text(cfg))
            outputs = list(out.files) + ["manifest.json"]
            out.write_json("manifest.json", manifest(
                args.command, cfg.to_dict(), seed=cfg.get("solver", "seed"), threads=args.threads,
                outputs=outputs,
                extra={"argv": argv, "config_file": cfg.source,
                       "rerun": f"pfaffian-cqed {args.command} --config run.cfg"}))
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
