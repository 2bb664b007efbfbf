"""``nlslab`` command-line runner.

    nlslab ground      --config run.yaml
    nlslab instability --set instability.lam=1.5 --output runs/lam1.5
    nlslab verify
    nlslab sweep       --set sweep.parameter=omega --set "sweep.values=[0.5,1,2]"

Exit codes: 0 success, 1 a certificate or property check failed, 2 the
configuration was rejected. Every output directory receives ``config.yaml``
with the fully resolved configuration, and every JSON artifact embeds it.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .diagnostics import certify_blowup, virial_columns
from .evolve import evolve
from .ground_state import NonConvergenceError, solve_ground_state
from .snapshot import load_field, save_field
from .verify import Check, gaussian, run_suite

log = logging.getLogger("nlslab")

OK, FAILED, BAD_CONFIG = 0, 1, 2


def _write_json(path: Path, data: dict):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _prepare(cfg: dict) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfgmod.dump(cfg))
    return out


def _solve_ground(cfg: dict, out: Path):
    params = cfgmod.model_params(cfg)
    grid = cfgmod.grid_from(cfg)
    try:
        gs = solve_ground_state(params, grid, cfgmod.ground_options(cfg))
        converged = True
    except NonConvergenceError as exc:
        log.error("%s", exc)
        gs, converged = exc.best, False
    cert = gs.certificate(params)
    cert["converged"] = converged
    save_field(out / "ground_state.fld", gs.profile, time=0.0, omega=params.omega,
               p=params.p, extra={"level": gs.level, "config": cfg})
    _write_json(out / "ground_state.json", {**cert, "config": cfg})
    return gs, converged


def run_ground(cfg: dict) -> int:
    out = _prepare(cfg)
    gs, converged = _solve_ground(cfg, out)
    print(f"level {gs.level:.12g}  residual {gs.residual:.3e}  iterations {gs.iterations}")
    return OK if converged else FAILED


def _initial_state(cfg: dict):
    init = cfg["initial"]
    if init["kind"] == "snapshot":
        f, meta = load_field(init["path"])
        if f.grid.n_dims != cfg["model"]["n_dims"]:
            raise cfgmod.ConfigError(
                f"snapshot {init['path']} is {f.grid.n_dims}-dimensional, model.n_dims is "
                f"{cfg['model']['n_dims']}")
        return f
    return gaussian(cfgmod.grid_from(cfg), init["amplitude"], init["width"])


def _write_trajectory(out: Path, record, cfg: dict, extra=None):
    record.to_csv(out / "trajectory.csv", extra)
    _write_json(out / "trajectory.csv.json", {"summary": record.summary(), "config": cfg})


def run_evolve(cfg: dict) -> int:
    out = _prepare(cfg)
    u0 = _initial_state(cfg)
    params = cfgmod.model_params(cfg)
    record = evolve(u0, params, cfgmod.evolve_options(cfg))
    _write_trajectory(out, record, cfg)
    if not record.final_state.terminal:
        save_field(out / "final_state.fld", record.final_state, time=record.halt_time,
                   omega=params.omega, p=params.p, extra={"config": cfg})
    print(f"{record.status} at t={record.halt_time:.6g} after {record.steps} steps")
    return OK


def run_instability(cfg: dict) -> int:
    out = _prepare(cfg)
    params = cfgmod.model_params(cfg)
    gs, converged = _solve_ground(cfg, out)
    if not converged:
        return FAILED
    inst = cfg["instability"]
    u0 = inst["lam"] * gs.profile
    record = evolve(u0, params, cfgmod.evolve_options(cfg))
    cert = certify_blowup(u0, params, gs, record, slack=inst["slack"],
                          concavity_tol=inst["concavity_tol"])
    _write_trajectory(out, record, cfg, virial_columns(record))
    _write_json(out / "certificate.json",
                {"certificate": cert.to_dict(), "run": record.summary(),
                 "ground_state": gs.certificate(params), "config": cfg})
    print(f"certificate {cert.status}: halted at {cert.halted_at:.6g} "
          f"({cert.halt_status}), bound {cert.t_upper}")
    for reason in cert.reasons:
        print(f"  {reason}")
    return OK if cert.valid else FAILED


def run_verify(cfg: dict) -> int:
    out = _prepare(cfg)
    v = cfg["verify"]
    report = run_suite(cfg["seed"], v["n_identity_fields"], v["n_gap_fields"])
    _write_json(out / "report.json", {**report, "config": cfg})
    for group, checks in report["groups"].items():
        print(f"[{group}]")
        for c in checks:
            print("  " + Check(**c).line())
    return OK if report["passed"] else FAILED


def _sweep_member(cfg: dict) -> int:
    return RUNNERS[cfg["command"]](cfg)


def run_sweep(cfg: dict) -> int:
    out = _prepare(cfg)
    sw = cfg["sweep"]
    section, key = cfgmod.SWEEP_PARAMETERS[sw["parameter"]]
    members = []
    for value in sw["values"]:
        sub = copy.deepcopy(cfg)
        sub["command"] = sw["command"]
        sub[section][key] = float(value)
        sub["output"] = str(out / f"{sw['parameter']}={float(value):g}")
        members.append(sub)
    if sw["workers"] > 1:
        with ProcessPoolExecutor(max_workers=sw["workers"]) as pool:
            codes = list(pool.map(_sweep_member, members))
    else:
        codes = [_sweep_member(m) for m in members]
    summary = {"parameter": sw["parameter"], "command": sw["command"],
               "runs": [{"value": float(v), "output": m["output"], "exit_code": c}
                        for v, m, c in zip(sw["values"], members, codes)],
               "config": cfg}
    _write_json(out / "sweep.json", summary)
    return max(codes)


RUNNERS = {"ground": run_ground, "evolve": run_evolve, "instability": run_instability,
           "verify": run_verify, "sweep": run_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlslab", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=cfgmod.COMMANDS)
    ap.add_argument("-c", "--config", help="YAML config file")
    ap.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. evolve.dt0=5e-4 (repeatable)")
    ap.add_argument("-o", "--output", help="output directory (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.set)
    if args.output:
        overrides.append(f"output={args.output}")
    try:
        cfg = cfgmod.resolve(args.config, overrides, command=args.command)
        return RUNNERS[cfg["command"]](cfg)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
