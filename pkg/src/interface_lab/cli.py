"""Command-line entry point: ``interface-lab <command> --config FILE``.

Exit codes: 0 when the command ran to completion (verdicts are recorded in
its outputs), 1 on internal errors, 2 on configuration violations and 3 on
numerical infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ExperimentConfig, load_config
from .errors import NUMERICAL_ERRORS, ConfigError, InvalidArgumentError
from .manifest import RunManifest

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

UNITS = "lengths in torus units (flat torus of side 1); energies are totals over the torus"


def reference_mode() -> bool:
    return os.environ.get("INTERFACE_LAB_REFERENCE") == "1"


class Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, cfg: ExperimentConfig, out_dir: Path, threads: int):
        self.cfg = cfg
        self.out = out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(cfg.command, cfg.digest, cfg.seed, reference_mode(), threads)
        self.summary: dict = {}

    def path(self, name) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def track(self, path) -> Path:
        self.manifest.record(path, self.out)
        return Path(path)

    def write_json(self, name, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")
        return self.track(p)

    def write_csv(self, name, columns, rows, notes=()) -> Path:
        """CSV with '#' metadata lines; ``rows`` are dicts keyed by column."""
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            fh.write(f"# interface-lab {__version__} {self.cfg.command}\n")
            fh.write(f"# units: {UNITS}\n")
            for line in notes:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(row.get(c)) for c in columns])
        return self.track(p)

    def write_bytes(self, name, data: bytes) -> Path:
        p = self.path(name)
        p.write_bytes(data)
        return self.track(p)

    def figure(self, func, name, *args, **kwargs):
        return self.track(func(*args, path=self.path(name), **kwargs))


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(_plain(v), sort_keys=True)
    return "" if v is None else v


def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    return obj


def _density(spec: dict | None):
    from .measures import DensitySpec

    if spec is None or spec["kind"] == "uniform":
        return DensitySpec.uniform()
    clamp = spec.get("clamp")
    return DensitySpec.uniform_disk(tuple(spec.get("center", (0.0, 0.0))),
                                    spec.get("radius", 0.45),
                                    clamp=tuple(clamp) if clamp else None)


# -- place -------------------------------------------------------------------


def cmd_place(run: Run) -> None:
    """Place particles and write mollified densities with weak-* diagnostics."""
    from .measures import default_mollifier, mollified_density, place_particles, rate_schedule
    from .measures import weak_star_gap
    from .torus import GridSpec, field_integral, field_to_bytes

    cfg = run.cfg
    rho = _density(cfg.density)
    V = default_mollifier(1.0)
    entries = rate_schedule(cfg.epsilons)
    rows = []
    for i, entry in enumerate(entries):
        ps = place_particles(rho, entry, cfg.seed)
        tag = f"eps{i}"
        run.write_json(f"particles_{tag}.json", {"epsilon": entry.epsilon, **ps.to_dict(),
                                                "density": rho.to_dict()})
        res = max(cfg.grid_resolution, 1 << math.ceil(math.log2(4.0 / entry.radius)))
        field = mollified_density(ps, V, GridSpec(res))
        run.write_bytes(f"density_{tag}.field", field_to_bytes(field))
        report = weak_star_gap(ps, V, rho)
        run.write_json(f"weak_star_{tag}.json", report)
        rows.append({
            "epsilon": entry.epsilon, "level": entry.level, "target_count": entry.count,
            "placed": ps.total, "radius": entry.radius,
            "min_pair_distance": ps.min_pair_distance(), "grid_resolution": res,
            "grid_mass": field_integral(field), "bl_estimate": report["bl_estimate"],
            "bl_argmax": report["argmax"],
        })
    bl = [r["bl_estimate"] for r in rows]
    run.write_csv("bl_distance.csv", list(rows[0]), rows,
                  notes=["bl_estimate is a lower bound of the bounded-Lipschitz distance"
                         " over a fixed dictionary of test functions"])
    run.summary = {"levels": rows, "bl_decreasing": all(b < a for a, b in zip(bl, bl[1:]))}


# -- minimize ----------------------------------------------------------------


def _initial_field(cfg, grid, seed):
    from .diffuse import random_init
    from .patterns import Disk, Lamellar
    from .torus import ScalarField

    init = cfg.init
    if init["kind"] == "random":
        return random_init(grid, cfg.mass, seed, init.get("amplitude", 0.1))
    if init["kind"] == "disk":
        R = init.get("radius", math.sqrt((1 + cfg.mass) / (2 * math.pi)))
        pat = Disk(tuple(init.get("center", (0.0, 0.0))), R)
    else:
        pat = Lamellar(init.get("center", 0.0), (1 + cfg.mass) / 4, init.get("axis", 1))
    d = pat.signed_distance(grid.points().reshape(-1, 2)).reshape(grid.shape)
    return ScalarField(grid, np.tanh(-d / cfg.epsilon))


def _interface_summary(field):
    from .contour import extract_interface
    from .criticality import curvature_profile
    from .errors import NoInterfaceError

    try:
        chains = extract_interface(field, 0.0)
    except NoInterfaceError:
        return []
    out = []
    for ch in chains:
        item = {"wrap_class": list(ch.wrap_class), "length": float(np.sum(ch.segment_lengths())),
                "vertices": len(ch)}
        if ch.contractible and len(ch) >= 19:
            item["mean_curvature"] = float(np.mean(curvature_profile(ch, 8).curvature))
        out.append(item)
    return out


def _minimize_one(run: Run, seed: int, prefix: str) -> dict:
    from . import plotting
    from .diffuse import DiffuseConfig, FlowSchedule, minimize
    from .torus import GridSpec, field_to_bytes, pgm_bytes

    cfg = run.cfg
    grid = GridSpec(cfg.grid)
    w = None
    if cfg.density is not None:
        w = _density(cfg.density).cell_average_field(grid)
    dcfg = DiffuseConfig(cfg.epsilon, cfg.sigma, cfg.mass, grid, penal_density=w,
                         coefficients=cfg.coefficients)
    sched = FlowSchedule(time_step=cfg.time_step, max_steps=cfg.max_steps,
                         stop_tolerance=cfg.stop_tolerance, stepping=cfg.stepping)
    res = minimize(dcfg, _initial_field(cfg, grid, seed), sched, snapshot_every=cfg.snapshot_every)
    trace = [(i, *e.as_row()) for i, e in enumerate(res.trace)]
    cols = ["step", "gradient_term", "well_term", "penal_term", "total", "mass"]
    run.write_csv(f"{prefix}trace.csv", cols, [dict(zip(cols, t)) for t in trace],
                  notes=[f"epsilon={cfg.epsilon!r} sigma={cfg.sigma!r} mass={cfg.mass!r}"
                         f" grid={cfg.grid} coefficients={cfg.coefficients} seed={seed}"])
    for step, snap in res.snapshots:
        run.write_bytes(f"{prefix}snapshots/step_{step:06d}.pgm", pgm_bytes(snap))
    run.write_bytes(f"{prefix}final.field", field_to_bytes(res.field))
    run.write_bytes(f"{prefix}final.pgm", pgm_bytes(res.field))
    run.figure(plotting.field_figure, f"{prefix}final.png", res.field,
               title=f"sigma={cfg.sigma:g} eps={cfg.epsilon:g}")
    run.figure(plotting.energy_trace_figure, f"{prefix}trace.png", trace)
    final = res.trace[-1]
    return {
        "seed": seed, "steps": res.steps, "converged": res.converged,
        "final_energy": final.total, "final_terms": final.as_row(),
        "time_step": res.time_step, "halvings": res.halvings,
        "max_mass_drift": res.max_mass_drift, "max_energy_increase": res.max_energy_increase,
        "interfaces": _interface_summary(res.field),
    }


def cmd_minimize(run: Run) -> None:
    """Run the mass-conserving gradient flow of the diffuse energy."""
    cfg = run.cfg
    seeds = cfg.seeds or [cfg.seed]
    runs = []
    for s in seeds:
        prefix = f"seed_{s}/" if len(seeds) > 1 else ""
        runs.append(_minimize_one(run, s, prefix))
    best = min(runs, key=lambda r: r["final_energy"])
    run.summary = {"runs": runs, "best_seed": best["seed"], "best_energy": best["final_energy"]}


# -- gamma -------------------------------------------------------------------


def cmd_gamma(run: Run) -> None:
    """Build recovery fields and certify the limsup inequality."""
    from . import plotting
    from .patterns import Lamellar
    from .recovery import limsup_certificate
    from .sharp import interior_disk

    cfg = run.cfg
    if cfg.pattern == "lamellar":
        pattern = Lamellar(0.0, (1 + cfg.mass) / 4, 1)
    else:
        pattern = interior_disk(cfg.mass)
    rho = _density(cfg.density)
    cert = limsup_certificate(pattern, cfg.epsilons, sigma=cfg.sigma, m=cfg.mass, rho=rho,
                              resolution=cfg.resolution, seed=cfg.seed, rel_tol=cfg.rel_tol)
    cert["density"] = rho.to_dict()
    run.write_json("certificate.json", cert)
    run.write_csv("certificate.csv", list(cert["levels"][0]), cert["levels"],
                  notes=[f"sharp_total={cert['sharp_total']!r}"])
    run.figure(plotting.certificate_figure, "certificate.png", cert["levels"], cert["sharp_total"])
    run.summary = {k: cert[k] for k in ("sharp_total", "gap_decreasing", "final_relative_gap", "pass")}


# -- phase diagram ------------------------------------------------------------


def cmd_phase_diagram(run: Run) -> None:
    """Scan sigma over the sharp-interface pattern menu."""
    from . import plotting, sharp

    cfg = run.cfg
    m, r = cfg.mass, cfg.r
    n = int(math.floor((cfg.sigma_max - cfg.sigma_min) / cfg.sigma_step + 1e-9))
    sigmas = [round(cfg.sigma_min + i * cfg.sigma_step, 12) for i in range(n + 1)]
    rows = sharp.phase_diagram(m, r, sigmas)
    cols = ["m", "r", "sigma", "family", "perimeter", "penal", "total", "is_argmin", "feasible",
            "sigma0_bound"]
    s1 = sharp.sigma1_bound(r, m)
    s0 = sharp.sigma0_bound(m, r, s1)
    strip_bound = math.pi * r / (2 * (1 - 2 * r))
    run.write_csv("phase_diagram.csv", cols, rows, notes=[
        "argmin is taken over the lamellar/disk menu; band_aid and strip rows are informational",
        f"strips are infeasible for sigma >= pi r/(2(1-2r)) = {strip_bound!r}",
    ])
    scan = sharp.argmin_switch(rows)
    interp = sharp.interpolated_switch(rows)
    large = [sharp.large_sigma_comparison(m, r, s, cfg.battery_sigma) for s in cfg.large_sigma]
    summary = {
        "m": m, "r": r,
        "argmin_switch_scan": scan,
        "argmin_switch": interp,
        "sigma_crossover_closed_form": sharp.sigma_crossover(m, r),
        "sigma1_bound": s1, "sigma0_bound": s0, "strip_feasibility_bound": strip_bound,
        "large_sigma": large,
    }
    run.write_json("summary.json", summary)
    if cfg.figures:
        lookup = {}
        for row in rows:
            lookup.setdefault(row["sigma"], {"sigma": row["sigma"]})[row["family"]] = (
                row["total"] if row["feasible"] else None)
        run.figure(plotting.phase_diagram_figure, "phase_diagram.png", list(lookup.values()),
                   crossover=interp, sigma0=s0)
    run.summary = {k: summary[k] for k in ("argmin_switch_scan", "argmin_switch",
                                           "sigma_crossover_closed_form", "sigma0_bound")}


# -- audit ---------------------------------------------------------------------


def _audit_targets(cfg):
    """(label, sigma, chains) triples to audit."""
    from .contour import extract_interface
    from .patterns import pattern_from_dict
    from .sharp import best_lamellar, build_band_aid
    from .torus import load_field

    src = cfg.source
    step = cfg.vertex_spacing
    if src["kind"] == "pattern":
        return [("pattern", cfg.sigma, pattern_from_dict(src["pattern"]).boundary_chains(step))]
    if src["kind"] == "best_lamellar":
        p = best_lamellar(cfg.mass, cfg.r, tuple(src.get("center", (0.0, 0.0))))
        return [("best_lamellar", cfg.sigma, p.boundary_chains(step))]
    if src["kind"] == "critical_band_aid":
        out = []
        for s in src.get("sigmas", [cfg.sigma]):
            p = build_band_aid(cfg.mass, cfg.r, s, mode="critical", convention="curv2d")
            out.append((f"band_aid_sigma_{s!r}", s, p.boundary_chains(step)))
        return out
    path = Path(src["path"])
    if not path.exists():
        raise ConfigError(f"source.path {path} does not exist")
    return [(path.stem, cfg.sigma, extract_interface(load_field(path), 0.0))]


def cmd_audit(run: Run) -> None:
    """Audit first-variation criticality of patterns or saved fields."""
    from . import plotting
    from .criticality import CONVENTIONS, audit_conventions, curvature_profile
    from .criticality import first_variation_residual

    cfg = run.cfg
    rho = _density(cfg.density)
    results = []
    for label, sigma, chains in _audit_targets(cfg):
        profiles = [curvature_profile(ch, cfg.window) for ch in chains]
        if cfg.convention == "both":
            both = audit_conventions(profiles, rho, sigma, cfg.exclusion_radius, cfg.rel_tol)
            primary = both["reports"]["firstvar"]
            entry = {"label": label, "sigma": sigma, **primary, **both}
        else:
            rep = first_variation_residual(profiles, rho, sigma, cfg.exclusion_radius,
                                           cfg.convention, cfg.rel_tol)
            entry = {"label": label, "sigma": sigma, **rep.to_dict()}
        rin = rho.inside if rho.kind == "uniform_disk" else 1.0
        c = CONVENTIONS["firstvar" if cfg.convention == "both" else cfg.convention]
        entry["violation_threshold"] = c * sigma * rin / 2
        entry["criticality_violated"] = not entry["pass"]
        results.append(entry)
        arc = np.concatenate([p.arclength for p in profiles])
        curv = np.concatenate([p.curvature for p in profiles])
        rep = first_variation_residual(profiles, rho, sigma, cfg.exclusion_radius,
                                       "firstvar" if cfg.convention == "both" else cfg.convention,
                                       cfg.rel_tol)
        run.figure(plotting.curvature_figure, f"curvature_{label}.png", arc, curv,
                   rep.excluded_mask)
        if cfg.per_vertex_csv:
            verts = np.vstack([p.chain.vertices for p in profiles])
            cols = ["x1", "x2", "arclength", "curvature", "rho", "residual", "excluded"]
            rows = [dict(zip(cols, (float(v[0]), float(v[1]), float(a), float(k), float(rv),
                                    float(res), bool(ex))))
                    for v, a, k, rv, res, ex in zip(verts, arc, curv, rho.value(verts),
                                                    rep.residuals, rep.excluded_mask)]
            run.write_csv(f"vertices_{label}.csv", cols, rows)
    run.write_json("audit.json", {"density": rho.to_dict(), "window": cfg.window,
                                  "exclusion_radius": cfg.exclusion_radius, "audits": results})
    keys = ("label", "lambda_hat", "rms_residual", "matching_convention", "pass")
    run.summary = {"audits": [{k: a.get(k) for k in keys} for a in results]}


HANDLERS = {
    "place": cmd_place, "minimize": cmd_minimize, "gamma": cmd_gamma,
    "phase-diagram": cmd_phase_diagram, "audit": cmd_audit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interface-lab",
                                     description="Diffuse and sharp interface experiments on the flat torus.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__doc__ or name.replace("-", " "))
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, {"seed": args.seed})
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"interface-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .diffuse import set_threads

    threads = set_threads(args.threads)
    out = args.out or Path(cfg.output_dir or f"interface-lab-out/{args.command}")
    run = Run(cfg, Path(out), threads)
    run.write_json("config.json", cfg)
    code, status, message = EXIT_OK, "completed", None
    try:
        HANDLERS[args.command](run)
    except (ConfigError, InvalidArgumentError) as exc:
        code, status, message = EXIT_CONFIG, "config-error", str(exc)
    except NUMERICAL_ERRORS as exc:
        code, status, message = EXIT_NUMERICAL, "numerical-error", f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # noqa: BLE001
        code, status, message = EXIT_INTERNAL, "internal-error", f"{type(exc).__name__}: {exc}"
        traceback.print_exc()
    if code == EXIT_OK:
        run.write_json("result.json", run.summary)
    else:
        print(f"interface-lab: {message}", file=sys.stderr)
    run.manifest.finish(status, code, message)
    run.manifest.write(run.out)
    if code == EXIT_OK:
        print(json.dumps(_plain(run.summary), sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
