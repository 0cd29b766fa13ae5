"""Config-driven command line for every pipeline in the package.

Usage: reduce <config.json> [--assert-reduced] [--out DIR]
       [--format json,csv]

The config is a JSON object with a "mode" field plus a mode-specific
"problem" block; an optional "output" block ({"directory", "formats"})
that the command-line flags override; and optional "seed" and
"tolerances" entries that are echoed into every report.  Potentials are
given either as a named preset (harmonic, free, cubic-perturbed,
quartic, double-well) or as {"coeffs": [...]} / {"coeff_matrix": [[...]]}.

Every report embeds the tool version, the sha256 hash of the canonical
config serialization, the full config echo, and the provenance of the
numerics actually used (grid, dt, comparator truncation), so reruns of
one config are byte-identical apart from the created_utc stamp.  CSV
files open with two comment lines (tool, config hash) followed by a
header row; the columns per mode are:

    reduce:             t, error_max, bound_general, bound_specialized,
                        delta1_measured, delta1_duhamel, delta2
    classify-classical: label, horizon, diverged
    classify-quantum:   T, mu, tau
    comparator-audit:   s, N, norm, trace, aOmega_sq_measured,
                        aOmega_bound
    scale:              lambda, error, bound
    squeeze:            d, duhamel_term, comparator_term, total_bound
    ehrenfest:          t, identity, gap

Exit codes: 0 success; 1 only when --assert-reduced is set and the
verdict is not "reduced"; 2 unreadable or schema-invalid config; 3
numerical failure during the run (a diagnostic JSON is still written
when the output directory allows it).  REDUCE_THREADS caps how many
independent sub-runs (the per-lambda scale rows) execute concurrently.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .classical import PhaseRegion, classify_classical
from .comparator import ComparatorSpec, comparator_scalars
from .errors import ConfigError, QReduceError
from .grid import DEFAULT_GRID, GridSpec
from .hamiltonian import HamiltonianSpec, PhasePoint, PotentialModel
from .packets import packet, sample_on_grid
from .reduction import (DEFAULT_DT, ReductionProblem, ehrenfest_residuals,
                        ehrenfest_run, run_reduction, squeeze_sweep)
from .scaling import hepp_experiment
from .spectral import GridHamiltonian, classify_quantum, finite_evolution

MODES = ("reduce", "classify-classical", "classify-quantum",
         "comparator-audit", "scale", "squeeze", "ehrenfest")

PRESETS = {
    "harmonic": [0.0, 0.0, 0.5],
    "free": [0.0],
    "cubic-perturbed": [0.0, 0.0, 0.5, 0.1 / 6.0],
    "quartic": [0.0, 0.0, 0.0, 0.0, 0.25],
    "double-well": [0.5, 0.0, -1.0, 0.0, 0.5],
}


def _fail(path: str, message: str):
    raise ConfigError(f"config.{path}: {message}")


def _block(config: dict, key: str, required=True) -> dict:
    value = config.get(key)
    if value is None:
        if required:
            _fail(key, "missing")
        return {}
    if not isinstance(value, dict):
        _fail(key, "must be an object")
    return value


def _number(block: dict, path: str, key: str, default=None, required=False):
    value = block.get(key, default)
    if value is None:
        if required:
            _fail(f"{path}.{key}", "missing")
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"{path}.{key}", "must be a number")
    return float(value)


def _potential_from(problem: dict) -> PotentialModel:
    raw = problem.get("potential")
    if isinstance(raw, str):
        if raw not in PRESETS:
            _fail("problem.potential", f"unknown preset {raw!r}; "
                  f"choose from {sorted(PRESETS)}")
        return PotentialModel.polynomial(PRESETS[raw])
    if isinstance(raw, dict) and "coeffs" in raw:
        return PotentialModel.polynomial(raw["coeffs"])
    if isinstance(raw, dict) and "coeff_matrix" in raw:
        return PotentialModel.polynomial2d(raw["coeff_matrix"])
    _fail("problem.potential",
          "must be a preset name, {'coeffs': [...]} or {'coeff_matrix': [[...]]}")


def _spec_from(problem: dict) -> HamiltonianSpec:
    pot = _potential_from(problem)
    mass = _number(problem, "problem", "mass", default=1.0)
    return HamiltonianSpec(mass=mass, potential=pot, dimension=pot.ndim)


def _phase_point(problem: dict, key: str = "alpha0") -> PhasePoint:
    raw = problem.get(key)
    if not isinstance(raw, list) or len(raw) not in (2, 4):
        _fail(f"problem.{key}", "must be a list [xi.., pi..] of length 2 or 4")
    return PhasePoint.from_vector(np.asarray(raw, dtype=float))


def _grid_from(problem: dict) -> GridSpec:
    raw = problem.get("grid")
    if raw is None:
        return DEFAULT_GRID
    if not isinstance(raw, dict):
        _fail("problem.grid", "must be an object {n, N, L}")
    return GridSpec(int(raw.get("n", 1)), int(raw.get("N", 1024)),
                    float(raw.get("L", 20.0)))


def _comparator_from(problem: dict) -> ComparatorSpec:
    raw = problem.get("comparator")
    if raw is None:
        return ComparatorSpec(s=1.0)
    if not isinstance(raw, dict):
        _fail("problem.comparator", "must be an object {s, N}")
    kwargs = {"s": float(raw.get("s", 1.0))}
    if "N" in raw:
        kwargs["N"] = int(raw["N"])
    return ComparatorSpec(**kwargs)


def _region_from(problem: dict):
    raw = problem.get("region")
    if raw is None:
        return None
    if not isinstance(raw, dict) or "center" not in raw:
        _fail("problem.region", "must be an object with a center")
    center = PhasePoint.from_vector(np.asarray(raw["center"], dtype=float))
    if "radius" in raw:
        return PhaseRegion.ball(center, float(raw["radius"]))
    if "half_widths" in raw:
        return PhaseRegion.box(center, np.asarray(raw["half_widths"],
                                                  dtype=float))
    _fail("problem.region", "needs a radius (ball) or half_widths (box)")


def _provenance(grid: GridSpec = None, dt=None,
                comparator: ComparatorSpec = None) -> dict:
    out = {}
    if grid is not None:
        out["grid"] = {"n": grid.n, "N": grid.N, "L": grid.L}
    if dt is not None:
        out["dt"] = dt
    if comparator is not None:
        out["comparator"] = {"s": comparator.s, "N": comparator.N}
    return out


def _run_reduce(problem: dict):
    spec = _spec_from(problem)
    grid = _grid_from(problem)
    comp = _comparator_from(problem)
    dt = _number(problem, "problem", "dt", default=DEFAULT_DT)
    epsilon = problem.get("epsilon")
    if epsilon is None:
        _fail("problem.epsilon", "missing")
    M0 = problem.get("M0", 1.0)
    if isinstance(M0, list):
        M0 = np.asarray(M0, dtype=float)
    ro = ReductionProblem(
        spec=spec, alpha0=_phase_point(problem),
        T=_number(problem, "problem", "T", required=True),
        epsilon=epsilon, comparator=comp,
        E=_number(problem, "problem", "E"), grid=grid, M0=M0,
        region=_region_from(problem), dt=dt,
        samples=int(problem.get("samples", 200)))

    def compute():
        report = run_reduction(ro).to_json_dict()
        b = report
        rows = list(zip(b["times"], b["error_max"], b["bound_general"],
                        b["bound_specialized"], b["delta1_measured"],
                        b["delta1_duhamel"], b["delta2"]))
        header = ("t", "error_max", "bound_general", "bound_specialized",
                  "delta1_measured", "delta1_duhamel", "delta2")
        return report, header, rows, report["verdict"]

    return compute


def _run_classify_classical(problem: dict):
    spec = _spec_from(problem)
    alpha0 = _phase_point(problem)
    horizon = _number(problem, "problem", "T", required=True)
    dt = _number(problem, "problem", "dt", default=1e-3)
    radii = problem.get("radii")

    def compute():
        res = classify_classical(spec, alpha0, horizon, radii=radii, dt=dt)
        result = {"label": res.label, "horizon": res.horizon,
                  "diagnostics": res.diagnostics,
                  "provenance": _provenance(dt=dt)}
        rows = [(res.label, res.horizon, res.diagnostics.get("diverged"))]
        return result, ("label", "horizon", "diverged"), rows, None

    return compute


def _run_classify_quantum(problem: dict):
    horizons = problem.get("horizons")
    if isinstance(horizons, list):
        if len(horizons) < 2:
            _fail("problem.horizons", "a list needs at least two horizons")
        horizons = [float(h) for h in horizons]
    elif isinstance(horizons, (int, float)) and not isinstance(horizons, bool):
        horizons = float(horizons)
    else:
        _fail("problem.horizons", "must be a number or a list of numbers")
    if "matrix" in problem:
        H = np.asarray(problem["matrix"], dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            _fail("problem.matrix", "must be square")
        if not np.allclose(H, H.T, atol=1e-12):
            _fail("problem.matrix", "must be symmetric")
        psi = np.asarray(problem.get("psi", ()), dtype=complex)
        if psi.shape != (H.shape[0],):
            _fail("problem.psi", "must be a vector matching the matrix")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-6:
            _fail("problem.psi", "must be unit norm")
        psi = psi / norm
        omega_raw = problem.get("omega", "self")
        if omega_raw == "self":
            omega = np.outer(psi, psi.conj())
        else:
            omega = np.asarray(omega_raw, dtype=float)
        provenance = _provenance()
        provenance["dimension"] = int(H.shape[0])

        def compute():
            out = classify_quantum(finite_evolution(H), psi, omega, horizons)
            out["provenance"] = provenance
            rows = list(zip(out["horizons"], out["mu"], out["tau"]))
            return out, ("T", "mu", "tau"), rows, None

        return compute
    spec = _spec_from(problem)
    grid = _grid_from(problem)
    comp = _comparator_from(problem)
    dt = _number(problem, "problem", "dt", default=0.25)
    pkt = _block(problem, "packet", required=False) or {"alpha0": [0.0, 0.0]}
    alpha0 = _phase_point(pkt)
    M0 = pkt.get("M0", 1.0)

    def compute():
        psi = sample_on_grid(packet(alpha0, M0), grid)
        handle = GridHamiltonian(spec, grid, dt=dt)
        out = classify_quantum(handle, psi, comp, horizons)
        out["provenance"] = _provenance(grid=grid, dt=dt, comparator=comp)
        rows = list(zip(out["horizons"], out["mu"], out["tau"]))
        return out, ("T", "mu", "tau"), rows, None

    return compute


def _run_comparator_audit(problem: dict):
    s = _number(problem, "problem", "s", required=True)
    kwargs = {"s": s}
    if "N" in problem:
        kwargs["N"] = int(problem["N"])
    comp = ComparatorSpec(**kwargs)
    dimension = int(problem.get("dimension", 1))

    def compute():
        result = comparator_scalars(comp, dimension)
        result.update({"s": comp.s, "N": comp.N, "dimension": dimension,
                       "provenance": _provenance(comparator=comp)})
        rows = [(comp.s, comp.N, result["norm"], result["trace"],
                 result["aOmega_sq_measured"], result["aOmega_bound"])]
        header = ("s", "N", "norm", "trace", "aOmega_sq_measured",
                  "aOmega_bound")
        return result, header, rows, None

    return compute


def _run_scale(problem: dict):
    spec = _spec_from(problem)
    alpha0 = _phase_point(problem)
    T = _number(problem, "problem", "T", required=True)
    lambdas = problem.get("lambdas")
    if not isinstance(lambdas, list) or not lambdas:
        _fail("problem.lambdas", "must be a nonempty list")
    grid = _grid_from(problem)
    dt = _number(problem, "problem", "dt", default=DEFAULT_DT)
    reading = problem.get("reading", "scaled-family")
    workers = max(1, int(os.environ.get("REDUCE_THREADS", "1")))

    def compute():
        out = hepp_experiment(spec, alpha0, T, lambdas, grid=grid, dt=dt,
                              reading=reading,
                              workers=min(workers, len(lambdas)))
        out["provenance"] = _provenance(grid=grid, dt=dt)
        rows = [(r["lam"], r["error"], r["bound"]) for r in out["rows"]]
        return out, ("lambda", "error", "bound"), rows, None

    return compute


def _run_squeeze(problem: dict):
    spec = _spec_from(problem)
    grid = _grid_from(problem)
    comp = _comparator_from(problem)
    dt = _number(problem, "problem", "dt", default=DEFAULT_DT)
    dilations = problem.get("dilations")
    if not isinstance(dilations, list) or not dilations:
        _fail("problem.dilations", "must be a nonempty list")
    ro = ReductionProblem(
        spec=spec, alpha0=_phase_point(problem),
        T=_number(problem, "problem", "T", required=True),
        epsilon=problem.get("epsilon", 1.0), comparator=comp,
        E=_number(problem, "problem", "E"), grid=grid, dt=dt)

    def compute():
        out = squeeze_sweep(ro, dilations)
        out["provenance"] = _provenance(grid=grid, dt=dt, comparator=comp)
        rows = [(r["d"], r["duhamel_term"], r["comparator_term"],
                 r["total_bound"]) for r in out["rows"]]
        header = ("d", "duhamel_term", "comparator_term", "total_bound")
        return out, header, rows, None

    return compute


def _run_ehrenfest(problem: dict):
    spec = _spec_from(problem)
    grid = _grid_from(problem)
    T = _number(problem, "problem", "T", required=True)
    dt = _number(problem, "problem", "dt", default=DEFAULT_DT)
    stride = int(problem.get("sample_stride", 2))
    pkt = _block(problem, "packet", required=False) or {"alpha0": [0.0, 0.0]}
    alpha0 = _phase_point(pkt)
    M0 = pkt.get("M0", 1.0)

    def compute():
        psi = sample_on_grid(packet(alpha0, M0), grid)
        data = ehrenfest_run(spec, psi, T, dt=dt, sample_stride=stride)
        res = ehrenfest_residuals(data)
        result = {
            "identity_max": float(np.max(res["identity"])),
            "gap_initial": float(res["gap"][0]),
            "gap_max": float(np.max(res["gap"])),
            "times": res["times"], "identity": res["identity"],
            "gap": res["gap"],
            "provenance": _provenance(grid=grid, dt=dt),
        }
        rows = list(zip(res["times"], res["identity"], res["gap"]))
        return result, ("t", "identity", "gap"), rows, None

    return compute


_RUNNERS = {
    "reduce": _run_reduce,
    "classify-classical": _run_classify_classical,
    "classify-quantum": _run_classify_quantum,
    "comparator-audit": _run_comparator_audit,
    "scale": _run_scale,
    "squeeze": _run_squeeze,
    "ehrenfest": _run_ehrenfest,
}


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def config_hash(config: dict) -> str:
    canonical = json.dumps(_jsonable(config), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def emit_report(envelope: dict, directory: Path, formats,
                csv_table=None) -> list:
    """Write <mode>.json / <mode>.csv under directory; returns the paths."""
    directory.mkdir(parents=True, exist_ok=True)
    mode = envelope["mode"]
    paths = []
    if "json" in formats:
        path = directory / f"{mode}.json"
        path.write_text(json.dumps(envelope, sort_keys=True, indent=2,
                                   ensure_ascii=False) + "\n")
        paths.append(path)
    if "csv" in formats and csv_table is not None:
        header, rows = csv_table
        path = directory / f"{mode}.csv"
        with path.open("w", newline="") as fh:
            fh.write(f"# tool: qreduce {__version__}\n")
            fh.write(f"# config_sha256: {envelope['config_sha256']}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(["" if v is None else v
                                 for v in _jsonable(list(row))])
        paths.append(path)
    return paths


def _envelope(mode: str, config: dict, result: dict) -> dict:
    return _jsonable({
        "tool": {"name": "qreduce", "version": __version__},
        "mode": mode,
        "config_sha256": config_hash(config),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config,
        "seed": config.get("seed"),
        "tolerances": config.get("tolerances", {}),
        "result": result,
    })


def run(config_path, assert_reduced: bool = False, out_dir=None,
        formats=None) -> int:
    """Execute one config; returns the process exit status."""
    try:
        config = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if not isinstance(config, dict):
            _fail("", "top level must be an object")
        mode = config.get("mode")
        if mode not in MODES:
            _fail("mode", f"must be one of {MODES}")
        compute = _RUNNERS[mode](_block(config, "problem"))
        output = _block(config, "output", required=False)
        directory = Path(out_dir or output.get("directory", "."))
        formats = list(formats or output.get("formats", ["json"]))
        if any(fmt not in ("json", "csv") for fmt in formats):
            _fail("output.formats", "entries must be 'json' or 'csv'")
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result, header, rows, verdict = compute()
    except (QReduceError, ValueError) as exc:
        diagnostic = _envelope(mode, config, {
            "failed": type(exc).__name__, "message": str(exc)})
        try:
            emit_report({**diagnostic, "mode": f"{mode}-failure"},
                        Path(directory), ["json"])
        except OSError:
            pass
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    envelope = _envelope(mode, config, result)
    try:
        paths = emit_report(envelope, Path(directory), formats,
                            csv_table=(header, rows))
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return 3
    note = f" verdict={verdict}" if verdict is not None else ""
    label = result.get("label")
    if label is not None:
        note += f" label={label}"
    print(f"{mode}:{note} wrote {', '.join(str(p) for p in paths)}")
    if assert_reduced and verdict is not None and verdict != "reduced":
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="reduce",
        description="Run a reduction-pipeline experiment from a JSON config.")
    parser.add_argument("config", help="path to the JSON config")
    parser.add_argument("--assert-reduced", action="store_true",
                        help="exit 1 unless the verdict is 'reduced'")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--format",
                        help="comma-separated subset of json,csv")
    args = parser.parse_args(argv)
    formats = args.format.split(",") if args.format else None
    return run(args.config, assert_reduced=args.assert_reduced,
               out_dir=args.out, formats=formats)


if __name__ == "__main__":
    sys.exit(main())
