"""Grid evaluation over (coupling, kappa), persistence and exports.

Every grid point is an independent pure function of the parameters, so the
sweep is a deterministic parallel map: worker count changes wall time, never
output bytes.  Per-point records stream to an append-only JSONL file which
doubles as the resume checkpoint; the CSV, heatmap matrices and manifest are
rewritten from the full record set in grid order on completion.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import analytic
from .entanglement import (
    entropy_of_entanglement,
    pair_concurrence,
    reduce_to_ensemble,
)
from .model import ModelParams
from .observables import observe
from .spectral import TruncationConfig, converge_ground_state

CSV_COLUMNS = (
    "lambda", "kappa", "energy", "gap", "degenerate", "residual", "n_max_used",
    "mean_Jz", "mean_n", "var_n", "var_X", "var_Y", "uncert_XY",
    "mean_Jx", "var_Jx", "var_Jy", "var_Jz", "phase_product",
    "entropy_bits", "concurrence", "concurrence_scaled",
)

HEATMAP_QUANTITIES = ("mean_Jz", "mean_n", "entropy_bits", "concurrence", "concurrence_scaled")

RECORDS_FILENAME = "records.jsonl"


@dataclass(frozen=True)
class SweepGrid:
    """Axes and shared parameters of one phase-diagram run.

    ``axis_mode`` fixes the meaning of ``lambda_axis``: either the bare
    coupling or coupling/sqrt(N), the natural axis for comparing ensemble
    sizes.
    """

    lambda_axis: tuple[float, ...]
    kappa_axis: tuple[float, ...]
    n_atoms: int
    omega_a: float = 1.0
    omega_f: float = 1.0
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    axis_mode: str = "lambda_over_sqrtN"

    def __post_init__(self) -> None:
        for name in ("lambda_axis", "kappa_axis"):
            axis = tuple(float(v) for v in getattr(self, name))
            if len(axis) == 0:
                raise ValueError(f"{name} is empty")
            if any(v < 0 for v in axis):
                raise ValueError(f"{name} must be non-negative")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, axis)
        if self.axis_mode not in ("lambda", "lambda_over_sqrtN"):
            raise ValueError(f"unknown axis_mode {self.axis_mode!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.kappa_axis), len(self.lambda_axis)

    @property
    def n_points(self) -> int:
        return len(self.kappa_axis) * len(self.lambda_axis)

    def bare_coupling(self, axis_value: float) -> float:
        if self.axis_mode == "lambda_over_sqrtN":
            return axis_value * math.sqrt(self.n_atoms)
        return axis_value

    def point_params(self, flat_index: int) -> tuple[int, int, ModelParams]:
        i_kappa, i_lambda = divmod(flat_index, len(self.lambda_axis))
        params = ModelParams(
            n_atoms=self.n_atoms,
            coupling=self.bare_coupling(self.lambda_axis[i_lambda]),
            kappa=self.kappa_axis[i_kappa],
            omega_a=self.omega_a,
            omega_f=self.omega_f,
        )
        return i_kappa, i_lambda, params

    def spec_dict(self) -> dict:
        return {
            "lambda_axis": list(self.lambda_axis),
            "kappa_axis": list(self.kappa_axis),
            "n_atoms": self.n_atoms,
            "omega_a": self.omega_a,
            "omega_f": self.omega_f,
            "axis_mode": self.axis_mode,
            "truncation": asdict(self.truncation),
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.spec_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def desk_grid(n_atoms: int, points: int = 21, **kwargs) -> SweepGrid:
    """Reduced-resolution preset over coupling/sqrt(N) in [0, 5], kappa in [0, 5]."""
    axis = tuple(np.linspace(0.0, 5.0, points))
    return SweepGrid(lambda_axis=axis, kappa_axis=axis, n_atoms=n_atoms, **kwargs)


def default_grid(n_atoms: int, **kwargs) -> SweepGrid:
    """Publication-resolution preset: 51 x 51 over the same ranges."""
    return desk_grid(n_atoms, points=51, **kwargs)


@dataclass(frozen=True)
class PointRecord:
    """One grid point: parameters, statistics, diagnostics or error marker."""

    index: int
    i_kappa: int
    i_lambda: int
    coupling: float
    kappa: float
    observables: dict | None = None
    diagnostics: dict | None = None
    error: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "index": self.index,
            "i_kappa": self.i_kappa,
            "i_lambda": self.i_lambda,
            "lambda": self.coupling,
            "kappa": self.kappa,
            "observables": self.observables,
            "diagnostics": self.diagnostics,
            "error": self.error,
        }
        return _sanitize_inf(out)

    @classmethod
    def from_json_dict(cls, data: dict) -> "PointRecord":
        data = _restore_inf(data)
        return cls(
            index=int(data["index"]),
            i_kappa=int(data["i_kappa"]),
            i_lambda=int(data["i_lambda"]),
            coupling=float(data["lambda"]),
            kappa=float(data["kappa"]),
            observables=data.get("observables"),
            diagnostics=data.get("diagnostics"),
            error=data.get("error"),
        )


def _sanitize_inf(obj):
    """Replace +/-inf floats by strings so the records stay strict JSON."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _sanitize_inf(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize_inf(v) for v in obj]
    return obj


def _restore_inf(obj):
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if isinstance(obj, dict):
        return {k: _restore_inf(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore_inf(v) for v in obj]
    return obj


def evaluate_point(grid: SweepGrid, flat_index: int) -> PointRecord:
    """Ground state, observables and entanglement for one grid point.

    Failures are captured in the record's error field; BLAS threading is
    pinned to one thread so serial and parallel sweeps produce identical
    arithmetic.
    """
    i_kappa, i_lambda, params = grid.point_params(flat_index)
    try:
        with threadpool_limits(limits=1), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = converge_ground_state(params, grid.truncation)
            basis = result.basis
            record = observe(result.vector, basis)
            entropy = entropy_of_entanglement(reduce_to_ensemble(result.vector, basis))
            concurrence = pair_concurrence(result.vector, basis) if params.n_atoms >= 2 else 0.0
            diagnostics = {
                "energy": result.energy,
                "gap": result.gap,
                "degenerate": result.degenerate,
                "residual": result.residual,
                "residual_mode": result.residual_mode,
                "n_max_used": result.n_max_used,
                "parity": result.parity,
                "converged": result.converged,
                "entropy_bits": entropy,
                "concurrence": concurrence,
                "concurrence_scaled": (params.n_atoms - 1) * concurrence,
            }
            if result.degenerate and result.members is not None:
                even = result.members[0]
                diagnostics["entropy_bits_even_member"] = entropy_of_entanglement(
                    reduce_to_ensemble(even, basis)
                )
                if params.n_atoms >= 2:
                    diagnostics["concurrence_even_member"] = pair_concurrence(even, basis)
        obs = record.as_dict()
        # distributions live in the records file only, not the flat CSV
        return PointRecord(
            index=flat_index, i_kappa=i_kappa, i_lambda=i_lambda,
            coupling=params.coupling, kappa=params.kappa,
            observables=obs, diagnostics=diagnostics,
        )
    except Exception as exc:  # per-point isolation: a sweep must not abort
        return PointRecord(
            index=flat_index, i_kappa=i_kappa, i_lambda=i_lambda,
            coupling=params.coupling, kappa=params.kappa,
            error=f"{type(exc).__name__}: {exc}",
        )


def _evaluate_star(args: tuple[SweepGrid, int]) -> PointRecord:
    return evaluate_point(*args)


@dataclass(frozen=True)
class SweepResult:
    """All point records in grid order plus the run manifest."""

    grid: SweepGrid
    records: tuple[PointRecord, ...]
    manifest: dict

    def record_at(self, i_kappa: int, i_lambda: int) -> PointRecord:
        return self.records[i_kappa * len(self.grid.lambda_axis) + i_lambda]

    def matrix(self, quantity: str) -> np.ndarray:
        """Grid matrix (row = kappa index) of one scalar quantity; nan on failure."""
        rows, cols = self.grid.shape
        out = np.full((rows, cols), np.nan)
        for rec in self.records:
            if rec.error is not None:
                continue
            merged = {**(rec.observables or {}), **(rec.diagnostics or {})}
            value = merged.get(quantity)
            if value is not None:
                out[rec.i_kappa, rec.i_lambda] = value
        return out

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.error is not None)


def _load_completed(records_path: Path) -> dict[int, PointRecord]:
    completed: dict[int, PointRecord] = {}
    if not records_path.exists():
        return completed
    with records_path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = PointRecord.from_json_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError):
                continue  # torn tail line from an interrupted run
            completed[rec.index] = rec
    return completed


def run_sweep(
    grid: SweepGrid,
    workers: int = 1,
    out_dir: str | Path | None = None,
    resume: bool = False,
    progress: bool = False,
) -> SweepResult:
    """Evaluate the full grid and, when ``out_dir`` is given, persist results.

    ``resume`` skips indices already present in the records file.  Output
    files (CSV, heatmap matrices) are identical for any worker count and for
    interrupted-then-resumed runs.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    out_path = Path(out_dir) if out_dir is not None else None
    records_path = out_path / RECORDS_FILENAME if out_path else None
    done: dict[int, PointRecord] = {}
    if records_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        if resume:
            done = _load_completed(records_path)
            done = {i: r for i, r in done.items() if i < grid.n_points}
        else:
            records_path.write_text("")
    todo = [i for i in range(grid.n_points) if i not in done]

    started = time.time()
    sink = records_path.open("a") if records_path is not None else None
    try:
        def _consume(rec: PointRecord) -> None:
            done[rec.index] = rec
            if sink is not None:
                sink.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
                sink.flush()
            if progress and (len(done) % 25 == 0 or len(done) == grid.n_points):
                print(f"  {len(done)}/{grid.n_points} points ({time.time() - started:.1f}s)")

        if workers == 1:
            for i in todo:
                _consume(evaluate_point(grid, i))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rec in pool.map(_evaluate_star, [(grid, i) for i in todo], chunksize=4):
                    _consume(rec)
    finally:
        if sink is not None:
            sink.close()

    records = tuple(done[i] for i in range(grid.n_points))
    manifest = build_manifest(grid, records)
    result = SweepResult(grid=grid, records=records, manifest=manifest)
    if out_path is not None:
        export_result(result, out_path)
    return result


def build_manifest(grid: SweepGrid, records: tuple[PointRecord, ...]) -> dict:
    """Run metadata: grid spec, hash, analytic overlays, failure summary."""
    overlay_w, overlay_s = [], []
    for kappa in grid.kappa_axis:
        probe = ModelParams(
            n_atoms=grid.n_atoms, coupling=0.0, kappa=kappa,
            omega_a=grid.omega_a, omega_f=grid.omega_f,
        )
        overlay_w.append(analytic.critical_coupling_weak(probe))
        overlay_s.append(analytic.critical_coupling_strong(probe))
    failed = [r.index for r in records if r.error is not None]
    not_converged = [
        r.index for r in records
        if r.error is None and r.diagnostics and not r.diagnostics.get("converged", True)
    ]
    weak_overlay_crossed = [
        k for k, w, s in zip(grid.kappa_axis, overlay_w, overlay_s) if s >= w
    ]
    return {
        "version": _package_version(),
        "config_hash": grid.config_hash(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "grid": grid.spec_dict(),
        "analytic_overlay": {
            "kappa": list(grid.kappa_axis),
            "lambda_weak": overlay_w,
            "lambda_strong": overlay_s,
            # kappa rows where the strong threshold overtakes the weak one:
            # the weak-regime expansion is outside its validity domain there
            "strong_exceeds_weak_at": weak_overlay_crossed,
        },
        "counts": {
            "points": len(records),
            "failed": len(failed),
            "not_converged": len(not_converged),
        },
        "failed_indices": failed,
        "csv_columns": list(CSV_COLUMNS),
        "heatmaps": [f"heatmap_{q}.txt" for q in HEATMAP_QUANTITIES],
    }


def _package_version() -> str:
    from . import __version__

    return __version__


def _csv_cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def csv_rows(result: SweepResult) -> list[str]:
    rows = [",".join(CSV_COLUMNS)]
    for rec in result.records:
        obs = rec.observables or {}
        diag = rec.diagnostics or {}
        values = {
            "lambda": rec.coupling,
            "kappa": rec.kappa,
            "energy": diag.get("energy"),
            "gap": diag.get("gap"),
            "degenerate": diag.get("degenerate"),
            "residual": diag.get("residual"),
            "n_max_used": diag.get("n_max_used"),
            "phase_product": obs.get("phase_product"),
            "entropy_bits": diag.get("entropy_bits"),
            "concurrence": diag.get("concurrence"),
            "concurrence_scaled": diag.get("concurrence_scaled"),
        }
        for key in ("mean_Jz", "mean_n", "var_n", "var_X", "var_Y", "uncert_XY",
                    "mean_Jx", "var_Jx", "var_Jy", "var_Jz"):
            values[key] = obs.get(key)
        rows.append(",".join(_csv_cell(values[c]) for c in CSV_COLUMNS))
    return rows


def export_result(result: SweepResult, out_dir: str | Path) -> dict[str, Path]:
    """Write CSV, heatmap matrices and manifest; returns the paths written."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    csv_path = out_path / "sweep.csv"
    csv_path.write_text("\n".join(csv_rows(result)) + "\n")
    written["csv"] = csv_path

    for quantity in HEATMAP_QUANTITIES:
        mat = result.matrix(quantity)
        path = out_path / f"heatmap_{quantity}.txt"
        lines = [" ".join(f"{v:.12g}" for v in row) for row in mat]
        path.write_text("\n".join(lines) + "\n")
        written[quantity] = path

    manifest_path = out_path / "manifest.json"
    manifest_path.write_text(json.dumps(_sanitize_inf(result.manifest), indent=2, sort_keys=True) + "\n")
    written["manifest"] = manifest_path
    return written


@dataclass(frozen=True)
class TransitionEstimate:
    """Susceptibility-peak crossover location along a fixed-kappa line."""

    lambda_star: float
    peak_index: int
    susceptibility: tuple[float, ...]


def locate_transition(couplings: np.ndarray, mean_jz: np.ndarray) -> TransitionEstimate:
    """Peak of -d^2<Jz>/d lambda^2 by second differences, parabolically refined.

    A diagnostic for where the finite-size crossover sits relative to the
    analytic thresholds; needs a uniformly spaced line with >= 5 points.
    """
    lam = np.asarray(couplings, dtype=float)
    jz = np.asarray(mean_jz, dtype=float)
    if lam.shape != jz.shape or lam.size < 5:
        raise ValueError("need matching arrays with at least 5 points")
    steps = np.diff(lam)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-8):
        raise ValueError("couplings must be uniformly spaced and increasing")
    h = float(steps[0])
    susc = -(jz[2:] - 2.0 * jz[1:-1] + jz[:-2]) / h**2
    peak = int(np.argmax(susc))
    lambda_star = lam[peak + 1]
    if 0 < peak < susc.size - 1:
        left, mid, right = susc[peak - 1], susc[peak], susc[peak + 1]
        denom = left - 2.0 * mid + right
        if abs(denom) > 1e-300:
            lambda_star += 0.5 * h * (left - right) / denom
    return TransitionEstimate(
        lambda_star=float(lambda_star), peak_index=peak + 1,
        susceptibility=tuple(float(s) for s in susc),
    )
