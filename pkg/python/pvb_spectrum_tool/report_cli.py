# imports from built-in packages
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

# imports from external packages (in requirements.txt)
import numpy as np
import typer
from rich import print  # For colored output
from rich.markup import escape
from rich.logging import RichHandler

# imports from same project
from constants import (
    BASIS_SUMMARY_CSV,
    BASIS_TRACE_TEMPLATE,
    CONCURRENT_WORKERS,
    CONVERGE_CSV,
    DEFAULT_SOLVE_LEVELS,
    DIRECT_DVR,
    EXIT_CONFIG_ERROR,
    EXIT_NUMERICAL_FAILURE,
    FLAG_EMPTY_MASK,
    FLAG_HEURISTIC_LATTICE,
    FLAG_REGULARIZED,
    FLAG_SOLVE_FAILED,
    GAUSS_LEGENDRE,
    MORSE,
    PRUNE_ALL,
    PRUNE_SCAN_CSV,
    PVB_BIORTH_BOTH,
    PVB_SYMMETRIC,
    SOLVE_CSV,
)
from errors import ConfigError, EmptyMaskError, InvalidArgumentError, NotAvailableError
from experiment_config import ExperimentConfig, load_config
from linalg import Spectrum
from operators import HamiltonianMatrix, analytic_levels, bound_state_count, build_hamiltonian
from report_writer import ReportRow, header_lines, write_report, write_table
from solver import (
    PruneStrategy,
    build_mask,
    max_multiset_deviation,
    solve_direct,
    solve_pvb,
    tracked_level_count,
)
from vn_lattice import (
    FrameMatrices,
    VnLattice,
    build_frame_matrix,
    build_lattice,
    contracted_function,
    lattice_gaussian,
    lattice_resemblance,
    shift_covariance_defect,
)

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="Spectra of 1-D Schrodinger problems in DVR and contracted lattice bases.")


@dataclass
class PointResult:
    """Rows of one sweep point plus the failures met while producing them."""
    rows: List[ReportRow] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)


@dataclass
class FramePoint:
    """Everything a pvb solve at one N needs; shared read-only across prune values."""
    h: HamiltonianMatrix
    direct: Spectrum
    lattice: Optional[VnLattice] = None
    frame: Optional[FrameMatrices] = None


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(show_path=False)],
        force=True,
    )


def _load(config_path: Path) -> ExperimentConfig:
    try:
        config = load_config(config_path)
    except ConfigError as e:
        print(f"[red]Config error in {config_path}: {escape(str(e))}[/red]")
        raise typer.Exit(EXIT_CONFIG_ERROR)
    print(f"[green]Loaded experiment '{config.experiment_id}' from {config_path}[/green]")
    return config


def _reject(message: str) -> None:
    print(f"[red]{escape(message)}[/red]")
    raise typer.Exit(EXIT_CONFIG_ERROR)


def _reference_levels(h: HamiltonianMatrix, count: int) -> Optional[np.ndarray]:
    """Closed-form levels when the model has them; Morse stops at its bound-state count."""
    try:
        if h.model.kind == MORSE:
            count = min(count, bound_state_count(h.model, h.mass))
        return analytic_levels(h.model, h.mass, count)
    except NotAvailableError:
        return None


def _frame_flags(point: FramePoint) -> Tuple[str, ...]:
    flags = []
    if point.frame is not None and point.frame.regularized:
        flags.append(FLAG_REGULARIZED)
    if point.lattice is not None and point.lattice.heuristic:
        flags.append(FLAG_HEURISTIC_LATTICE)
    return tuple(flags)


def prepare_point(config: ExperimentConfig, n: int, with_frame: bool) -> FramePoint:
    """
    Builds H, its direct spectrum and, when requested, the lattice and frame at size N.

    Raises:
        IllConditionedFrameError: If the frame cannot be inverted and regularization is off.
    """
    dvr = config.build_dvr(n)
    h = build_hamiltonian(dvr, config.build_model(), config.mass)
    point = FramePoint(h=h, direct=solve_direct(h))
    if with_frame:
        nx, np_ = config.lattice_shape(n)
        point.lattice = build_lattice(dvr, nx, np_)
        point.frame = build_frame_matrix(dvr, point.lattice, regularize=config.regularize)
    return point


def direct_rows(config: ExperimentConfig, point: FramePoint) -> List[ReportRow]:
    """DirectDvr rows, compared with the closed-form levels when they exist."""
    count = min(config.levels or DEFAULT_SOLVE_LEVELS, point.h.size)
    reference = _reference_levels(point.h, count)
    rows = []
    for level in range(count):
        value = float(point.direct.values[level])
        has_reference = reference is not None and level < len(reference)
        rows.append(ReportRow(
            experiment_id=config.experiment_id,
            representation=DIRECT_DVR,
            n=point.h.size,
            retained=point.h.size,
            fraction=1.0,
            level=level,
            eigenvalue=value,
            reference=float(reference[level]) if has_reference else None,
            reference_kind="analytic" if has_reference else "",
            abs_error=abs(value - float(reference[level])) if has_reference else None,
        ))
    return rows


def pvb_rows(
    config: ExperimentConfig,
    point: FramePoint,
    strategy: PruneStrategy,
    representations: Sequence[str],
) -> PointResult:
    """
    Solves every requested representation under one prune strategy.

    Failures are collected per representation so the remaining ones still run.
    An empty mask yields one flagged row per representation.
    """
    result = PointResult()
    lat = point.lattice
    common = dict(
        experiment_id=config.experiment_id,
        n=point.h.size,
        nx=lat.n_x,
        np=lat.n_p,
        prune_parameter=strategy.parameter,
        cond_s=point.frame.cond_s,
    )
    try:
        mask = build_mask(lat, point.h.model, point.h.mass, strategy)
    except EmptyMaskError as e:
        logger.warning(f"N={point.h.size}, {strategy.label}: {e}")
        for rep in representations:
            result.rows.append(ReportRow(representation=rep, retained=0, fraction=0.0,
                                         flags=_frame_flags(point) + (FLAG_EMPTY_MASK,), **common))
        return result

    pruned = mask.count < mask.size
    if pruned:
        count = tracked_level_count(mask.count, config.levels)
    else:
        count = min(config.levels or DEFAULT_SOLVE_LEVELS, mask.count)
    for rep in representations:
        try:
            spectrum = solve_pvb(point.h, point.frame, mask, rep)
        except np.linalg.LinAlgError as e:
            message = f"N={point.h.size}, {strategy.label}, {rep}: {e}"
            logger.error(message)
            result.failures.append(message)
            result.rows.append(ReportRow(representation=rep, retained=mask.count, fraction=mask.fraction,
                                         flags=_frame_flags(point) + (FLAG_SOLVE_FAILED,), **common))
            continue
        deviation = None if pruned else max_multiset_deviation(spectrum, point.direct)
        for level in range(count):
            value = float(spectrum.values[level])
            reference = float(point.direct.values[level])
            result.rows.append(ReportRow(
                representation=rep,
                retained=mask.count,
                fraction=mask.fraction,
                level=level,
                eigenvalue=value,
                reference=reference,
                reference_kind=DIRECT_DVR,
                abs_error=abs(value - reference),
                direct_deviation=deviation,
                flags=_frame_flags(point),
                **common,
            ))
    return result


def evaluate_point(config: ExperimentConfig, n: int) -> PointResult:
    """Direct rows plus unpruned pvb rows for every configured representation at size N."""
    result = PointResult()
    try:
        point = prepare_point(config, n, with_frame=bool(config.representations))
    except np.linalg.LinAlgError as e:
        message = f"N={n}: {e}"
        logger.error(message)
        result.failures.append(message)
        return result
    result.rows.extend(direct_rows(config, point))
    if config.representations:
        pvb = pvb_rows(config, point, PruneStrategy(), config.representations)
        result.rows.extend(pvb.rows)
        result.failures.extend(pvb.failures)
    return result


def run_points(
    tasks: Sequence[Tuple[str, tuple]],
    worker: Callable[..., PointResult],
    max_workers: int = CONCURRENT_WORKERS,
) -> PointResult:
    """
    Runs worker(*args) for every (label, args) task concurrently and merges the results.

    Completion order does not matter: the writer sorts rows before emitting them.
    """
    merged = PointResult()
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(worker, *args): label for label, args in tasks}
        for future in as_completed(futures):
            label = futures[future]
            try:
                result = future.result()
            except (InvalidArgumentError, np.linalg.LinAlgError) as e:
                message = f"{label}: {e}"
                logger.error(message)
                merged.failures.append(message)
                continue
            merged.rows.extend(result.rows)
            merged.failures.extend(result.failures)
    return merged


def _finish(result: PointResult, out_path: Path) -> None:
    print(f"[green]Wrote {len(result.rows)} row(s) to {out_path}[/green]")
    if result.failures:
        print(f"[red]{len(result.failures)} numerical failure(s):[/red]")
        for failure in sorted(result.failures):
            print(f"[red] - {escape(failure)}[/red]")
        raise typer.Exit(EXIT_NUMERICAL_FAILURE)


def _out_dir(config: ExperimentConfig, out: Optional[Path]) -> Path:
    return Path(out) if out is not None else Path(config.output_dir)


ConfigOption = typer.Option(..., "--config", "-c", help="Experiment config file (KEY=VALUE).")
OutOption = typer.Option(None, "--out", "-o", help="Output directory, overrides OUTPUT_DIR.")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Debug logging.")


@app.command("solve")
def cmd_solve(
    config_path: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Runs DirectDvr plus every configured representation at a single N.
    """
    _configure_logging(verbose)
    config = _load(config_path)
    if len(config.n_values) != 1:
        _reject(f"solve needs a single DVR_N, got {list(config.n_values)}.")
    if config.prune_strategy != PRUNE_ALL and len(config.prune_values) != 1:
        _reject("solve takes at most one prune value; use prune-scan for sweeps.")

    n = config.n_values[0]
    strategy = config.prune_strategies()[0]
    print(f"Solving {config.model_kind} on {config.dvr_family} with N={n}...")
    if strategy.kind == PRUNE_ALL:
        result = evaluate_point(config, n)
    else:
        result = PointResult()
        try:
            point = prepare_point(config, n, with_frame=bool(config.representations))
            result.rows.extend(direct_rows(config, point))
            if config.representations:
                pvb = pvb_rows(config, point, strategy, config.representations)
                result.rows.extend(pvb.rows)
                result.failures.extend(pvb.failures)
        except np.linalg.LinAlgError as e:
            result.failures.append(f"N={n}: {e}")

    out_path = _out_dir(config, out) / SOLVE_CSV
    write_report(out_path, result.rows, header_lines(config, "solve", config.dvr_family == GAUSS_LEGENDRE))
    _finish(result, out_path)


@app.command("converge")
def cmd_converge(
    config_path: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Sweeps DVR_N with unpruned bases; each pvb row carries its deviation from DirectDvr.
    """
    _configure_logging(verbose)
    config = _load(config_path)
    if len(config.n_values) < 2:
        _reject(f"converge needs at least 2 values in DVR_N, got {list(config.n_values)}.")

    print(f"Running {len(config.n_values)} sweep point(s) with {CONCURRENT_WORKERS} workers...")
    result = run_points([(f"N={n}", (config, n)) for n in config.n_values], evaluate_point)

    out_path = _out_dir(config, out) / CONVERGE_CSV
    write_report(out_path, result.rows, header_lines(config, "converge", config.dvr_family == GAUSS_LEGENDRE))
    _finish(result, out_path)


@app.command("prune-scan")
def cmd_prune_scan(
    config_path: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Sweeps PRUNE_VALUES at a single N; PvbSymmetric and PvbBiorthBoth always run side by side.
    """
    _configure_logging(verbose)
    config = _load(config_path)
    if config.prune_strategy == PRUNE_ALL:
        _reject("prune-scan needs PRUNE_STRATEGY energy_shell or top_k.")
    if len(config.prune_values) < 2:
        _reject(f"prune-scan needs at least 2 values in PRUNE_VALUES, got {list(config.prune_values)}.")
    if len(config.n_values) != 1:
        _reject(f"prune-scan needs a single DVR_N, got {list(config.n_values)}.")

    representations = [PVB_SYMMETRIC, PVB_BIORTH_BOTH]
    representations += [rep for rep in config.representations if rep not in representations]

    n = config.n_values[0]
    result = PointResult()
    try:
        point = prepare_point(config, n, with_frame=True)
    except np.linalg.LinAlgError as e:
        result.failures.append(f"N={n}: {e}")
    else:
        print(f"Scanning {len(config.prune_values)} prune value(s) on a "
              f"{point.lattice.n_x}x{point.lattice.n_p} lattice...")
        merged = run_points(
            [(strategy.label, (config, point, strategy, representations)) for strategy in config.prune_strategies()],
            pvb_rows,
        )
        result.rows.extend(merged.rows)
        result.failures.extend(merged.failures)
        skipped = sorted({row.prune_parameter for row in result.rows if FLAG_EMPTY_MASK in row.flags})
        if skipped:
            print(f"[yellow]Skipped prune value(s) with an empty mask: {escape(str(skipped))}[/yellow]")

    out_path = _out_dir(config, out) / PRUNE_SCAN_CSV
    write_report(out_path, result.rows, header_lines(config, "prune-scan", config.dvr_family == GAUSS_LEGENDRE))
    _finish(result, out_path)


def default_basis_indices(lat: VnLattice) -> List[int]:
    """A boundary-adjacent function (last position, middle momentum) and an interior one."""
    middle = lat.n_p // 2
    return sorted({lat.index(lat.n_x - 1, middle), lat.index(lat.n_x // 2, middle)})


@app.command("basis-dump")
def cmd_basis_dump(
    config_path: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    indices: Optional[str] = typer.Option(None, "--indices", help="Comma-separated lattice indices."),
    plot_points: Optional[int] = typer.Option(None, "--plot-points", help="Fine-grid points per trace."),
    verbose: bool = VerboseOption,
):
    """
    Writes dense traces of contracted lattice functions plus a per-function summary.
    """
    _configure_logging(verbose)
    config = _load(config_path)
    n = config.n_values[0]
    points = plot_points if plot_points is not None else config.plot_points
    if points < 2:
        _reject(f"--plot-points must be at least 2, got {points}.")

    dvr = config.build_dvr(n)
    nx, np_ = config.lattice_shape(n)
    lat = build_lattice(dvr, nx, np_)
    if indices is not None:
        try:
            requested = sorted({int(item) for item in indices.split(",") if item.strip()})
        except ValueError:
            _reject(f"--indices must be comma-separated integers, got '{indices}'.")
    else:
        requested = sorted(set(config.basis_indices)) or default_basis_indices(lat)
    bad = [index for index in requested if not 0 <= index < lat.size]
    if bad or not requested:
        _reject(f"Lattice index out of range for N={lat.size}: {bad or 'none given'}.")

    try:
        frame = build_frame_matrix(dvr, lat, regularize=config.regularize)
    except np.linalg.LinAlgError as e:
        print(f"[red]{escape(str(e))}[/red]")
        raise typer.Exit(EXIT_NUMERICAL_FAILURE)

    out_dir = _out_dir(config, out)
    header = header_lines(config, "basis-dump", lat.heuristic)
    defect = shift_covariance_defect(frame, lat)
    summary = []
    for index in requested:
        traced = contracted_function(dvr, frame, index, points)
        bare = lattice_gaussian(lat, index, traced.x)
        write_table(
            out_dir / BASIS_TRACE_TEMPLATE.format(index=index),
            header + [f"lattice_index={index}", f"cell={lat.cell(index)}"],
            ["x", "re_g", "re_gt", "im_gt", "abs_gt"],
            (
                {"x": x, "re_g": g.real, "re_gt": gt.real, "im_gt": gt.imag, "abs_gt": abs(gt)}
                for x, g, gt in zip(traced.x, bare, traced.trace)
            ),
        )
        i, j = lat.cell(index)
        x_center, p_center = lat.center(index)
        summary.append({
            "index": index,
            "i": i,
            "j": j,
            "x_center": x_center,
            "p_center": p_center,
            "resemblance": lattice_resemblance(dvr, lat, frame, index, points),
            "left_edge_abs": float(abs(traced.trace[0])),
            "right_edge_abs": float(abs(traced.trace[-1])),
            "endpoint_mismatch": float(abs(traced.trace[0] - traced.trace[-1])),
            "shift_covariance_defect": defect,
            "cond_s": frame.cond_s,
        })

    summary_path = write_table(out_dir / BASIS_SUMMARY_CSV, header, list(summary[0]), summary)
    print(f"[green]Wrote {len(requested)} trace(s) and {summary_path}[/green]")


if __name__ == "__main__":
    app()
