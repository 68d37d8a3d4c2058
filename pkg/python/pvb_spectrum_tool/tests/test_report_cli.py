import math

import pytest
from typer.testing import CliRunner

from constants import (
    BASIS_SUMMARY_CSV,
    CONVERGE_CSV,
    DIRECT_DVR,
    EXIT_CONFIG_ERROR,
    FLAG_EMPTY_MASK,
    PRUNE_SCAN_CSV,
    PVB_BIORTH_BOTH,
    PVB_SYMMETRIC,
    SOLVE_CSV,
    TOOL_VERSION,
)
from grid_dvr import build_periodic_grid, build_sinc_dvr
from operators import HarmonicPotential, build_hamiltonian
from report_cli import app
from report_writer import read_report

runner = CliRunner()


def _write_config(tmp_path, *lines, name="experiment.env"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _run(*args):
    result = runner.invoke(app, [str(arg) for arg in args])
    return result, " ".join(result.output.split())


def _number(cell):
    return float(cell) if cell != "" else None


@pytest.fixture
def quickstart(tmp_path):
    return _write_config(
        tmp_path,
        "EXPERIMENT_ID=harmonic_quickstart",
        "MODEL_KIND=harmonic",
        "DVR_X_MIN=-10",
        "DVR_X_MAX=10",
        "DVR_N=129",
        "SOLVE_LEVELS=20",
    )


def test_solve_quickstart_matches_harmonic_levels(tmp_path, quickstart):
    result, output = _run("solve", "-c", quickstart, "-o", tmp_path / "out")
    assert result.exit_code == 0, output
    header, rows = read_report(tmp_path / "out" / SOLVE_CSV)
    assert header[0] == f"tool_version={TOOL_VERSION}"
    assert "command=solve" in header
    assert "  EXPERIMENT_ID=harmonic_quickstart" in header
    assert len(rows) == 20
    assert {row["representation"] for row in rows} == {DIRECT_DVR}
    for level, row in enumerate(rows):
        assert int(row["level"]) == level
        assert row["reference_kind"] == "analytic"
        assert float(row["reference"]) == pytest.approx(level + 0.5)
        assert float(row["abs_error"]) < 1e-8


def test_solve_with_contracted_representations(tmp_path):
    config = _write_config(
        tmp_path,
        "EXPERIMENT_ID=harmonic_pvb",
        "MODEL_KIND=harmonic",
        "DVR_N=63",
        "LATTICE_RULE=explicit",
        "LATTICE_NX=7",
        "LATTICE_NP=9",
        "SOLVE_REPRESENTATIONS=pvb_symmetric,pvb_biorth_left,pvb_biorth_both",
        "SOLVE_LEVELS=5",
    )
    result, output = _run("solve", "-c", config, "-o", tmp_path)
    assert result.exit_code == 0, output
    _, rows = read_report(tmp_path / SOLVE_CSV)
    assert [row["representation"] for row in rows[::5]] == [
        DIRECT_DVR, PVB_SYMMETRIC, "pvb_biorth_left", PVB_BIORTH_BOTH,
    ]
    for row in rows[5:]:
        assert (row["nx"], row["np"], row["retained"]) == ("7", "9", "63")
        assert float(row["fraction"]) == 1.0
        assert _number(row["direct_deviation"]) <= 1e-6
        assert row["reference_kind"] == DIRECT_DVR


def test_solve_rejects_lattice_mismatch(tmp_path):
    config = _write_config(
        tmp_path,
        "EXPERIMENT_ID=bad_lattice",
        "MODEL_KIND=harmonic",
        "DVR_N=63",
        "LATTICE_RULE=explicit",
        "LATTICE_NX=8",
        "LATTICE_NP=8",
        "SOLVE_REPRESENTATIONS=pvb_symmetric",
    )
    result, output = _run("solve", "-c", config, "-o", tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert "Nx * Np = N" in output
    assert not (tmp_path / SOLVE_CSV).exists()


def test_solve_rejects_several_sizes_and_missing_files(tmp_path):
    config = _write_config(tmp_path, "EXPERIMENT_ID=two", "MODEL_KIND=harmonic", "DVR_N=17,25")
    result, _ = _run("solve", "-c", config, "-o", tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR
    result, _ = _run("solve", "-c", tmp_path / "missing.env")
    assert result.exit_code == EXIT_CONFIG_ERROR


@pytest.fixture
def converge_config(tmp_path):
    return _write_config(
        tmp_path,
        "EXPERIMENT_ID=harmonic_converge",
        "MODEL_KIND=harmonic",
        "DVR_N=17,25,33",
        "SOLVE_REPRESENTATIONS=pvb_symmetric,pvb_biorth_both",
        "SOLVE_LEVELS=3",
    )


def test_converge_errors_decrease_and_pvb_matches_direct(tmp_path, converge_config):
    result, output = _run("converge", "-c", converge_config, "-o", tmp_path / "out")
    assert result.exit_code == 0, output
    _, rows = read_report(tmp_path / "out" / CONVERGE_CSV)
    ground = [row for row in rows if row["representation"] == DIRECT_DVR and row["level"] == "0"]
    assert [int(row["n"]) for row in ground] == [17, 25, 33]
    errors = [float(row["abs_error"]) for row in ground]
    assert errors[0] > errors[1] > errors[2]

    pvb = [row for row in rows if row["representation"] != DIRECT_DVR]
    assert {int(row["n"]) for row in pvb} == {17, 25, 33}
    well_conditioned = [row for row in pvb if float(row["cond_s"]) < 1e8]
    assert well_conditioned
    for row in well_conditioned:
        n = int(row["n"])
        h_norm = build_hamiltonian(build_sinc_dvr(build_periodic_grid(-10.0, 20.0, n)), HarmonicPotential(), 1.0).norm
        assert float(row["direct_deviation"]) <= 1e-8 * h_norm


def test_converge_is_deterministic(tmp_path, converge_config):
    first, _ = _run("converge", "-c", converge_config, "-o", tmp_path / "first")
    second, _ = _run("converge", "-c", converge_config, "-o", tmp_path / "second")
    assert first.exit_code == second.exit_code == 0
    assert (tmp_path / "first" / CONVERGE_CSV).read_bytes() == (tmp_path / "second" / CONVERGE_CSV).read_bytes()


def test_converge_needs_two_sizes(tmp_path, quickstart):
    result, output = _run("converge", "-c", quickstart, "-o", tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert "at least 2" in output


def test_prune_scan_reports_fractions_side_by_side(tmp_path):
    config = _write_config(
        tmp_path,
        "EXPERIMENT_ID=harmonic_prune_scan",
        "MODEL_KIND=harmonic",
        "DVR_N=63",
        "LATTICE_RULE=explicit",
        "LATTICE_NX=7",
        "LATTICE_NP=9",
        "PRUNE_STRATEGY=energy_shell",
        "PRUNE_VALUES=-1,4,8,16,inf",
        "SOLVE_LEVELS=3",
    )
    result, output = _run("prune-scan", "-c", config, "-o", tmp_path)
    assert result.exit_code == 0, output
    assert "Skipped" in output
    _, rows = read_report(tmp_path / PRUNE_SCAN_CSV)

    skipped = [row for row in rows if FLAG_EMPTY_MASK in row["flags"].split(";")]
    assert {row["representation"] for row in skipped} == {PVB_SYMMETRIC, PVB_BIORTH_BOTH}
    assert all(float(row["prune_parameter"]) == -1.0 and row["retained"] == "0" for row in skipped)

    solved = [row for row in rows if row not in skipped]
    retained = {}
    for row in solved:
        assert float(row["fraction"]) == pytest.approx(int(row["retained"]) / 63)
        retained.setdefault(float(row["prune_parameter"]), set()).add(int(row["retained"]))
    assert retained == {4.0: {3}, 8.0: {9}, 16.0: {15}, math.inf: {63}}
    for cutoff in (4.0, 8.0, 16.0, math.inf):
        reps = {row["representation"] for row in solved if float(row["prune_parameter"]) == cutoff}
        assert reps == {PVB_SYMMETRIC, PVB_BIORTH_BOTH}

    symmetric_ground = {
        float(row["prune_parameter"]): float(row["abs_error"])
        for row in solved if row["representation"] == PVB_SYMMETRIC and row["level"] == "0"
    }
    assert symmetric_ground[4.0] >= symmetric_ground[8.0] - 1e-10
    assert symmetric_ground[8.0] >= symmetric_ground[16.0] - 1e-10
    assert symmetric_ground[math.inf] <= 1e-6


def test_prune_scan_needs_a_strategy(tmp_path, quickstart):
    result, _ = _run("prune-scan", "-c", quickstart, "-o", tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR


@pytest.fixture
def basis_config(tmp_path):
    return _write_config(
        tmp_path,
        "EXPERIMENT_ID=harmonic_basis",
        "MODEL_KIND=harmonic",
        "DVR_N=63",
        "LATTICE_RULE=explicit",
        "LATTICE_NX=7",
        "LATTICE_NP=9",
    )


def test_basis_dump_wraps_boundary_functions(tmp_path, basis_config):
    result, output = _run("basis-dump", "-c", basis_config, "-o", tmp_path, "--plot-points", 401)
    assert result.exit_code == 0, output
    _, summary = read_report(tmp_path / BASIS_SUMMARY_CSV)
    # last position with the middle momentum, then an interior function
    assert sorted(int(row["index"]) for row in summary) == [31, 58]
    for row in summary:
        assert float(row["endpoint_mismatch"]) <= 1e-10
        assert float(row["shift_covariance_defect"]) <= 1e-10

    header, trace = read_report(tmp_path / "basis_0058.csv")
    assert "lattice_index=58" in header
    assert len(trace) == 401
    assert float(trace[0]["abs_gt"]) == pytest.approx(float(trace[-1]["abs_gt"]), abs=1e-10)
    left_edge = [float(row["abs_gt"]) for row in trace if float(row["x"]) < -8.0]
    peak = max(float(row["abs_gt"]) for row in trace)
    assert max(left_edge) > 1e-3 * peak


def test_basis_dump_rejects_out_of_range_index(tmp_path, basis_config):
    result, output = _run("basis-dump", "-c", basis_config, "-o", tmp_path, "--indices", "3,63")
    assert result.exit_code != 0
    assert "out of range" in output
    result, _ = _run("basis-dump", "-c", basis_config, "-o", tmp_path, "--indices", "three")
    assert result.exit_code == EXIT_CONFIG_ERROR
