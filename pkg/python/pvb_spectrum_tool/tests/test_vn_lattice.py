import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from errors import InvalidArgumentError
from grid_dvr import build_legendre_dvr, build_periodic_grid, build_sinc_dvr
from vn_lattice import (
    build_frame_matrix,
    build_lattice,
    contracted_function,
    gaussian_value,
    lattice_gaussian,
    lattice_resemblance,
    shift_covariance_defect,
)


def _sinc(x0, length, n):
    return build_sinc_dvr(build_periodic_grid(x0, length, n))


def _factorizations(n):
    return [(d, n // d) for d in range(1, n + 1) if n % d == 0]


def test_lattice_example():
    lat = build_lattice(_sinc(0.0, 8.0, 4), 2, 2)
    assert lat.dx == pytest.approx(4.0)
    assert lat.dp == pytest.approx(math.pi / 2)
    assert lat.dx * lat.dp == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(lat.positions, [2.0, 6.0])
    np.testing.assert_allclose(lat.momenta, [-math.pi / 4, math.pi / 4])
    assert lat.alpha == pytest.approx(math.pi / 16)
    assert lat.center(lat.index(1, 0)) == pytest.approx((6.0, -math.pi / 4))
    assert not lat.heuristic


def test_single_momentum_row_is_centered_at_zero():
    lat = build_lattice(_sinc(0.0, 5.0, 5), 5, 1)
    np.testing.assert_allclose(lat.momenta, [0.0], atol=1e-15)


def test_lattice_rejects_wrong_factorization():
    with pytest.raises(InvalidArgumentError):
        build_lattice(_sinc(0.0, 8.0, 6), 4, 2)
    with pytest.raises(InvalidArgumentError):
        build_lattice(_sinc(0.0, 8.0, 6), 0, 6)


@given(n=st.integers(min_value=2, max_value=256), length=st.floats(min_value=0.5, max_value=100.0))
def test_cell_area_over_all_factorizations(n, length):
    dvr = _sinc(-0.5 * length, length, n)
    for nx, np_ in _factorizations(n):
        lat = build_lattice(dvr, nx, np_)
        assert lat.size == n
        assert lat.alpha > 0
        assert lat.dx * lat.dp == pytest.approx(2 * math.pi, rel=1e-12)
        assert lat.centers.shape == (n, 2)


def test_row_major_ordering():
    lat = build_lattice(_sinc(0.0, 12.0, 12), 3, 4)
    centers = lat.centers
    for n in range(lat.size):
        i, j = lat.cell(n)
        assert n == i * 4 + j
        assert tuple(centers[n]) == pytest.approx((lat.positions[i], lat.momenta[j]))


def test_legendre_lattice_is_heuristic():
    lat = build_lattice(build_legendre_dvr(-1.0, 3.0, 9), 3, 3)
    assert lat.heuristic and not lat.periodic
    assert lat.k_span == pytest.approx(2 * math.pi * 9 / 4.0)


def test_gaussian_value_properties():
    lat = build_lattice(_sinc(-10.0, 20.0, 25), 5, 5)
    n = lat.index(2, 3)
    x_center, _ = lat.center(n)
    peak = (2 * lat.alpha / math.pi) ** 0.25
    assert abs(gaussian_value(lat, n, x_center)) == pytest.approx(peak)
    for d in (0.3, 1.1, 2.7):
        assert abs(gaussian_value(lat, n, x_center + d)) == pytest.approx(abs(gaussian_value(lat, n, x_center - d)))
    x = np.linspace(x_center - 15.0, x_center + 15.0, 20001)
    midpoints = 0.5 * (x[1:] + x[:-1])
    norm = np.sum(np.abs(gaussian_value(lat, n, midpoints)) ** 2) * (x[1] - x[0])
    assert norm == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(InvalidArgumentError):
        gaussian_value(lat, 25, 0.0)


def test_lattice_gaussian_uses_nearest_image():
    lat = build_lattice(_sinc(0.0, 10.0, 5), 5, 1)
    n = lat.index(4, 0)  # centered at 9
    assert lattice_gaussian(lat, n, 0.5) == pytest.approx(gaussian_value(lat, n, 10.5))
    assert lattice_gaussian(lat, n, 8.0) == pytest.approx(gaussian_value(lat, n, 8.0))


def test_frame_example_condition_number():
    dvr = _sinc(-10.0, 20.0, 25)
    mat = build_frame_matrix(dvr, build_lattice(dvr, 5, 5))
    assert np.isfinite(mat.cond_s) and mat.cond_s < 1e6
    assert not mat.regularized
    eigenvalues = np.linalg.eigvalsh(mat.s)
    assert mat.cond_s == pytest.approx(eigenvalues[-1] / eigenvalues[0], rel=1e-6)


def test_frame_with_single_momentum_row_is_real():
    dvr = _sinc(-5.0, 10.0, 15)
    mat = build_frame_matrix(dvr, build_lattice(dvr, 15, 1))
    assert np.max(np.abs(mat.s.imag)) <= 1e-15
    np.testing.assert_allclose(mat.s, mat.s.T, atol=1e-14)


@pytest.mark.parametrize("n", [15, 25, 45, 63])
def test_periodic_frame_structure(n):
    dvr = _sinc(-10.0, 20.0, n)
    checked = 0
    for nx, np_ in _factorizations(n):
        lat = build_lattice(dvr, nx, np_)
        mat = build_frame_matrix(dvr, lat)
        if mat.cond_s >= 1e8:
            continue
        checked += 1
        np.testing.assert_allclose(mat.s, mat.s.conj().T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(mat.s) > 0)
        # Cholesky round-off grows like eps * cond_S
        np.testing.assert_allclose(mat.b.conj().T @ mat.g, np.eye(n), atol=max(1e-10, 1e-13 * mat.cond_s))
        assert np.linalg.matrix_rank(mat.g) == n
        assert shift_covariance_defect(mat, lat) <= 1e-10
        # modulation covariance: neighbouring momenta differ by exp(i dp (x_m - X_i))
        for i in range(nx):
            for j in range(np_ - 1):
                x_center, _ = lat.center(lat.index(i, j))
                phase = np.exp(1j * lat.dp * (dvr.points - x_center))
                np.testing.assert_allclose(
                    mat.g[:, lat.index(i, j + 1)], mat.g[:, lat.index(i, j)] * phase, atol=1e-10
                )
    assert checked > 0


def test_even_size_periodic_frame_is_flagged():
    # half-cell offsets put the zero of the sampled Gaussian's Zak transform on the grid for even N
    dvr = _sinc(-10.0, 20.0, 16)
    mat = build_frame_matrix(dvr, build_lattice(dvr, 4, 4))
    assert mat.regularized
    assert mat.cond_s > 1e8


def test_interior_column_norm_is_close_to_one(harmonic_63):
    _, lat, mat = harmonic_63
    n = lat.index(3, 4)
    assert np.linalg.norm(mat.g[:, n]) == pytest.approx(1.0, rel=0.1)


def test_contracted_function_reproduces_node_values(harmonic_63):
    h, lat, mat = harmonic_63
    dvr = h.dvr
    n = lat.index(2, 5)
    traced = contracted_function(dvr, mat, n, 11)
    np.testing.assert_allclose(traced.samples, mat.g[:, n])
    np.testing.assert_allclose(traced.node_values, lattice_gaussian(lat, n, dvr.points), atol=1e-12)
    node_trace = contracted_function(dvr, mat, n, 2)
    assert node_trace.x[0] == dvr.domain[0] and node_trace.x[-1] == dvr.domain[1]
    # a two-point fine grid holds only the domain ends, both node 0 modulo L
    assert node_trace.trace[0] == pytest.approx(traced.node_values[0], abs=1e-10)


def test_contracted_function_wraps_around_the_boundary(harmonic_63):
    h, lat, mat = harmonic_63
    dvr = h.dvr
    n = lat.index(lat.n_x - 1, lat.n_p // 2)
    x_center, _ = lat.center(n)
    assert dvr.domain[1] - x_center < lat.dx
    traced = contracted_function(dvr, mat, n, 801)
    assert traced.trace[0] == pytest.approx(traced.trace[-1], abs=1e-10)
    left = traced.x < dvr.domain[0] + 0.1 * dvr.length
    peak = (2 * lat.alpha / math.pi) ** 0.25
    assert np.max(np.abs(traced.trace[left])) > 1e-3 * peak


def test_contracted_function_rejects_bad_arguments(harmonic_63):
    h, _, mat = harmonic_63
    with pytest.raises(InvalidArgumentError):
        contracted_function(h.dvr, mat, 63, 10)
    with pytest.raises(InvalidArgumentError):
        contracted_function(h.dvr, mat, 0, 1)


def test_resemblance_is_high_for_periodic_sinc(harmonic_63):
    h, lat, mat = harmonic_63
    value = lattice_resemblance(h.dvr, lat, mat, lat.index(3, 4), 801)
    assert 0.99 < value <= 1.0


def test_legendre_frame_is_biorthogonal_when_well_conditioned():
    dvr = build_legendre_dvr(-10.0, 10.0, 9)
    lat = build_lattice(dvr, 9, 1)
    mat = build_frame_matrix(dvr, lat)
    assert mat.cond_s < 1e8
    np.testing.assert_allclose(mat.b.conj().T @ mat.g, np.eye(9), atol=1e-10)
    assert shift_covariance_defect(mat, lat) > 1e-6


def test_legendre_functions_keep_their_shape_but_are_not_shifted_copies(harmonic_63):
    h, periodic_lat, periodic_mat = harmonic_63
    assert shift_covariance_defect(periodic_mat, periodic_lat) <= 1e-10
    assert lattice_resemblance(h.dvr, periodic_lat, periodic_mat, periodic_lat.index(3, 4), 801) > 0.99

    dvr = build_legendre_dvr(-10.0, 10.0, 25)
    lat = build_lattice(dvr, 5, 5)
    mat = build_frame_matrix(dvr, lat)
    assert lat.heuristic
    assert shift_covariance_defect(mat, lat) > 1e-6
    # interpolation still follows a Gaussian that sits in the middle of the interval
    assert lattice_resemblance(dvr, lat, mat, lat.index(2, 2), 801) > 0.99
