"""
von Neumann phase-space lattice, lattice Gaussians, and the frame matrices
G, S = G^dagger G and B = G S^-1 of the contracted (pvb) basis.
"""
# imports from built-in packages
import logging
from dataclasses import dataclass
from typing import Tuple, Union

# imports from external packages (in requirements.txt)
import numpy as np
from scipy.integrate import trapezoid

# imports from same project
from constants import COND_LIMIT, SAMPLING_PERIODIC, SAMPLING_PLAIN
from errors import InvalidArgumentError
from grid_dvr import DvrBasis, theta_matrix
from linalg import solve_hermitian

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class VnLattice:
    """
    Phase-space lattice with one Gaussian per cell of area dx * dp = 2 pi.

    Centers are X_i = x_min + (i + 1/2) dx and P_j = -K/2 + (j + 1/2) dp, stored in
    row-major order n = i * n_p + j.

    Attributes:
        n_x (int): Number of positions.
        n_p (int): Number of momenta.
        x_min (float): Left end of the DVR domain.
        length (float): Domain length.
        k_span (float): Total wavenumber span K = 2 pi N / length.
        periodic (bool): Whether Gaussians are sampled at the nearest periodic image.
        heuristic (bool): Set when the lattice is laid over a non-uniform DVR.
    """
    n_x: int
    n_p: int
    x_min: float
    length: float
    k_span: float
    periodic: bool
    heuristic: bool

    @property
    def size(self) -> int:
        return self.n_x * self.n_p

    @property
    def dx(self) -> float:
        return self.length / self.n_x

    @property
    def dp(self) -> float:
        return self.k_span / self.n_p

    @property
    def alpha(self) -> float:
        return self.dp / (2.0 * self.dx)

    @property
    def positions(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def momenta(self) -> np.ndarray:
        return -0.5 * self.k_span + (np.arange(self.n_p) + 0.5) * self.dp

    @property
    def centers(self) -> np.ndarray:
        """(N, 2) array of (X, P) in lattice order."""
        xs, ps = np.meshgrid(self.positions, self.momenta, indexing="ij")
        return np.column_stack([xs.ravel(), ps.ravel()])

    @property
    def sampling(self) -> str:
        return SAMPLING_PERIODIC if self.periodic else SAMPLING_PLAIN

    def index(self, i: int, j: int) -> int:
        return i * self.n_p + j

    def cell(self, n: int) -> Tuple[int, int]:
        return divmod(n, self.n_p)

    def center(self, n: int) -> Tuple[float, float]:
        i, j = self.cell(n)
        return float(self.positions[i]), float(self.momenta[j])


@dataclass(frozen=True, eq=False)
class FrameMatrices:
    """
    Attributes:
        g (np.ndarray): G[m, n] = sqrt(w_m) g_n(x_m).
        s (np.ndarray): Overlap S = G^dagger G.
        s_inv (np.ndarray): S^-1 (regularized pseudo-inverse when flagged).
        b (np.ndarray): Biorthogonal matrix B = G S^-1, so that B^dagger G = I.
        cond_s (float): Condition number of S.
        regularized (bool): Whether S^-1 came from the truncated pseudo-solve.
        dropped_modes (int): Eigenmodes of S dropped by the regularization.
    """
    g: np.ndarray
    s: np.ndarray
    s_inv: np.ndarray
    b: np.ndarray
    cond_s: float
    regularized: bool
    dropped_modes: int

    @property
    def size(self) -> int:
        return self.g.shape[1]


@dataclass(frozen=True, eq=False)
class ContractedFunction:
    """
    A contracted lattice function g~_n.

    Attributes:
        index (int): Lattice index n.
        samples (np.ndarray): Weighted node samples sqrt(w_m) g_n(x_m) (column n of G).
        node_values (np.ndarray): Unweighted node values g_n(x_m).
        x (np.ndarray): Fine plotting grid over the whole domain, endpoints included.
        trace (np.ndarray): g~_n(x) = sum_m theta_m(x) g_n(x_m) on the fine grid.
    """
    index: int
    samples: np.ndarray
    node_values: np.ndarray
    x: np.ndarray
    trace: np.ndarray


def build_lattice(dvr: DvrBasis, nx: int, np_: int) -> VnLattice:
    """
    Lays the von Neumann lattice over a DVR domain.

    Args:
        dvr (DvrBasis): The DVR; its size must equal nx * np_.
        nx (int): Number of lattice positions.
        np_ (int): Number of lattice momenta.

    Returns:
        VnLattice: The lattice. Non-periodic DVRs get the heuristic flag, since the
            momentum span K = 2 pi N / (b - a) is only exact for a uniform grid.

    Raises:
        InvalidArgumentError: If nx * np_ != N or either factor is below 1.
    """
    if nx < 1 or np_ < 1:
        raise InvalidArgumentError(f"Lattice factors must be at least 1, got Nx={nx}, Np={np_}.")
    if nx * np_ != dvr.size:
        raise InvalidArgumentError(f"Lattice needs Nx * Np = N, got {nx} * {np_} != {dvr.size}.")
    a, b = dvr.domain
    length = b - a
    lattice = VnLattice(
        n_x=int(nx),
        n_p=int(np_),
        x_min=float(a),
        length=float(length),
        k_span=2.0 * np.pi * dvr.size / length,
        periodic=dvr.is_periodic,
        heuristic=not dvr.is_periodic,
    )
    if lattice.heuristic:
        logger.info(f"Lattice {nx}x{np_} over a {dvr.family} DVR uses the heuristic momentum span.")
    return lattice


def _check_index(lat: VnLattice, n: int) -> None:
    if not 0 <= n < lat.size:
        raise InvalidArgumentError(f"Lattice index {n} out of range for N={lat.size}.")


def _gaussian(lat: VnLattice, n: int, displacement: np.ndarray) -> np.ndarray:
    _, p = lat.center(n)
    alpha = lat.alpha
    return (2.0 * alpha / np.pi) ** 0.25 * np.exp(-alpha * displacement ** 2 + 1j * p * displacement)


def _displacement(lat: VnLattice, n: int, x: np.ndarray) -> np.ndarray:
    x_center, _ = lat.center(n)
    d = np.asarray(x, dtype=float) - x_center
    if lat.periodic:
        d = d - lat.length * np.floor(d / lat.length + 0.5)
    return d


def gaussian_value(lat: VnLattice, n: int, x: ArrayLike) -> ArrayLike:
    """
    Evaluates the bare lattice Gaussian
    g_n(x) = (2 alpha / pi)^(1/4) exp(-alpha (x - X_i)^2 + i P_j (x - X_i)).

    Raises:
        InvalidArgumentError: If n is out of range.
    """
    _check_index(lat, n)
    x_center, _ = lat.center(n)
    values = _gaussian(lat, n, np.asarray(x, dtype=float) - x_center)
    return complex(values) if np.ndim(values) == 0 else values


def lattice_gaussian(lat: VnLattice, n: int, x: ArrayLike) -> ArrayLike:
    """
    The lattice Gaussian as the DVR samples it: at the nearest periodic image of x
    for periodic lattices, identical to gaussian_value otherwise.
    """
    _check_index(lat, n)
    values = _gaussian(lat, n, _displacement(lat, n, x))
    return complex(values) if np.ndim(values) == 0 else values


def build_frame_matrix(dvr: DvrBasis, lat: VnLattice, regularize: bool = True) -> FrameMatrices:
    """
    Assembles G, S = G^dagger G, S^-1 and B = G S^-1.

    Args:
        dvr (DvrBasis): The DVR supplying nodes and weights.
        lat (VnLattice): The lattice; its size must equal the DVR size.
        regularize (bool): Allow the truncated pseudo-solve when cond_S > 1e8.

    Returns:
        FrameMatrices: The frame matrices.

    Raises:
        InvalidArgumentError: If sizes disagree.
        IllConditionedFrameError: If S is too ill-conditioned and regularize is False.
    """
    if lat.size != dvr.size:
        raise InvalidArgumentError(f"Lattice size {lat.size} differs from DVR size {dvr.size}.")
    root_weights = np.sqrt(dvr.weights)
    g = np.column_stack([root_weights * lattice_gaussian(lat, n, dvr.points) for n in range(lat.size)])
    s = g.conj().T @ g
    s = 0.5 * (s + s.conj().T)

    solve = solve_hermitian(s, np.eye(lat.size), cond_limit=COND_LIMIT, regularize=regularize)
    s_inv = 0.5 * (solve.solution + solve.solution.conj().T)
    b = g @ s_inv
    logger.info(
        f"Frame {lat.n_x}x{lat.n_p} on {dvr.family}: cond_S = {solve.cond:.3e}"
        + (f", regularized ({solve.dropped_modes} mode(s) dropped)" if solve.regularized else "")
    )
    for array in (g, s, s_inv, b):
        array.setflags(write=False)
    return FrameMatrices(
        g=g,
        s=s,
        s_inv=s_inv,
        b=b,
        cond_s=solve.cond,
        regularized=solve.regularized,
        dropped_modes=solve.dropped_modes,
    )


def contracted_function(dvr: DvrBasis, mat: FrameMatrices, n: int, plot_points: int) -> ContractedFunction:
    """
    Evaluates g~_n(x) = sum_m theta_m(x) g_n(x_m) on a uniform fine grid.

    For the periodic sinc family the trace is L-periodic, so a Gaussian centered near
    the right edge reappears at the left edge.

    Args:
        dvr (DvrBasis): The DVR.
        mat (FrameMatrices): Frame matrices supplying the node samples.
        n (int): Lattice index.
        plot_points (int): Number of fine-grid points, at least 2.

    Returns:
        ContractedFunction: Samples and dense trace.

    Raises:
        InvalidArgumentError: If n is out of range or plot_points < 2.
    """
    if not 0 <= n < mat.size:
        raise InvalidArgumentError(f"Lattice index {n} out of range for N={mat.size}.")
    if plot_points < 2:
        raise InvalidArgumentError(f"Need at least 2 plot points, got {plot_points}.")
    a, b = dvr.domain
    x = np.linspace(a, b, plot_points)
    samples = np.array(mat.g[:, n])
    node_values = samples / np.sqrt(dvr.weights)
    trace = theta_matrix(dvr, x) @ node_values
    return ContractedFunction(index=n, samples=samples, node_values=node_values, x=x, trace=trace)


def lattice_resemblance(dvr: DvrBasis, lat: VnLattice, mat: FrameMatrices, n: int, plot_points: int) -> float:
    """
    Normalized overlap |<g_n|g~_n>| / (|g_n| |g~_n|) on the fine grid.

    This is a per-function shape check. Both DVR families interpolate a Gaussian
    well inside the domain, so interior values are close to 1 either way; whether
    the contracted functions are shifted copies of one another is measured by
    shift_covariance_defect.
    """
    contracted = contracted_function(dvr, mat, n, plot_points)
    reference = lattice_gaussian(lat, n, contracted.x)
    overlap = abs(trapezoid(np.conj(reference) * contracted.trace, contracted.x))
    norm_reference = np.sqrt(trapezoid(np.abs(reference) ** 2, contracted.x))
    norm_trace = np.sqrt(trapezoid(np.abs(contracted.trace) ** 2, contracted.x))
    if norm_reference == 0 or norm_trace == 0:
        return 0.0
    return float(min(1.0, overlap / (norm_reference * norm_trace)))


def shift_covariance_defect(mat: FrameMatrices, lat: VnLattice) -> float:
    """
    Largest deviation of roll(G[:, (i, j)], N / Nx) from G[:, (i + 1, j)] over all
    x-adjacent lattice pairs. Zero (to round-off) for periodic lattices.
    """
    if lat.n_x < 2:
        return 0.0
    shift = lat.size // lat.n_x
    defect = 0.0
    for i in range(lat.n_x - 1):
        for j in range(lat.n_p):
            shifted = np.roll(mat.g[:, lat.index(i, j)], shift)
            defect = max(defect, float(np.max(np.abs(shifted - mat.g[:, lat.index(i + 1, j)]))))
    return defect
