"""
Quadrature grids and DVR bases: the periodic sinc (Fourier grid) family and the
Gauss-Legendre family. Every constructor is a pure function; produced arrays are
marked read-only.
"""
# imports from built-in packages
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

# imports from external packages (in requirements.txt)
import numpy as np
from numpy.polynomial import legendre

# imports from same project
from constants import GAUSS_LEGENDRE, LEGENDRE_RULE, PERIODIC_SINC
from errors import DomainError, InvalidArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Grid:
    """
    Uniform periodic grid x_m = x0 + m * L / N, m = 0..N-1.

    Attributes:
        x0 (float): Left end of the periodic cell.
        length (float): Cell length L (> 0).
        n (int): Number of points N (>= 1).
    """
    x0: float
    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgumentError(f"Grid length must be positive, got {self.length}.")
        if self.n < 1:
            raise InvalidArgumentError(f"Grid point count must be positive, got {self.n}.")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def weight(self) -> float:
        return self.length / self.n

    @property
    def points(self) -> np.ndarray:
        return _frozen(self.x0 + np.arange(self.n) * self.spacing)

    @property
    def mode_indices(self) -> np.ndarray:
        """
        Integer wavenumber indices j with k_j = 2*pi*j / L.

        Odd N gives the symmetric set -(N-1)/2..(N-1)/2. Even N adds the Nyquist
        index N/2 once; it only ever enters through cos(k d), which is the
        symmetric split of the Nyquist mode.
        """
        return np.arange(-((self.n - 1) // 2), self.n // 2 + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        return _frozen(2.0 * np.pi * self.mode_indices / self.length)


@dataclass(frozen=True, eq=False)
class DvrBasis:
    """
    A one-dimensional DVR: cardinal functions theta_m with theta_m(x_m') = delta_mm'.

    Attributes:
        family (str): PERIODIC_SINC or GAUSS_LEGENDRE.
        points (np.ndarray): Quadrature nodes x_m.
        weights (np.ndarray): Quadrature weights w_m.
        domain (Tuple[float, float]): Interval (a, b); for the periodic family b = a + L.
        kinetic_unit_mass (np.ndarray): Kinetic matrix for mass 1 (scale by 1/mass).
        grid (Grid, optional): The periodic grid backing a PERIODIC_SINC basis.
        fbr_transform (np.ndarray, optional): U[j, m] = sqrt(w_m) * P~_j(x_m) for GAUSS_LEGENDRE.
        rule (str): Quadrature rule label recorded as metadata.
    """
    family: str
    points: np.ndarray
    weights: np.ndarray
    domain: Tuple[float, float]
    kinetic_unit_mass: np.ndarray
    grid: Optional[Grid] = None
    fbr_transform: Optional[np.ndarray] = None
    rule: str = field(default="uniform")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def is_periodic(self) -> bool:
        return self.family == PERIODIC_SINC


def build_periodic_grid(x0: float, length: float, n: int) -> Grid:
    """
    Builds the uniform periodic grid used by the periodic sinc DVR.

    Args:
        x0 (float): Left end of the periodic cell.
        length (float): Cell length L, must be positive.
        n (int): Number of points, at least 2. Odd N is the default parity; even N
            is accepted and handled with the symmetric Nyquist split.

    Returns:
        Grid: The grid.

    Raises:
        InvalidArgumentError: If L <= 0 or N < 2.
    """
    if not length > 0:
        raise InvalidArgumentError(f"Grid length must be positive, got {length}.")
    if n < 2:
        raise InvalidArgumentError(f"A periodic grid needs at least 2 points, got {n}.")
    if n % 2 == 0:
        logger.debug(f"Even point count N={n}: Nyquist mode split symmetrically (cos only).")
    return Grid(x0=float(x0), length=float(length), n=int(n))


def sinc_dvr_theta(grid: Grid, m: int, x: ArrayLike) -> ArrayLike:
    """
    Evaluates the periodic sinc (normalized Dirichlet kernel) function theta_m.

    theta_m(x) = (1/N) * sum_k exp(i k (x - x_m)) over the symmetric wavenumber set,
    which is real and L-periodic.

    Args:
        grid (Grid): The periodic grid.
        m (int): Node index, 0 <= m < N.
        x (float or np.ndarray): Position(s).

    Returns:
        float or np.ndarray: theta_m(x), same shape as x.

    Raises:
        InvalidArgumentError: If m is out of range.
    """
    if not 0 <= m < grid.n:
        raise InvalidArgumentError(f"Node index {m} out of range for N={grid.n}.")
    x_arr = np.asarray(x, dtype=float)
    displacement = x_arr - grid.points[m]
    values = np.cos(np.multiply.outer(displacement, grid.wavenumbers)).sum(axis=-1) / grid.n
    return float(values) if values.ndim == 0 else values


def build_fgh_kinetic(grid: Grid, mass: float) -> np.ndarray:
    """
    Builds the Fourier grid kinetic matrix T = F^dagger diag(k^2 / 2m) F.

    Args:
        grid (Grid): The periodic grid.
        mass (float): Particle mass, must be positive.

    Returns:
        np.ndarray: Real symmetric N x N kinetic matrix.

    Raises:
        InvalidArgumentError: If mass <= 0.
    """
    if not mass > 0:
        raise InvalidArgumentError(f"Mass must be positive, got {mass}.")
    k = grid.wavenumbers
    fourier = np.exp(-1j * np.outer(k, grid.points)) / np.sqrt(grid.n)
    energies = k ** 2 / (2.0 * mass)
    kinetic = fourier.conj().T @ (energies[:, None] * fourier)
    # the symmetric mode set makes the product real up to round-off
    kinetic = kinetic.real
    return _frozen(0.5 * (kinetic + kinetic.T))


def build_sinc_dvr(grid: Grid) -> DvrBasis:
    """
    Wraps a periodic grid as a DvrBasis with uniform weights L/N.

    Args:
        grid (Grid): The periodic grid.

    Returns:
        DvrBasis: The periodic sinc DVR.
    """
    weights = np.full(grid.n, grid.weight)
    return DvrBasis(
        family=PERIODIC_SINC,
        points=grid.points,
        weights=_frozen(weights),
        domain=(grid.x0, grid.x0 + grid.length),
        kinetic_unit_mass=build_fgh_kinetic(grid, 1.0),
        grid=grid,
        rule="uniform",
    )


def build_legendre_dvr(a: float, b: float, n: int) -> DvrBasis:
    """
    Builds the Gauss-Legendre DVR on [a, b].

    The kinetic matrix is assembled in the orthonormal Legendre FBR by Gauss
    quadrature of P~_i' P~_j' (exact, the integrand has degree 2N - 4) and then
    transformed to the DVR with U.

    Args:
        a (float): Left end of the domain.
        b (float): Right end of the domain, b > a.
        n (int): Number of nodes, at least 2.

    Returns:
        DvrBasis: The Gauss-Legendre DVR.

    Raises:
        InvalidArgumentError: If b <= a or N < 2.
    """
    if not b > a:
        raise InvalidArgumentError(f"Legendre domain needs b > a, got ({a}, {b}).")
    if n < 2:
        raise InvalidArgumentError(f"A Legendre DVR needs at least 2 nodes, got {n}.")

    reference_nodes, reference_weights = legendre.leggauss(n)
    half = 0.5 * (b - a)
    middle = 0.5 * (a + b)
    points = middle + half * reference_nodes
    weights = half * reference_weights

    norms = np.sqrt((2.0 * np.arange(n) + 1.0) / (b - a))
    p_tilde = legendre.legvander(reference_nodes, n - 1) * norms  # [m, j]
    fbr_transform = (np.sqrt(weights)[:, None] * p_tilde).T  # [j, m]

    derivatives = np.empty((n, n))
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        derivatives[:, j] = legendre.legval(reference_nodes, legendre.legder(unit)) * norms[j] / half

    kinetic_fbr = 0.5 * derivatives.T @ (weights[:, None] * derivatives)
    kinetic_dvr = fbr_transform.T @ kinetic_fbr @ fbr_transform
    kinetic_dvr = 0.5 * (kinetic_dvr + kinetic_dvr.T)

    logger.debug(f"Built Gauss-Legendre DVR with N={n} on ({a}, {b}).")
    return DvrBasis(
        family=GAUSS_LEGENDRE,
        points=_frozen(points),
        weights=_frozen(weights),
        domain=(float(a), float(b)),
        kinetic_unit_mass=_frozen(kinetic_dvr),
        fbr_transform=_frozen(fbr_transform),
        rule=LEGENDRE_RULE,
    )


def _legendre_theta(basis: DvrBasis, m: int, x: np.ndarray) -> np.ndarray:
    a, b = basis.domain
    if np.any(x < a) or np.any(x > b):
        raise DomainError(f"Legendre DVR function evaluated outside [{a}, {b}].")
    n = basis.size
    norms = np.sqrt((2.0 * np.arange(n) + 1.0) / (b - a))
    reference = (x - 0.5 * (a + b)) / (0.5 * (b - a))
    p_tilde = legendre.legvander(reference, n - 1) * norms
    return np.sqrt(basis.weights[m]) * (p_tilde @ basis.fbr_transform[:, m])


def dvr_theta_eval(basis: DvrBasis, m: int, x: ArrayLike) -> ArrayLike:
    """
    Evaluates the cardinal function theta_m of any DVR family.

    Args:
        basis (DvrBasis): The DVR.
        m (int): Node index, 0 <= m < N.
        x (float or np.ndarray): Position(s). Periodic bases accept any x.

    Returns:
        float or np.ndarray: theta_m(x), with theta_m(x_m') = delta_mm'.

    Raises:
        InvalidArgumentError: If m is out of range.
        DomainError: If x lies outside [a, b] for the Gauss-Legendre family.
    """
    if not 0 <= m < basis.size:
        raise InvalidArgumentError(f"Node index {m} out of range for N={basis.size}.")
    if basis.family == PERIODIC_SINC:
        return sinc_dvr_theta(basis.grid, m, x)
    x_arr = np.asarray(x, dtype=float)
    values = _legendre_theta(basis, m, np.atleast_1d(x_arr))
    return float(values[0]) if x_arr.ndim == 0 else values.reshape(x_arr.shape)


def theta_matrix(basis: DvrBasis, x: np.ndarray) -> np.ndarray:
    """Returns the matrix [theta_m(x_k)] with shape (len(x), N)."""
    x = np.asarray(x, dtype=float)
    return np.column_stack([np.atleast_1d(dvr_theta_eval(basis, m, x)) for m in range(basis.size)])


def kinetic_matrix(basis: DvrBasis, mass: float) -> np.ndarray:
    """
    Returns the kinetic matrix of the DVR for the given mass.

    Raises:
        InvalidArgumentError: If mass <= 0.
    """
    if not mass > 0:
        raise InvalidArgumentError(f"Mass must be positive, got {mass}.")
    return basis.kinetic_unit_mass / mass
