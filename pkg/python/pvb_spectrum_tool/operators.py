# imports from built-in packages
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple, Union

# imports from external packages (in requirements.txt)
import numpy as np

# imports from same project
from constants import DEFAULT_DOMAINS, DOUBLE_WELL, HARMONIC, MORSE
from errors import InvalidArgumentError, NotAvailableError
from grid_dvr import DvrBasis, kinetic_matrix

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class PotentialModel(ABC):
    """Base class of the one-dimensional test potentials. Models are mass-free."""

    kind: str = ""

    @abstractmethod
    def evaluate(self, x: ArrayLike) -> ArrayLike:
        pass

    @abstractmethod
    def parameters(self) -> dict:
        pass


@dataclass(frozen=True)
class HarmonicPotential(PotentialModel):
    """V(x) = omega^2 x^2 / 2. The mass enters only through the kinetic energy."""
    omega: float = 1.0
    kind = HARMONIC

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidArgumentError(f"Harmonic omega must be positive, got {self.omega}.")

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        return 0.5 * self.omega ** 2 * np.asarray(x) ** 2

    def parameters(self) -> dict:
        return {"omega": self.omega}


@dataclass(frozen=True)
class MorsePotential(PotentialModel):
    """V(x) = D (1 - exp(-a (x - x_e)))^2."""
    depth: float = 10.0
    alpha: float = 1.0
    x_e: float = 0.0
    kind = MORSE

    def __post_init__(self):
        if not self.depth > 0:
            raise InvalidArgumentError(f"Morse depth must be positive, got {self.depth}.")
        if not self.alpha > 0:
            raise InvalidArgumentError(f"Morse range parameter must be positive, got {self.alpha}.")

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        return self.depth * (1.0 - np.exp(-self.alpha * (np.asarray(x) - self.x_e))) ** 2

    def parameters(self) -> dict:
        return {"depth": self.depth, "alpha": self.alpha, "x_e": self.x_e}


@dataclass(frozen=True)
class QuarticDoubleWell(PotentialModel):
    """V(x) = -c2 x^2 + c4 x^4."""
    c2: float = 1.0
    c4: float = 0.1
    kind = DOUBLE_WELL

    def __post_init__(self):
        if not self.c4 > 0:
            raise InvalidArgumentError(f"Double-well quartic coefficient must be positive, got {self.c4}.")

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x)
        return -self.c2 * x ** 2 + self.c4 * x ** 4

    def parameters(self) -> dict:
        return {"c2": self.c2, "c4": self.c4}


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """
    H = T + diag(V(x_m)) in a DVR.

    Attributes:
        matrix (np.ndarray): The Hermitian N x N matrix.
        dvr (DvrBasis): The DVR the matrix lives in.
        model (PotentialModel): The potential.
        mass (float): Particle mass.
    """
    matrix: np.ndarray
    dvr: DvrBasis
    model: PotentialModel
    mass: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def norm(self) -> float:
        """Max-abs norm used to scale spectral tolerances."""
        return float(np.max(np.abs(self.matrix)))


def eval_potential(model: PotentialModel, x: ArrayLike) -> ArrayLike:
    return model.evaluate(x)


def default_domain(model: PotentialModel) -> Tuple[float, float]:
    """Returns the default (a, b) domain for the model kind."""
    return DEFAULT_DOMAINS[model.kind]


def bound_state_count(model: MorsePotential, mass: float) -> int:
    """
    Number of Morse levels below the dissociation limit: floor(lambda - 1/2) + 1
    with lambda = sqrt(2 m D) / a.
    """
    if not isinstance(model, MorsePotential):
        raise NotAvailableError(f"Bound-state count is only available for Morse, not {model.kind}.")
    well_parameter = math.sqrt(2.0 * mass * model.depth) / model.alpha
    return max(0, math.floor(well_parameter - 0.5) + 1)


def analytic_levels(model: PotentialModel, mass: float, count: int) -> np.ndarray:
    """
    Returns the lowest closed-form eigenvalues of the model.

    For the harmonic model the potential is omega^2 x^2 / 2 independent of mass,
    so the oscillator frequency seen with mass m is omega / sqrt(m).

    Args:
        model (PotentialModel): A HarmonicPotential or MorsePotential.
        mass (float): Particle mass.
        count (int): Number of levels.

    Returns:
        np.ndarray: Ascending energies.

    Raises:
        NotAvailableError: For models without a closed form.
        InvalidArgumentError: If count exceeds the Morse bound-state count or mass <= 0.
    """
    if not mass > 0:
        raise InvalidArgumentError(f"Mass must be positive, got {mass}.")
    n = np.arange(count) + 0.5
    if isinstance(model, HarmonicPotential):
        return model.omega / math.sqrt(mass) * n
    if isinstance(model, MorsePotential):
        bound = bound_state_count(model, mass)
        if count > bound:
            raise InvalidArgumentError(f"Morse model supports {bound} bound states, {count} requested.")
        omega0 = model.alpha * math.sqrt(2.0 * model.depth / mass)
        return omega0 * n - (omega0 * n) ** 2 / (4.0 * model.depth)
    raise NotAvailableError(f"No analytic levels for model kind '{model.kind}'.")


def build_hamiltonian(dvr: DvrBasis, model: PotentialModel, mass: float) -> HamiltonianMatrix:
    """
    Assembles H = T(dvr, mass) + diag(V(x_m)).

    Args:
        dvr (DvrBasis): The DVR.
        model (PotentialModel): The potential.
        mass (float): Particle mass, must be positive.

    Returns:
        HamiltonianMatrix: The Hamiltonian.
    """
    matrix = kinetic_matrix(dvr, mass).copy()
    matrix[np.diag_indices_from(matrix)] += model.evaluate(dvr.points)
    matrix.setflags(write=False)
    logger.debug(f"Built {model.kind} Hamiltonian on {dvr.family} DVR with N={dvr.size}.")
    return HamiltonianMatrix(matrix=matrix, dvr=dvr, model=model, mass=float(mass))
