# imports from built-in packages
import logging
import math
from dataclasses import dataclass
from typing import Optional

# imports from external packages (in requirements.txt)
import numpy as np

# imports from same project
from constants import (
    DIRECT_DVR,
    MAX_TRACKED_PRUNED_LEVELS,
    PRUNE_ALL,
    PRUNE_ENERGY_SHELL,
    PRUNE_STRATEGIES,
    PRUNE_TOP_K,
    PVB_BIORTH_BOTH,
    PVB_BIORTH_LEFT,
    PVB_REPRESENTATIONS,
    PVB_SYMMETRIC,
)
from errors import EmptyMaskError, InvalidArgumentError
from linalg import Spectrum, eig_left, eigh, eigh_generalized
from operators import HamiltonianMatrix, PotentialModel
from vn_lattice import FrameMatrices, VnLattice

logger = logging.getLogger(__name__)

REPRESENTATIONS = [DIRECT_DVR] + PVB_REPRESENTATIONS


@dataclass(frozen=True)
class PruneStrategy:
    """
    Rule for selecting retained lattice functions.

    Attributes:
        kind (str): PRUNE_ALL, PRUNE_ENERGY_SHELL or PRUNE_TOP_K.
        parameter (float, optional): E_cut for energy shells (inf allowed), k for top-k.
    """
    kind: str = PRUNE_ALL
    parameter: Optional[float] = None

    def __post_init__(self):
        if self.kind not in PRUNE_STRATEGIES:
            raise InvalidArgumentError(f"Unknown prune strategy '{self.kind}', expected one of {PRUNE_STRATEGIES}.")
        if self.kind == PRUNE_ENERGY_SHELL:
            if self.parameter is None or math.isnan(self.parameter):
                raise InvalidArgumentError("Energy-shell pruning needs a cutoff energy.")
        if self.kind == PRUNE_TOP_K:
            if self.parameter is None or self.parameter < 1 or int(self.parameter) != self.parameter:
                raise InvalidArgumentError(f"Top-k pruning needs an integer k >= 1, got {self.parameter}.")

    @property
    def label(self) -> str:
        if self.kind == PRUNE_ALL:
            return PRUNE_ALL
        return f"{self.kind}({self.parameter:g})"


@dataclass(frozen=True, eq=False)
class PruneMask:
    """
    Retained lattice indices.

    Attributes:
        retained (np.ndarray): Sorted unique indices into the lattice columns.
        size (int): Lattice size N.
        strategy (PruneStrategy): The rule that produced the mask.
    """
    retained: np.ndarray
    size: int
    strategy: PruneStrategy

    @property
    def fraction(self) -> float:
        return len(self.retained) / self.size

    @property
    def count(self) -> int:
        return len(self.retained)


def full_mask(size: int) -> PruneMask:
    return PruneMask(retained=np.arange(size), size=size, strategy=PruneStrategy())


def solve_direct(h: HamiltonianMatrix) -> Spectrum:
    """Diagonalizes H directly in the DVR (the grid reference spectrum)."""
    spectrum = eigh(h.matrix)
    spectrum.meta.update({"representation": DIRECT_DVR, "size": h.size, "fraction": 1.0})
    return spectrum


def shell_energies(lat: VnLattice, model: PotentialModel, mass: float) -> np.ndarray:
    """Classical energy P^2 / 2m + V(X) of every lattice center, in lattice order."""
    if not mass > 0:
        raise InvalidArgumentError(f"Mass must be positive, got {mass}.")
    centers = lat.centers
    return centers[:, 1] ** 2 / (2.0 * mass) + model.evaluate(centers[:, 0])


def build_mask(lat: VnLattice, model: PotentialModel, mass: float, strategy: PruneStrategy) -> PruneMask:
    """
    Selects lattice functions by classical shell energy.

    Args:
        lat (VnLattice): The lattice.
        model (PotentialModel): The potential scoring each center.
        mass (float): Particle mass.
        strategy (PruneStrategy): All, EnergyShell(E_cut) or TopK(k); top-k ties are
            broken by ascending lattice index.

    Returns:
        PruneMask: The mask.

    Raises:
        EmptyMaskError: If nothing is retained.
        InvalidArgumentError: If k exceeds the lattice size.
    """
    if strategy.kind == PRUNE_ALL:
        return PruneMask(retained=np.arange(lat.size), size=lat.size, strategy=strategy)

    energies = shell_energies(lat, model, mass)
    if strategy.kind == PRUNE_ENERGY_SHELL:
        retained = np.flatnonzero(energies <= strategy.parameter)
    else:
        k = int(strategy.parameter)
        if k > lat.size:
            raise InvalidArgumentError(f"Top-k pruning with k={k} exceeds lattice size {lat.size}.")
        retained = np.sort(np.argsort(energies, kind="stable")[:k])

    if len(retained) == 0:
        raise EmptyMaskError(
            f"Strategy {strategy.label} retains no lattice function "
            f"(minimum shell energy {energies.min():.6g})."
        )
    logger.debug(f"Mask {strategy.label}: {len(retained)}/{lat.size} retained.")
    return PruneMask(retained=retained, size=lat.size, strategy=strategy)


def _hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def solve_pvb(h: HamiltonianMatrix, mat: FrameMatrices, mask: PruneMask, rep: str) -> Spectrum:
    """
    Solves H in the (possibly pruned) contracted lattice basis.

    With G_M the retained columns of G and S_M = G_M^dagger G_M:
        - PVB_SYMMETRIC:   G_M^dagger H G_M c = E S_M c
        - PVB_BIORTH_LEFT: eigenvalues of S_M^-1 G_M^dagger H G_M (real parts)
        - PVB_BIORTH_BOTH: (S^-1 G^dagger)_M H (G S^-1)_M c = E (S^-1)_MM c, with S^-1
          taken from the full overlap before restriction (invert-then-prune).

    Args:
        h (HamiltonianMatrix): The DVR Hamiltonian.
        mat (FrameMatrices): Frame matrices over the same DVR.
        mask (PruneMask): Retained lattice functions.
        rep (str): One of the pvb representations.

    Returns:
        Spectrum: |retained| levels tagged with the representation.

    Raises:
        InvalidArgumentError: For inconsistent sizes or an unknown representation.
        MetricSingularError: If the pruned metric is not positive definite.
    """
    if rep not in PVB_REPRESENTATIONS:
        raise InvalidArgumentError(f"solve_pvb needs one of {PVB_REPRESENTATIONS}, got '{rep}'.")
    if mat.g.shape[0] != h.size or mask.size != mat.size:
        raise InvalidArgumentError(
            f"Inconsistent sizes: H is {h.size}, G is {mat.g.shape}, mask covers {mask.size}."
        )

    retained = mask.retained
    if rep == PVB_BIORTH_BOTH:
        b_m = mat.b[:, retained]
        projected = _hermitian_part(b_m.conj().T @ h.matrix @ b_m)
        metric = _hermitian_part(mat.s_inv[np.ix_(retained, retained)])
        spectrum = eigh_generalized(projected, metric)
    else:
        g_m = mat.g[:, retained]
        projected = _hermitian_part(g_m.conj().T @ h.matrix @ g_m)
        metric = _hermitian_part(g_m.conj().T @ g_m)
        if rep == PVB_SYMMETRIC:
            spectrum = eigh_generalized(projected, metric)
        elif rep == PVB_BIORTH_LEFT:
            spectrum = eig_left(projected, metric)
            if spectrum.meta["max_imag"] > 1e-8 * max(1.0, h.norm):
                logger.warning(f"Left-biorthogonal spectrum has |Im| up to {spectrum.meta['max_imag']:.3e}.")

    spectrum.meta.update({
        "representation": rep,
        "size": mask.count,
        "lattice_size": mask.size,
        "fraction": mask.fraction,
        "cond_s": mat.cond_s,
        "regularized": mat.regularized,
        "strategy": mask.strategy.label,
    })
    return spectrum


def compare_spectra(a: Spectrum, b: Spectrum, count: int) -> np.ndarray:
    """
    Per-level absolute errors |a_i - b_i| of the lowest `count` levels after sorting.

    Raises:
        InvalidArgumentError: If either spectrum has fewer than `count` levels.
    """
    if count < 0 or count > len(a) or count > len(b):
        raise InvalidArgumentError(
            f"Cannot compare {count} levels of spectra with {len(a)} and {len(b)} levels."
        )
    return np.abs(np.sort(a.values)[:count] - np.sort(b.values)[:count])


def max_multiset_deviation(a: Spectrum, b: Spectrum) -> float:
    """Largest per-level deviation over the common length of two spectra."""
    count = min(len(a), len(b))
    return float(np.max(compare_spectra(a, b, count), initial=0.0))


def tracked_level_count(retained: int, requested: Optional[int] = None) -> int:
    """Levels compared for a pruned spectrum: min(5, max(1, retained // 4)) unless requested."""
    if requested is not None:
        return min(requested, retained)
    return min(MAX_TRACKED_PRUNED_LEVELS, max(1, retained // 4))
