"""
Dense eigensolvers and Hermitian solves used by every representation.
All routines are double precision and stateless.
"""
# imports from built-in packages
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

# imports from external packages (in requirements.txt)
import numpy as np
import scipy.linalg

# imports from same project
from constants import COND_LIMIT, HERMITIAN_TOLERANCE, METRIC_PD_CUTOFF, REGULARIZATION_CUTOFF
from errors import IllConditionedFrameError, InvalidArgumentError, MetricSingularError

logger = logging.getLogger(__name__)


@dataclass
class Spectrum:
    """
    Ascending real eigenvalues with optional coefficient columns.

    Attributes:
        values (np.ndarray): Sorted eigenvalues.
        vectors (np.ndarray, optional): Coefficient columns matching `values`, normalized in
            the metric of the pencil that produced them (unit 2-norm for eig_general).
        meta (dict): Representation tag, sizes, cond_S, prune fraction, max |Im|, ...
    """
    values: np.ndarray
    vectors: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class HermitianSolve:
    """Result of solve_hermitian: the solution plus regularization bookkeeping."""
    solution: np.ndarray
    cond: float
    regularized: bool = False
    dropped_modes: int = 0


def _check_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {a.shape}.")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} has non-finite entries.")
    return a


def _check_hermitian(a: np.ndarray, name: str) -> np.ndarray:
    a = _check_square(a, name)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOLERANCE * scale:
        raise InvalidArgumentError(f"{name} is not Hermitian within {HERMITIAN_TOLERANCE:g} relative.")
    return 0.5 * (a + a.conj().T)


def _metric_eigenvalues(m: np.ndarray) -> np.ndarray:
    return scipy.linalg.eigvalsh(m)


def _check_metric(m: np.ndarray) -> Tuple[float, float]:
    metric_values = _metric_eigenvalues(m)
    lambda_min, lambda_max = float(metric_values[0]), float(metric_values[-1])
    if not lambda_max > 0 or lambda_min <= METRIC_PD_CUTOFF * lambda_max:
        raise MetricSingularError("Metric is not positive definite", lambda_min)
    return lambda_min, lambda_max


def eigh(a: np.ndarray) -> Spectrum:
    """
    Eigen-decomposition of a Hermitian matrix.

    Raises:
        InvalidArgumentError: If the input is not Hermitian.
    """
    a = _check_hermitian(a, "A")
    values, vectors = scipy.linalg.eigh(a)
    return Spectrum(values=values, vectors=vectors, meta={"size": a.shape[0]})


def eigh_generalized(a: np.ndarray, m: np.ndarray) -> Spectrum:
    """
    Solves A c = E M c for Hermitian A and Hermitian positive definite M.

    The pencil is reduced by the Cholesky factor of M (LAPACK hegv); eigenvectors
    come back M-normalized.

    Raises:
        InvalidArgumentError: If A or M is not Hermitian or shapes differ.
        MetricSingularError: If M is not positive definite.
    """
    a = _check_hermitian(a, "A")
    m = _check_hermitian(m, "M")
    if a.shape != m.shape:
        raise InvalidArgumentError(f"Pencil shapes differ: {a.shape} vs {m.shape}.")
    lambda_min, lambda_max = _check_metric(m)
    try:
        values, vectors = scipy.linalg.eigh(a, m)
    except np.linalg.LinAlgError as e:
        raise MetricSingularError(f"Cholesky reduction failed: {e}", lambda_min) from e
    return Spectrum(
        values=values,
        vectors=vectors,
        meta={"size": a.shape[0], "metric_cond": float(lambda_max / lambda_min)},
    )


def eig_general(a: np.ndarray) -> Spectrum:
    """
    Eigenvalues of a general square matrix.

    The spectrum keeps the ascending real parts; the largest discarded |Im lambda|
    is recorded in meta["max_imag"] and the caller decides whether it is acceptable.
    """
    a = _check_square(a, "A")
    values, vectors = scipy.linalg.eig(a)
    order = np.argsort(values.real, kind="stable")
    max_imag = float(np.max(np.abs(values.imag), initial=0.0))
    return Spectrum(
        values=values.real[order],
        vectors=vectors[:, order],
        meta={"size": a.shape[0], "max_imag": max_imag},
    )


def eig_left(a: np.ndarray, m: np.ndarray) -> Spectrum:
    """
    Eigenvalues of M^-1 A for Hermitian A and Hermitian positive definite M.

    M passes the same positive-definiteness check as in eigh_generalized before it
    is solved against. The right eigenvectors of M^-1 A also solve A c = E M c, so
    they are rescaled to c^dagger M c = 1.

    Raises:
        InvalidArgumentError: If A or M is not Hermitian or shapes differ.
        MetricSingularError: If M is not positive definite.
    """
    a = _check_hermitian(a, "A")
    m = _check_hermitian(m, "M")
    if a.shape != m.shape:
        raise InvalidArgumentError(f"Pencil shapes differ: {a.shape} vs {m.shape}.")
    lambda_min, lambda_max = _check_metric(m)
    try:
        reduced = scipy.linalg.solve(m, a, assume_a="pos")
    except np.linalg.LinAlgError as e:
        raise MetricSingularError(f"Positive definite solve failed: {e}", lambda_min) from e
    spectrum = eig_general(reduced)
    vectors = spectrum.vectors
    metric_norms = np.sqrt(np.abs(np.einsum("ij,ik,kj->j", vectors.conj(), m, vectors)))
    spectrum.vectors = vectors / metric_norms
    spectrum.meta["metric_cond"] = lambda_max / lambda_min
    return spectrum


def condition_number(s: np.ndarray) -> float:
    """
    lambda_max / lambda_min of a Hermitian positive definite matrix.

    Raises:
        MetricSingularError: If S is not positive definite.
    """
    s = _check_hermitian(s, "S")
    values = _metric_eigenvalues(s)
    if not values[0] > 0:
        raise MetricSingularError("Matrix is not positive definite", float(values[0]))
    return float(values[-1] / values[0])


def solve_hermitian(
    s: np.ndarray,
    rhs: np.ndarray,
    cond_limit: float = COND_LIMIT,
    regularize: bool = True,
) -> HermitianSolve:
    """
    Solves S X = RHS for Hermitian positive (semi)definite S.

    Well-conditioned systems (cond_S <= cond_limit) go through a Cholesky solve.
    Otherwise, when `regularize` is set, eigenvalues below 1e-12 * lambda_max are
    dropped and the truncated pseudo-solve is returned with the dropped count.

    Args:
        s (np.ndarray): Hermitian matrix.
        rhs (np.ndarray): Right-hand side (vector or matrix).
        cond_limit (float): Condition number above which Cholesky is not trusted.
        regularize (bool): Whether to fall back to the truncated pseudo-solve.

    Returns:
        HermitianSolve: Solution, condition number and regularization bookkeeping.

    Raises:
        IllConditionedFrameError: If S is too ill-conditioned and regularization is off.
    """
    s = _check_hermitian(s, "S")
    values, vectors = scipy.linalg.eigh(s)
    lambda_max = values[-1]
    if not lambda_max > 0:
        raise IllConditionedFrameError("Overlap matrix has no positive eigenvalue", float("inf"))
    cond = float(lambda_max / values[0]) if values[0] > 0 else float("inf")

    if cond <= cond_limit:
        factor = scipy.linalg.cho_factor(s)
        return HermitianSolve(solution=scipy.linalg.cho_solve(factor, rhs), cond=cond)

    if not regularize:
        raise IllConditionedFrameError("Overlap matrix too ill-conditioned to invert", cond)

    keep = values > REGULARIZATION_CUTOFF * lambda_max
    dropped = int(np.count_nonzero(~keep))
    kept_vectors = vectors[:, keep]
    solution = kept_vectors @ ((kept_vectors.conj().T @ rhs) / values[keep][:, None]) \
        if np.ndim(rhs) == 2 else kept_vectors @ ((kept_vectors.conj().T @ rhs) / values[keep])
    logger.warning(f"Regularized Hermitian solve: cond_S = {cond:.3e}, dropped {dropped} mode(s).")
    return HermitianSolve(solution=solution, cond=cond, regularized=True, dropped_modes=dropped)
