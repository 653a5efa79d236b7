"""Independent oracles for the fast paths.

Dense assembly of the operators, generalized eigen-extrema, finite-difference
derivatives and fine-step reference trajectories. Only small grids are
accepted here.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, eigh, solve_triangular

from .bathymetry import Bathymetry
from .operators import (
    DENSE_SIZE_LIMIT,
    apply_A,
    apply_B,
    apply_Tb,
    matrix_of,
    weighted_hbA,
    weighted_hbB,
    weighted_I_plus_muTb,
)
from .spectral import Grid

logger = logging.getLogger(__name__)

ORACLE_MAX_N = {1: 64, 2: 16}


class VerificationError(Exception):
    """Oracle errors"""

    pass


class SizeLimitError(VerificationError):
    """Requested dense assembly exceeds the size cap"""

    pass


class NotSPDError(VerificationError):
    """Gram matrix failed the Cholesky check"""

    pass


@dataclass(frozen=True, eq=False)
class DenseOperator:
    kind: str
    size: int
    entries: np.ndarray

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return (self.entries @ v.ravel()).reshape(v.shape)

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))


def _gram_x0(v, mu, bath):
    g = bath.grid
    return v - mu * g.grad_gamma(g.div_gamma(v))


def _gram_h1(v, mu, bath):
    return bath.grid.lambda_s(v, 2.0)


DENSE_KINDS: Dict[str, Callable[[np.ndarray, float, Bathymetry], np.ndarray]] = {
    "identity": lambda v, mu, bath: np.array(v, copy=True),
    "Tb": lambda v, mu, bath: apply_Tb(v, bath),
    "I_plus_muTb": lambda v, mu, bath: v + mu * apply_Tb(v, bath),
    "A": apply_A,
    "B": apply_B,
    "hb_I_plus_muTb": weighted_I_plus_muTb,
    "hb_B": weighted_hbB,
    "hb_A": weighted_hbA,
    "gram_X0": _gram_x0,
    "gram_H1": _gram_h1,
}


def oracle_fits(grid: Grid) -> bool:
    return grid.n <= ORACLE_MAX_N[grid.d]


def assemble_dense(kind: str, mu: float, bath: Bathymetry, grid: Optional[Grid] = None) -> DenseOperator:
    """Matrix of a named vector-field operator, one basis field per column.

    Raises:
        SizeLimitError: If d * n^d exceeds the dense cap
        VerificationError: Unknown kind or mismatched grid
    """
    if grid is not None and grid != bath.grid:
        raise VerificationError("grid does not match the bathymetry grid")
    if kind not in DENSE_KINDS:
        raise VerificationError(f"unknown dense kind: {kind} (known: {sorted(DENSE_KINDS)})")
    g = bath.grid
    size = g.d * g.size
    if size > DENSE_SIZE_LIMIT:
        raise SizeLimitError(f"dense size {size} exceeds {DENSE_SIZE_LIMIT}")
    operator = DENSE_KINDS[kind]
    entries = matrix_of(lambda v: operator(v, mu, bath), bath)
    return DenseOperator(kind=kind, size=size, entries=entries)


def eig_extrema(M: DenseOperator, G: DenseOperator) -> Tuple[float, float]:
    """Extreme generalized Rayleigh quotients of (M, G).

    G is factored as L L^T and M is whitened to L^-1 M L^-T before a symmetric
    eigensolve.
    """
    if M.size != G.size:
        raise VerificationError(f"size mismatch: {M.size} vs {G.size}")
    gram = 0.5 * (G.entries + G.entries.T)
    try:
        lower = cholesky(gram, lower=True)
    except LinAlgError as e:
        raise NotSPDError(f"Gram matrix {G.kind} is not positive definite: {e}")
    sym = 0.5 * (M.entries + M.entries.T)
    left = solve_triangular(lower, sym, lower=True)
    whitened = solve_triangular(lower, left.T, lower=True)
    values = eigh(0.5 * (whitened + whitened.T), eigvals_only=True)
    lo, hi = float(values[0]), float(values[-1])
    logger.debug(f"eig extrema: M={M.kind} G={G.kind} min={lo:.6e} max={hi:.6e}")
    return lo, hi


def fd_derivative(f: np.ndarray, order: int, grid: Grid, axis: int = 0) -> np.ndarray:
    """4th-order centered finite difference along a grid axis (twisted on y)."""
    if order not in (1, 2):
        raise VerificationError(f"order must be 1 or 2, got {order}")
    h = grid.lengths[axis] / grid.n
    ax = f.ndim - grid.d + axis

    def shift(k):
        return np.roll(f, -k, axis=ax)

    if order == 1:
        out = (-shift(2) + 8 * shift(1) - 8 * shift(-1) + shift(-2)) / (12 * h)
    else:
        out = (-shift(2) + 16 * shift(1) - 30 * f + 16 * shift(-1) - shift(-2)) / (12 * h**2)
    if axis == 1:
        out = out * grid.gamma**order
    return out


def reference_trajectory(initial, params, bath: Bathymetry, dt_fine: float, t_end: float, scheme: str = "RK4"):
    """Fine-step run of the same system, used as a self-convergence reference."""
    from .models import build_system
    from .timeloop import StepperConfig, run

    system = build_system(params, bath)
    steps = max(1, int(round((t_end - initial.time) / dt_fine)))
    config = StepperConfig(dt=dt_fine, t_end=t_end, scheme=scheme, output_stride=steps)
    return run(initial, system, config)
