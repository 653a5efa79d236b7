"""Bathymetry-dependent elliptic operators and their prefactorized inverses.

The three operators act on vector fields of shape ``(..., d, *grid.shape)``:

* ``T_b``, the Boussinesq-Peregrine dispersive operator,
* ``A = I - mu grad (1/h_b) div (h_b .)``,
* ``B = I + mu T_b - mu grad((1/h_b) div(h_b .)) - mu (1/h_b) perp_grad perp_div``.

Multiplication by the fixed coefficients (h_b and its powers, grad b) is done
pointwise on the nodes. With the adjoint pair grad_gamma/div_gamma this makes
the weighted forms h_b(I + mu T_b), h_b B and h_b A exactly symmetric on the
grid, which is what the Cholesky and conjugate-gradient paths rely on.
"""

import logging
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import LinearOperator, cg

from .bathymetry import Bathymetry

logger = logging.getLogger(__name__)

DENSE_SIZE_LIMIT = 4096
AUTO_DENSE_MAX = 1024
SOLVER_TOL = 1e-10
SOLVER_MAXITER = 500
_ASSEMBLY_CHUNK = 256


class OperatorError(Exception):
    """Elliptic operator errors"""

    pass


class SolverDivergenceError(OperatorError):
    """Iterative or direct solve failed to reach the requested residual"""

    pass


class OperatorKind(str, Enum):
    I_PLUS_MU_TB = "I_plus_muTb"
    HB_B = "hb_B"
    HB_A = "hb_A"


# ---------------------------------------------------------------------- matrix-free application


def apply_Tb(v: np.ndarray, bath: Bathymetry) -> np.ndarray:
    """T_b v, with every derivative spectral and coefficient products on the nodes."""
    g = bath.grid
    h = bath.h_b
    div_v = g.div_gamma(v)
    out = -g.times(1.0 / (3.0 * h), g.grad_gamma(h**3 * div_v))
    if bath.beta:
        gb_v = g.dot(bath.grad_b, v)
        bracket = g.grad_gamma(h**2 * gb_v) - g.times(h**2 * div_v, bath.grad_b)
        out = out + g.times(bath.beta / (2.0 * h), bracket)
        out = out + bath.beta**2 * g.times(gb_v, bath.grad_b)
    return out


def _depth_gradient(v: np.ndarray, bath: Bathymetry) -> np.ndarray:
    """grad((1/h_b) div(h_b v))."""
    g = bath.grid
    return g.grad_gamma(g.div_gamma(g.times(bath.h_b, v)) / bath.h_b)


def apply_A(v: np.ndarray, mu: float, bath: Bathymetry) -> np.ndarray:
    if mu == 0:
        return np.array(v, dtype=float, copy=True)
    return v - mu * _depth_gradient(v, bath)


def apply_B(v: np.ndarray, mu: float, bath: Bathymetry) -> np.ndarray:
    if mu == 0:
        return np.array(v, dtype=float, copy=True)
    g = bath.grid
    out = v + mu * apply_Tb(v, bath) - mu * _depth_gradient(v, bath)
    if g.d == 2:
        out = out - mu * g.times(1.0 / bath.h_b, g.perp_grad(g.perp_div(v)))
    return out


def weighted_I_plus_muTb(v: np.ndarray, mu: float, bath: Bathymetry) -> np.ndarray:
    """h_b (I + mu T_b) v, written so that each term is an explicit adjoint pairing."""
    g = bath.grid
    h = bath.h_b
    out = g.times(h, v)
    if mu == 0:
        return out
    div_v = g.div_gamma(v)
    out = out - (mu / 3.0) * g.grad_gamma(h**3 * div_v)
    if bath.beta:
        gb_v = g.dot(bath.grad_b, v)
        out = out + (mu * bath.beta / 2.0) * (g.grad_gamma(h**2 * gb_v) - g.times(h**2 * div_v, bath.grad_b))
        out = out + (mu * bath.beta**2) * g.times(h * gb_v, bath.grad_b)
    return out


def weighted_hbA(v: np.ndarray, mu: float, bath: Bathymetry) -> np.ndarray:
    g = bath.grid
    out = g.times(bath.h_b, v)
    if mu == 0:
        return out
    return out - mu * g.times(bath.h_b, _depth_gradient(v, bath))


def weighted_hbB(v: np.ndarray, mu: float, bath: Bathymetry) -> np.ndarray:
    g = bath.grid
    out = weighted_I_plus_muTb(v, mu, bath)
    if mu == 0:
        return out
    out = out - mu * g.times(bath.h_b, _depth_gradient(v, bath))
    if g.d == 2:
        out = out - mu * g.perp_grad(g.perp_div(v))
    return out


DENSE_NAME = {
    OperatorKind.I_PLUS_MU_TB: "hb_I_plus_muTb",
    OperatorKind.HB_B: "hb_B",
    OperatorKind.HB_A: "hb_A",
}

REFERENCE_NORM = {
    OperatorKind.I_PLUS_MU_TB: "gram_X0",
    OperatorKind.HB_B: "gram_H1",
    OperatorKind.HB_A: "gram_X0",
}

_WEIGHTED: Dict[OperatorKind, Callable[[np.ndarray, float, Bathymetry], np.ndarray]] = {
    OperatorKind.I_PLUS_MU_TB: weighted_I_plus_muTb,
    OperatorKind.HB_B: weighted_hbB,
    OperatorKind.HB_A: weighted_hbA,
}


def _flat_coefficients(kind: OperatorKind, mu: float, h: float = 1.0) -> tuple:
    """(alpha, beta) of the flat-bottom symbol I - alpha grad div - beta perp_grad perp_div.

    For a depth ``h`` the weighted operator is approximated by ``h`` times this symbol.
    """
    if kind is OperatorKind.I_PLUS_MU_TB:
        return mu * h**2 / 3.0, 0.0
    if kind is OperatorKind.HB_B:
        return mu * (h**2 / 3.0 + 1.0), mu / h
    return mu, 0.0


def matrix_of(apply: Callable[[np.ndarray], np.ndarray], bath: Bathymetry) -> np.ndarray:
    """Assemble the matrix of a vector-field operator column by column."""
    g = bath.grid
    size = g.d * g.size
    if size > DENSE_SIZE_LIMIT:
        raise OperatorError(f"dense assembly limited to size {DENSE_SIZE_LIMIT}, got {size}")
    columns = np.empty((size, size))
    for start in range(0, size, _ASSEMBLY_CHUNK):
        stop = min(start + _ASSEMBLY_CHUNK, size)
        basis = np.zeros((stop - start, size))
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        images = apply(basis.reshape((stop - start, g.d) + g.shape))
        columns[:, start:stop] = images.reshape(stop - start, size).T
    return columns


# ---------------------------------------------------------------------- handles


class OperatorHandle:
    """A time-independent elliptic operator with a factorization built once.

    ``weighted(v)`` is the symmetric form (h_b(I + mu T_b), h_b B or h_b A).
    ``apply(v)`` is the operator ``solve`` inverts: I + mu T_b for the first
    kind, the weighted form itself for the two others.

    Args:
        kind: Which operator
        mu: Shallowness parameter (>= 0)
        bath: Bathymetry (frozen with the handle)
        method: "auto", "diagonal", "spectral", "dense" or "cg"
        tol: Relative residual tolerance
        maxiter: Conjugate-gradient iteration cap
    """

    def __init__(
        self,
        kind: Any,
        mu: float,
        bath: Bathymetry,
        method: str = "auto",
        tol: float = SOLVER_TOL,
        maxiter: int = SOLVER_MAXITER,
    ):
        try:
            self.kind = OperatorKind(kind)
        except ValueError:
            raise OperatorError(f"unknown operator kind: {kind}")
        if mu < 0:
            raise OperatorError(f"mu must be >= 0, got {mu}")
        self.mu = float(mu)
        self.bath = bath
        self.tol = tol
        self.maxiter = maxiter
        self.method = self._choose(method)
        self._cholesky = None
        if self.method == "dense":
            self._cholesky = self._factorize()
        logger.debug(f"operator handle ready: kind={self.kind.value} mu={self.mu} method={self.method}")

    @property
    def grid(self):
        return self.bath.grid

    @property
    def size(self) -> int:
        return self.grid.d * self.grid.size

    def _choose(self, method: str) -> str:
        if method not in ("auto", "diagonal", "spectral", "dense", "cg"):
            raise OperatorError(f"unknown solve method: {method}")
        if method == "spectral" and not self.bath.is_flat:
            raise OperatorError("spectral inversion requires a flat bottom")
        if method == "diagonal" and self.mu != 0:
            raise OperatorError("diagonal inversion requires mu = 0")
        if method != "auto":
            return method
        if self.mu == 0:
            return "diagonal"
        if self.bath.is_flat:
            return "spectral"
        if self.size <= AUTO_DENSE_MAX:
            return "dense"
        return "cg"

    def _factorize(self):
        matrix = matrix_of(self.weighted, self.bath)
        matrix = 0.5 * (matrix + matrix.T)
        try:
            return cho_factor(matrix, lower=False, check_finite=True)
        except (LinAlgError, ValueError) as e:
            raise SolverDivergenceError(f"Cholesky factorization of {self.kind.value} failed: {e}")

    def weighted(self, v: np.ndarray) -> np.ndarray:
        return _WEIGHTED[self.kind](v, self.mu, self.bath)

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.kind is OperatorKind.I_PLUS_MU_TB:
            if self.mu == 0:
                return np.array(v, dtype=float, copy=True)
            return v + self.mu * apply_Tb(v, self.bath)
        return self.weighted(v)

    def _weighted_rhs(self, rhs: np.ndarray) -> np.ndarray:
        if self.kind is OperatorKind.I_PLUS_MU_TB:
            return self.grid.times(self.bath.h_b, rhs)
        return rhs

    def precondition(self, r: np.ndarray) -> np.ndarray:
        """Approximate inverse of the weighted form from the flat symbol at mean depth."""
        h = self.bath.h_mean
        alpha, beta = _flat_coefficients(self.kind, self.mu, h)
        return self.grid.flat_elliptic_inverse(r, alpha, beta) / h

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Return v with apply(v) = rhs.

        Raises:
            SolverDivergenceError: If the solve does not reach the tolerance
        """
        self._check_rhs(rhs)
        if self.method == "diagonal" and self.kind is OperatorKind.I_PLUS_MU_TB:
            return np.array(rhs, dtype=float, copy=True)
        return self._invert_weighted(self._weighted_rhs(rhs))

    def solve_weighted(self, b: np.ndarray) -> np.ndarray:
        """Return v with weighted(v) = b.

        For h_b B and h_b A this is ``solve``; for I + mu T_b the right-hand
        side is taken as already multiplied by h_b.
        """
        self._check_rhs(b)
        return self._invert_weighted(b)

    def _check_rhs(self, rhs: np.ndarray) -> None:
        g = self.grid
        expected = (g.d,) + g.shape
        if rhs.shape != expected:
            raise OperatorError(f"rhs shape {rhs.shape} does not match {expected}")
        g.check_finite(rhs, "rhs")

    def _invert_weighted(self, b: np.ndarray) -> np.ndarray:
        g = self.grid
        if self.method == "diagonal":
            return g.times(1.0 / self.bath.h_b, b)
        if self.method == "spectral":
            alpha, beta = _flat_coefficients(self.kind, self.mu)
            return g.flat_elliptic_inverse(b, alpha, beta)

        if self.method == "dense":
            solution = cho_solve(self._cholesky, b.ravel())
        else:
            solution = self._solve_cg(b.ravel())
        if not np.all(np.isfinite(solution)):
            raise SolverDivergenceError(f"{self.kind.value} solve produced non-finite values")
        return solution.reshape((g.d,) + g.shape)

    def _solve_cg(self, b: np.ndarray) -> np.ndarray:
        g = self.grid
        shape = (g.d,) + g.shape
        n = b.size
        operator = LinearOperator((n, n), matvec=lambda x: self.weighted(x.reshape(shape)).ravel(), dtype=float)
        preconditioner = LinearOperator(
            (n, n), matvec=lambda x: self.precondition(x.reshape(shape)).ravel(), dtype=float
        )
        iterations = 0

        def count(_):
            nonlocal iterations
            iterations += 1

        solution, info = cg(
            operator,
            b,
            rtol=self.tol * 0.1,
            atol=0.0,
            maxiter=self.maxiter,
            M=preconditioner,
            callback=count,
        )
        logger.debug(f"cg: kind={self.kind.value} iterations={iterations}")
        residual = np.linalg.norm(operator.matvec(solution) - b) / max(np.linalg.norm(b), 1e-300)
        if info != 0 or residual > self.tol:
            raise SolverDivergenceError(
                f"conjugate gradient stalled for {self.kind.value}: info={info} "
                f"iterations={iterations} relative_residual={residual:.3e}"
            )
        return solution


def _require(handle: OperatorHandle, kind: OperatorKind) -> None:
    if handle.kind is not kind:
        raise OperatorError(f"handle of kind {handle.kind.value} cannot solve {kind.value}")


def solve_I_plus_muTb(rhs: np.ndarray, handle: OperatorHandle) -> np.ndarray:
    _require(handle, OperatorKind.I_PLUS_MU_TB)
    return handle.solve(rhs)


def solve_hbB(rhs: np.ndarray, handle: OperatorHandle) -> np.ndarray:
    _require(handle, OperatorKind.HB_B)
    return handle.solve(rhs)


def solve_hbA(rhs: np.ndarray, handle: OperatorHandle) -> np.ndarray:
    _require(handle, OperatorKind.HB_A)
    return handle.solve(rhs)


# ---------------------------------------------------------------------- audits


def reference_gram(handle: OperatorHandle, v: np.ndarray) -> np.ndarray:
    """Gram operator of the reference norm: X^0 for I + mu T_b and h_b A, H^1 for h_b B."""
    g = handle.grid
    if handle.kind is OperatorKind.HB_B:
        return g.lambda_s(v, 2.0)
    if handle.mu == 0:
        return np.array(v, dtype=float, copy=True)
    return v - handle.mu * g.grad_gamma(g.div_gamma(v))


def symmetry_residual(apply: Callable[[np.ndarray], np.ndarray], v: np.ndarray, w: np.ndarray, grid) -> float:
    """|(Mv, w) - (v, Mw)| / (|v||w|)."""
    scale = grid.l2_norm(v) * grid.l2_norm(w)
    if scale == 0:
        return 0.0
    return abs(grid.inner(apply(v), w) - grid.inner(v, apply(w))) / scale


def coercivity_report(handle: OperatorHandle, trials: int = 20, seed: Optional[int] = 0) -> Dict[str, Any]:
    """Rayleigh quotients of the weighted form against its reference norm.

    Random smooth-to-rough fields sample the quotient; on small grids the dense
    generalized eigen-extrema are added. The minimum must be positive.

    Returns:
        JSON-ready dict with kind, grid, mu, beta, min/max quotients and residuals
    """
    from .verification import assemble_dense, eig_extrema, oracle_fits

    g = handle.grid
    rng = np.random.default_rng(seed)
    shape = (g.d,) + g.shape
    quotients = []
    symmetry = 0.0
    inverse = 0.0
    for _ in range(trials):
        v = rng.standard_normal(shape)
        w = rng.standard_normal(shape)
        quotients.append(g.inner(handle.weighted(v), v) / g.inner(reference_gram(handle, v), v))
        symmetry = max(symmetry, symmetry_residual(handle.weighted, v, w, g))
        recovered = handle.apply(handle.solve(v))
        inverse = max(inverse, g.l2_norm(recovered - v) / g.l2_norm(v))

    report: Dict[str, Any] = {
        "status": "success",
        "kind": handle.kind.value,
        "method": handle.method,
        "grid": {"d": g.d, "n": g.n, "L": list(g.lengths), "gamma": g.gamma},
        "mu": handle.mu,
        "beta": handle.bath.beta,
        "profile": handle.bath.profile,
        "trials": trials,
        "min_quotient": float(min(quotients)),
        "max_quotient": float(max(quotients)),
        "symmetry_residual": float(symmetry),
        "inverse_residual": float(inverse),
    }

    if oracle_fits(g):
        weighted = assemble_dense(DENSE_NAME[handle.kind], handle.mu, handle.bath)
        gram = assemble_dense(REFERENCE_NORM[handle.kind], handle.mu, handle.bath)
        lo, hi = eig_extrema(weighted, gram)
        report["dense_min_quotient"] = lo
        report["dense_max_quotient"] = hi
        report["min_quotient"] = min(report["min_quotient"], lo)
        report["max_quotient"] = max(report["max_quotient"], hi)

    if report["min_quotient"] <= 0:
        report["status"] = "error"
        report["message"] = "weighted form is not coercive on this grid"
        report["error_type"] = "CoercivityError"
        logger.error(f"coercivity lost: kind={handle.kind.value} min_quotient={report['min_quotient']:.3e}")
    else:
        logger.info(
            f"coercivity: kind={handle.kind.value} mu={handle.mu} beta={handle.bath.beta} "
            f"min_quotient={report['min_quotient']:.6e} max_quotient={report['max_quotient']:.6e} "
            f"symmetry={symmetry:.2e} inverse={inverse:.2e}"
        )
    return report


def hbA_estimate_report(
    handle: OperatorHandle, N: int = 1, trials: int = 10, seed: Optional[int] = 0
) -> Dict[str, Any]:
    """Measured constants of the two inverse estimates of h_b A.

    C1 bounds |(h_b A)^-1 f|_{X^N} by |f|_{H^N}; C2 bounds
    sqrt(mu) |(h_b A)^-1 grad g|_{X^N} by |g|_{H^N}. Both are maxima over
    random smooth inputs, logged and returned.
    """
    _require(handle, OperatorKind.HB_A)
    g = handle.grid
    rng = np.random.default_rng(seed)
    c1 = 0.0
    c2 = 0.0
    perp = 0.0
    for _ in range(trials):
        f = g.mollify(rng.standard_normal((g.d,) + g.shape), 0.05, -2)
        c1 = max(c1, g.xs_norm(handle.solve(f), N, handle.mu) / g.sobolev_norm(f, N))
        s = g.mollify(rng.standard_normal(g.shape), 0.05, -2)
        solved = handle.solve(g.grad_gamma(s))
        c2 = max(c2, np.sqrt(handle.mu) * g.xs_norm(solved, N, handle.mu) / g.sobolev_norm(s, N))
        # (h_b A)^-1 (h_b grad f) stays perp-divergence free
        curl_free = handle.solve(g.times(handle.bath.h_b, g.grad_gamma(s)))
        perp = max(perp, g.l2_norm(g.perp_div(curl_free)) / max(g.l2_norm(curl_free), 1e-300))
    logger.info(f"hbA estimates: mu={handle.mu} N={N} C1={c1:.4e} C2={c2:.4e} perp_residual={perp:.2e}")
    return {
        "status": "success",
        "kind": handle.kind.value,
        "mu": handle.mu,
        "N": N,
        "C1": float(c1),
        "C2": float(c2),
        "perp_residual": float(perp),
    }
