"""Right-hand sides of the evolution systems in the explicit form dU/dt = F(U).

Four systems share one state layout: Shallow-Water (SW), Boussinesq-Peregrine
(BP), modified Boussinesq-Peregrine in the log variable q (MBP) and the 1D
Burgers equation. Elliptic solves go through prefactorized OperatorHandles.
Every right-hand side accepts a mollifier strength ``delta``; with delta > 0
it returns the tendency of the (1 - delta*Laplacian)-regularized system.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional

import numpy as np

from .bathymetry import Bathymetry, DryStateError, q_to_zeta, water_height, zeta_to_q
from .operators import OperatorHandle, OperatorKind, apply_A, solve_hbB, solve_I_plus_muTb
from .spectral import Grid

logger = logging.getLogger(__name__)

REGIME_CONSTANT = 10.0
MAX_DERIVATIVE_ORDER = 3


class ModelError(Exception):
    """Model configuration or evaluation errors"""

    pass


class ModelKind(str, Enum):
    SW = "SW"
    BP = "BP"
    MBP = "MBP"
    BURGERS = "BURGERS"


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of a run.

    beta lives in the Bathymetry and gamma in the Grid.
    """

    eps: float
    mu: float
    model: ModelKind = ModelKind.BP
    rescaled_time: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "model", ModelKind(self.model))
        except ValueError:
            raise ModelError(f"unknown model: {self.model}")
        if self.eps < 0 or self.mu < 0:
            raise ModelError(f"eps and mu must be >= 0, got eps={self.eps} mu={self.mu}")
        if self.rescaled_time and self.model is not ModelKind.MBP:
            raise ModelError("rescaled_time is only defined for the MBP model")
        if self.rescaled_time and self.eps == 0:
            raise ModelError("rescaled_time requires eps > 0")
        if self.model in (ModelKind.BP, ModelKind.MBP) and self.eps > REGIME_CONSTANT * self.mu:
            logger.warning(
                f"outside the Boussinesq regime: eps={self.eps} mu={self.mu} "
                f"ratio={self.eps / max(self.mu, 1e-300):.3g} limit={REGIME_CONSTANT}"
            )


@dataclass(frozen=True, eq=False)
class ModelState:
    """Prognostic unknowns: zeta (SW/BP), q (MBP) or u (Burgers), plus V and time."""

    surface: np.ndarray
    velocity: Optional[np.ndarray] = None
    time: float = 0.0


class Tendency(NamedTuple):
    surface: np.ndarray
    velocity: Optional[np.ndarray]


class DerivedState(NamedTuple):
    """(eps d/dt)^k applied to the unknowns, with the matching zeta_k."""

    surface: np.ndarray
    velocity: np.ndarray
    zeta: np.ndarray


# ---------------------------------------------------------------------- nonlinear pieces


def _advection(g: Grid, v: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(v . grad) f for a scalar or vector field f, dealiased."""
    return np.sum(g.dealias_mul(v, g.grad_gamma(f)), axis=-g.d - 1)


def _check_state(g: Grid, state: ModelState) -> None:
    g.check_finite(state.surface, "surface")
    if state.velocity is not None:
        g.check_finite(state.velocity, "velocity")


def _continuity(g: Grid, zeta: np.ndarray, vbar: np.ndarray, eps: float, bath: Bathymetry) -> np.ndarray:
    height = water_height(zeta, eps, bath)
    if height.dry:
        raise DryStateError(f"全水深が 0 以下です: min h = {float(np.min(height.h)):.3e}")
    flux = g.times(bath.h_b, vbar)
    if eps:
        flux = flux + eps * g.dealias_mul(zeta, vbar)
    return -g.div_gamma(flux)


def _solve_mollified(solve, rhs: np.ndarray, g: Grid, delta: float) -> np.ndarray:
    if not delta:
        return solve(rhs)
    return g.mollify(solve(g.mollify(rhs, delta, -1)), delta, -1)


def _smooth(g: Grid, f: np.ndarray, delta: float) -> np.ndarray:
    return g.mollify(f, delta, -2) if delta else f


def mollify_state(state: ModelState, grid: Grid, delta: float) -> ModelState:
    """Initial data of the regularized system: (1 - delta*Laplacian)^-1 applied to every unknown."""
    if not delta:
        return state
    velocity = None if state.velocity is None else grid.mollify(state.velocity, delta, -1)
    return ModelState(surface=grid.mollify(state.surface, delta, -1), velocity=velocity, time=state.time)


# ---------------------------------------------------------------------- right-hand sides


def rhs_shallow_water(state: ModelState, params: ModelParams, bath: Bathymetry, delta: float = 0.0) -> Tendency:
    g = bath.grid
    _check_state(g, state)
    zeta, vbar = state.surface, state.velocity
    dzeta = _continuity(g, zeta, vbar, params.eps, bath)
    dvel = -g.grad_gamma(zeta)
    if params.eps:
        dvel = dvel - params.eps * _advection(g, vbar, vbar)
    return Tendency(_smooth(g, dzeta, delta), _smooth(g, dvel, delta))


def rhs_boussinesq_peregrine(
    state: ModelState,
    params: ModelParams,
    bath: Bathymetry,
    handle_Tb: OperatorHandle,
    delta: float = 0.0,
) -> Tendency:
    if handle_Tb.kind is not OperatorKind.I_PLUS_MU_TB:
        raise ModelError(f"BP needs an I_plus_muTb handle, got {handle_Tb.kind.value}")
    g = bath.grid
    _check_state(g, state)
    zeta, vbar = state.surface, state.velocity
    dzeta = _continuity(g, zeta, vbar, params.eps, bath)
    forcing = g.grad_gamma(zeta)
    if params.eps:
        forcing = forcing + params.eps * _advection(g, vbar, vbar)
    if delta:
        # M^-1 (h_b(I + mu T_b))^-1 M^-1 h_b forcing; h_b does not commute with M^-1
        weighted = g.mollify(g.times(bath.h_b, forcing), delta, -1)
        dvel = -g.mollify(handle_Tb.solve_weighted(weighted), delta, -1)
    else:
        dvel = -solve_I_plus_muTb(forcing, handle_Tb)
    return Tendency(_smooth(g, dzeta, delta), dvel)


def _mbp_coefficients(params: ModelParams) -> tuple:
    """(transport, pressure) coefficients; the rescaled form trades eps for 1/eps."""
    if params.rescaled_time:
        return 1.0, 1.0 / params.eps
    return params.eps, 1.0


def rhs_modified_bp(
    state: ModelState,
    params: ModelParams,
    bath: Bathymetry,
    handle_B: OperatorHandle,
    delta: float = 0.0,
) -> Tendency:
    """dq/dt = -a V.grad q - c (1/h_b) div(h_b V); h_b B dV/dt = -(a h_b (V.grad)V + c h_b A grad zeta)."""
    g = bath.grid
    _check_state(g, state)
    q, vbar = state.surface, state.velocity
    a, c = _mbp_coefficients(params)
    zeta = q_to_zeta(q, params.eps, bath)

    dq = -c * g.div_gamma(g.times(bath.h_b, vbar)) / bath.h_b
    forcing = c * g.times(bath.h_b, apply_A(g.grad_gamma(zeta), params.mu, bath))
    if a:
        dq = dq - a * _advection(g, vbar, q)
        forcing = forcing + a * g.times(bath.h_b, _advection(g, vbar, vbar))
    dvel = -_solve_mollified(lambda r: solve_hbB(r, handle_B), forcing, g, delta)
    return Tendency(_smooth(g, dq, delta), dvel)


def rhs_burgers(state: ModelState, params: ModelParams, grid: Grid, delta: float = 0.0) -> Tendency:
    """du/dt = -eps u du/dx."""
    if grid.d != 1:
        raise ModelError("Burgers is one-dimensional")
    grid.check_finite(state.surface, "u")
    u = state.surface
    du = -params.eps * grid.dealias_mul(u, grid.grad_gamma(u)[0])
    return Tendency(_smooth(grid, du, delta), None)


# ---------------------------------------------------------------------- bundled system


class ModelSystem:
    """Parameters, bathymetry and prefactorized handles of one run.

    Args:
        params: ModelParams
        bath: Bathymetry
        method: Solve method forwarded to the OperatorHandle
    """

    def __init__(self, params: ModelParams, bath: Bathymetry, method: str = "auto"):
        self.params = params
        self.bath = bath
        self.handle: Optional[OperatorHandle] = None
        if params.model is ModelKind.BP:
            self.handle = OperatorHandle(OperatorKind.I_PLUS_MU_TB, params.mu, bath, method=method)
        elif params.model is ModelKind.MBP:
            self.handle = OperatorHandle(OperatorKind.HB_B, params.mu, bath, method=method)
        elif params.model is ModelKind.BURGERS and bath.grid.d != 1:
            raise ModelError("Burgers is one-dimensional")

    @property
    def grid(self) -> Grid:
        return self.bath.grid

    @property
    def model(self) -> ModelKind:
        return self.params.model

    def rhs(self, state: ModelState, delta: float = 0.0) -> Tendency:
        kind = self.params.model
        if kind is ModelKind.SW:
            return rhs_shallow_water(state, self.params, self.bath, delta)
        if kind is ModelKind.BP:
            return rhs_boussinesq_peregrine(state, self.params, self.bath, self.handle, delta)
        if kind is ModelKind.MBP:
            return rhs_modified_bp(state, self.params, self.bath, self.handle, delta)
        return rhs_burgers(state, self.params, self.grid, delta)

    def zeta(self, state: ModelState) -> np.ndarray:
        """Surface elevation of a state (derived from q for MBP)."""
        if self.params.model is ModelKind.MBP:
            return q_to_zeta(state.surface, self.params.eps, self.bath)
        return state.surface

    def state_from_zeta(self, zeta: np.ndarray, vbar: Optional[np.ndarray], time: float = 0.0) -> ModelState:
        if self.params.model is ModelKind.BURGERS:
            return ModelState(surface=np.array(zeta, dtype=float), velocity=None, time=time)
        if vbar is None:
            vbar = np.zeros((self.grid.d,) + self.grid.shape)
        surface = zeta_to_q(zeta, self.params.eps, self.bath) if self.params.model is ModelKind.MBP else zeta
        return ModelState(surface=np.array(surface, dtype=float), velocity=np.array(vbar, dtype=float), time=time)


def build_system(params: ModelParams, bath: Bathymetry, method: str = "auto") -> ModelSystem:
    return ModelSystem(params, bath, method=method)


# ---------------------------------------------------------------------- time-derivative stack


@dataclass
class _Linearization:
    """Tangent and curvature of the MBP right-hand side at a fixed state."""

    params: ModelParams
    bath: Bathymetry
    handle: OperatorHandle
    q: np.ndarray
    vbar: np.ndarray
    coefficients: tuple = field(init=False)

    def __post_init__(self):
        self.coefficients = _mbp_coefficients(self.params)
        self.slope = self.bath.h_b * np.exp(self.params.eps * self.q)

    def _pressure(self, scalar: np.ndarray) -> np.ndarray:
        g = self.bath.grid
        return g.times(self.bath.h_b, apply_A(g.grad_gamma(scalar), self.params.mu, self.bath))

    def tangent(self, wq: np.ndarray, wv: np.ndarray) -> tuple:
        g = self.bath.grid
        a, c = self.coefficients
        dq = -a * (_advection(g, wv, self.q) + _advection(g, self.vbar, wq))
        dq = dq - c * g.div_gamma(g.times(self.bath.h_b, wv)) / self.bath.h_b
        forcing = a * g.times(self.bath.h_b, _advection(g, wv, self.vbar) + _advection(g, self.vbar, wv))
        forcing = forcing + c * self._pressure(self.slope * wq)
        return dq, -solve_hbB(forcing, self.handle)

    def curvature(self, wq: np.ndarray, wv: np.ndarray) -> tuple:
        g = self.bath.grid
        a, c = self.coefficients
        dq = -2.0 * a * _advection(g, wv, wq)
        forcing = 2.0 * a * g.times(self.bath.h_b, _advection(g, wv, wv))
        forcing = forcing + c * self._pressure(self.params.eps * self.slope * wq**2)
        return dq, -solve_hbB(forcing, self.handle)


def time_derivative_stack(
    state: ModelState,
    params: ModelParams,
    bath: Bathymetry,
    k_max: int,
    handle_B: Optional[OperatorHandle] = None,
) -> List[DerivedState]:
    """u_k = (eps d/dt)^k u for k <= k_max, by exact differentiation through the equation.

    With F the MBP right-hand side, u_1 = eps F(u), u_2 = eps DF[u_1] and
    u_3 = eps (D^2F[u_1, u_1] + DF[u_2]). zeta_k follows from the chain rule
    applied to zeta = (h_b/eps)(exp(eps q) - 1).
    """
    if params.model is not ModelKind.MBP:
        raise ModelError("time_derivative_stack is defined for the MBP model")
    if not 0 <= k_max <= MAX_DERIVATIVE_ORDER:
        raise ModelError(f"k_max must lie in [0, {MAX_DERIVATIVE_ORDER}], got {k_max}")
    handle = handle_B or OperatorHandle(OperatorKind.HB_B, params.mu, bath)
    eps = params.eps
    q, vbar = state.surface, state.velocity
    slope = bath.h_b * np.exp(eps * q)

    stack = [DerivedState(q, vbar, q_to_zeta(q, eps, bath))]
    if k_max == 0:
        return stack

    tendency = rhs_modified_bp(state, params, bath, handle)
    q1, v1 = eps * tendency.surface, eps * tendency.velocity
    stack.append(DerivedState(q1, v1, slope * q1))
    if k_max == 1:
        return stack

    lin = _Linearization(params, bath, handle, q, vbar)
    tq, tv = lin.tangent(q1, v1)
    q2, v2 = eps * tq, eps * tv
    stack.append(DerivedState(q2, v2, eps * slope * q1**2 + slope * q2))
    if k_max == 2:
        return stack

    cq, cv = lin.curvature(q1, v1)
    tq, tv = lin.tangent(q2, v2)
    q3, v3 = eps * (cq + tq), eps * (cv + tv)
    zeta3 = eps**2 * slope * q1**3 + 3.0 * eps * slope * q1 * q2 + slope * q3
    stack.append(DerivedState(q3, v3, zeta3))
    return stack
