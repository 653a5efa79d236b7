"""Explicit Runge-Kutta integration with CFL control and blow-up detection."""

import logging
import time as _time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import fft as sfft

from .bathymetry import DryStateError, LogDomainError
from .diagnostics import DEFAULT_N, DiagnosticsRecord, record_state, w1_inf_pieces
from .models import ModelKind, ModelState, ModelSystem, Tendency, mollify_state
from .operators import SolverDivergenceError
from .spectral import CorruptFieldError

logger = logging.getLogger(__name__)

CFL_LIMITS = {"RK4": 2.8, "RK2": 1.0}
DEFAULT_BLOWUP_THRESHOLD = 1e3
# sup|grad U| <= kmax sup|U| for fields the grid carries; a fraction of that bound marks lost resolution
DEFAULT_RESOLUTION_FRACTION = 0.25
RESOLUTION_FLOOR = 1e-10


class TimeloopError(Exception):
    """Time integration errors"""

    pass


class CFLError(TimeloopError):
    """dt exceeds the stability limit of the scheme"""

    pass


class Scheme(str, Enum):
    RK4 = "RK4"
    RK2 = "RK2"


class TerminationReason(str, Enum):
    COMPLETED = "completed"
    BLOWUP = "blowup"
    DRY = "dry"
    SOLVER_FAILURE = "solver_failure"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    scheme: Scheme = Scheme.RK4
    delta: float = 0.0
    output_stride: int = 1
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    resolution_fraction: float = DEFAULT_RESOLUTION_FRACTION
    check_cfl: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        except ValueError:
            raise TimeloopError(f"unknown scheme: {self.scheme}")
        if self.dt <= 0:
            raise TimeloopError(f"dt must be positive, got {self.dt}")
        if self.delta < 0:
            raise TimeloopError(f"delta must be >= 0, got {self.delta}")
        if self.output_stride < 1:
            raise TimeloopError(f"output_stride must be >= 1, got {self.output_stride}")
        if self.blowup_threshold <= 0:
            raise TimeloopError(f"blowup_threshold must be positive, got {self.blowup_threshold}")
        if not 0 <= self.resolution_fraction <= 1:
            raise TimeloopError(f"resolution_fraction must lie in [0, 1], got {self.resolution_fraction}")


@dataclass
class Trajectory:
    states: List[ModelState] = field(default_factory=list)
    records: List[DiagnosticsRecord] = field(default_factory=list)
    reason: TerminationReason = TerminationReason.COMPLETED
    steps: int = 0
    runtime: float = 0.0
    message: str = ""

    @property
    def final(self) -> ModelState:
        return self.states[-1]


# ---------------------------------------------------------------------- stability


def linear_frequency_bound(system: ModelSystem, state: Optional[ModelState] = None) -> float:
    """Largest linear frequency of the model on the grid plus the advective rate."""
    g = system.grid
    params = system.params
    kmax = g.kmax
    h_max = system.bath.h_max
    mu = params.mu
    kind = params.model
    if kind is ModelKind.SW:
        omega = np.sqrt(h_max) * kmax
    elif kind is ModelKind.BP:
        omega = max(
            np.sqrt(h) * kmax / np.sqrt(1.0 + mu * h**2 * kmax**2 / 3.0) for h in (system.bath.h_min, h_max)
        )
    elif kind is ModelKind.MBP:
        k2 = kmax**2
        omega = np.sqrt(h_max) * kmax * np.sqrt((1.0 + mu * k2) / (1.0 + 4.0 * mu * k2 / 3.0))
        if params.rescaled_time:
            omega = omega / params.eps
    else:
        omega = 0.0

    transport = 1.0 if params.rescaled_time else params.eps
    if state is not None and transport:
        speed = state.velocity if state.velocity is not None else state.surface
        omega += transport * float(np.max(np.abs(speed))) * kmax
    return float(omega)


def check_cfl(system: ModelSystem, state: ModelState, config: StepperConfig) -> float:
    """Return dt * omega_max; raise CFLError above the scheme's limit."""
    number = config.dt * linear_frequency_bound(system, state)
    limit = CFL_LIMITS[config.scheme.value]
    if number > limit:
        raise CFLError(f"dt={config.dt} gives dt*omega_max={number:.3f} above the {config.scheme.value} limit {limit}")
    return number


# ---------------------------------------------------------------------- stepping


def _advance(state: ModelState, tendency: Tendency, h: float) -> ModelState:
    velocity = None
    if state.velocity is not None:
        velocity = state.velocity + h * tendency.velocity
    return ModelState(surface=state.surface + h * tendency.surface, velocity=velocity, time=state.time + h)


def _combine(state: ModelState, tendencies: Sequence[Tendency], weights: Sequence[float], dt: float) -> ModelState:
    surface = state.surface + dt * sum(w * t.surface for w, t in zip(weights, tendencies))
    velocity = None
    if state.velocity is not None:
        velocity = state.velocity + dt * sum(w * t.velocity for w, t in zip(weights, tendencies))
    return ModelState(surface=surface, velocity=velocity, time=state.time + dt)


def step(state: ModelState, rhs: Callable[[ModelState], Tendency], config: StepperConfig) -> ModelState:
    """One RK4 (classical) or RK2 (Heun) step of size config.dt.

    ``rhs`` may accept a ``delta`` keyword; it is passed when config.delta > 0.
    """
    dt = config.dt

    def f(s):
        return rhs(s, delta=config.delta) if config.delta else rhs(s)

    if config.scheme is Scheme.RK2:
        k1 = f(state)
        k2 = f(_advance(state, k1, dt))
        return _combine(state, (k1, k2), (0.5, 0.5), dt)

    k1 = f(state)
    k2 = f(_advance(state, k1, 0.5 * dt))
    k3 = f(_advance(state, k2, 0.5 * dt))
    k4 = f(_advance(state, k3, dt))
    return _combine(state, (k1, k2, k3, k4), (1 / 6, 1 / 3, 1 / 3, 1 / 6), dt)


def _blowup_message(config: StepperConfig, kmax: float, sup_u: float, sup_grad: float) -> str:
    """Empty unless W^{1,inf} passes the absolute threshold or the gradient outgrows the grid."""
    if max(sup_u, sup_grad) > config.blowup_threshold:
        return f"W1inf={max(sup_u, sup_grad):.3e}"
    limit = config.resolution_fraction * kmax * sup_u
    if config.resolution_fraction and sup_u > RESOLUTION_FLOOR and sup_grad > limit:
        return f"sup grad={sup_grad:.3e} exceeds {config.resolution_fraction:g} * kmax * sup={limit:.3e}"
    return ""


def _record(system: ModelSystem, state: ModelState, N: int, modes: Sequence[float]) -> DiagnosticsRecord:
    return record_state(
        state.time,
        system.zeta(state),
        state.surface,
        state.velocity,
        system.params.mu,
        system.bath,
        N=N,
        modes=modes,
    )


def run(
    initial: ModelState,
    system: ModelSystem,
    config: StepperConfig,
    N: int = DEFAULT_N,
    modes: Sequence[float] = (),
    keep_states: bool = True,
) -> Trajectory:
    """Integrate to t_end or until W^{1,inf} exceeds the threshold or the gradient outgrows the grid.

    With config.delta > 0 the initial state is mollified before the first step.

    Failures are encoded in the trajectory's termination reason; only an
    invalid configuration (CFL) raises.

    Args:
        initial: Starting state
        system: Model system with prefactorized handles
        config: Stepper configuration
        N: Sobolev index of the E^N diagnostic
        modes: Physical wavenumbers whose cos-coefficient is recorded
        keep_states: Store the state at every output stride

    Returns:
        Trajectory with states, diagnostics records and termination reason
    """
    initial = mollify_state(initial, system.grid, config.delta)
    if config.check_cfl:
        number = check_cfl(system, initial, config)
        logger.debug(f"cfl number={number:.3f}")

    started = _time.perf_counter()
    trajectory = Trajectory()
    trajectory.states.append(initial)
    trajectory.records.append(_record(system, initial, N, modes))

    total = int(np.ceil((config.t_end - initial.time) / config.dt - 1e-9))
    state = initial
    g = system.grid
    for n in range(1, total + 1):
        try:
            state = step(state, system.rhs, config)
        except DryStateError as e:
            trajectory.reason = TerminationReason.DRY
            trajectory.message = str(e)
            break
        except CorruptFieldError as e:
            trajectory.reason = TerminationReason.BLOWUP
            trajectory.message = str(e)
            break
        except (SolverDivergenceError, LogDomainError) as e:
            trajectory.reason = TerminationReason.SOLVER_FAILURE
            trajectory.message = str(e)
            break
        trajectory.steps = n

        finite = np.all(np.isfinite(state.surface)) and (
            state.velocity is None or np.all(np.isfinite(state.velocity))
        )
        if not finite:
            trajectory.reason = TerminationReason.BLOWUP
            trajectory.message = f"non-finite state at t={state.time:.6g}"
            break
        sup_u, sup_grad = w1_inf_pieces(g, state.surface, state.velocity)
        blowup = _blowup_message(config, g.kmax, sup_u, sup_grad)
        if blowup:
            trajectory.reason = TerminationReason.BLOWUP
            trajectory.message = f"{blowup} at t={state.time:.6g}"
            if keep_states:
                trajectory.states.append(state)
            trajectory.records.append(_record(system, state, N, modes))
            break

        if n % config.output_stride == 0 or n == total:
            if keep_states:
                trajectory.states.append(state)
            trajectory.records.append(_record(system, state, N, modes))
    if not keep_states and trajectory.states[-1] is not state:
        trajectory.states.append(state)

    trajectory.runtime = _time.perf_counter() - started
    logger.info(
        f"run finished: model={system.params.model.value} reason={trajectory.reason.value} "
        f"steps={trajectory.steps} t={state.time:.6g} runtime={trajectory.runtime:.2f}s"
    )
    return trajectory


# ---------------------------------------------------------------------- linear constant-coefficient runs


def _stack_unknowns(state: ModelState) -> np.ndarray:
    parts = [state.surface[np.newaxis]]
    if state.velocity is not None:
        parts.append(state.velocity)
    return np.concatenate(parts)


def _unstack_unknowns(unknowns: np.ndarray, time: float, has_velocity: bool) -> ModelState:
    velocity = np.array(unknowns[1:]) if has_velocity else None
    return ModelState(surface=np.array(unknowns[0]), velocity=velocity, time=time)


def linear_symbol(system: ModelSystem, delta: float = 0.0) -> np.ndarray:
    """Fourier symbol of the right-hand side of a linear, translation-invariant system.

    Column j is the transform of the response to a unit impulse in unknown j
    at the origin. The result has shape ``(*grid.shape, m, m)`` with m the
    number of scalar unknowns.

    Raises:
        TimeloopError: If eps != 0 or the bottom is not flat
    """
    if system.params.eps != 0 or not system.bath.is_flat:
        raise TimeloopError("linear propagation requires eps = 0 and a flat bottom")
    g = system.grid
    has_velocity = system.model is not ModelKind.BURGERS
    m = 1 + g.d if has_velocity else 1
    columns = []
    for j in range(m):
        impulse = np.zeros((m,) + g.shape)
        impulse[(j,) + (0,) * g.d] = 1.0
        tendency = system.rhs(_unstack_unknowns(impulse, 0.0, has_velocity), delta=delta)
        response = _stack_unknowns(ModelState(surface=tendency.surface, velocity=tendency.velocity))
        columns.append(sfft.fftn(response, axes=g.axes))
    return np.moveaxis(np.stack(columns, axis=-1), 0, -2)


def amplification(symbol: np.ndarray, dt: float, scheme: Scheme) -> np.ndarray:
    """One-step amplification matrices of the scheme: sum of (dt L)^j / j! up to its order."""
    z = dt * symbol
    order = 4 if Scheme(scheme) is Scheme.RK4 else 2
    result = np.broadcast_to(np.eye(symbol.shape[-1], dtype=complex), symbol.shape).copy()
    term = result.copy()
    for j in range(1, order + 1):
        term = np.matmul(term, z) / j
        result = result + term
    return result


def run_linear(
    initial: ModelState,
    system: ModelSystem,
    config: StepperConfig,
    N: int = DEFAULT_N,
    modes: Sequence[float] = (),
    keep_states: bool = True,
) -> Trajectory:
    """``run`` for eps = 0 over a flat bottom, one output stride at a time.

    Every Fourier mode evolves under its own amplification matrix, so the
    states at the output times are those ``run`` produces, up to rounding,
    without visiting the intermediate steps.
    """
    initial = mollify_state(initial, system.grid, config.delta)
    if config.check_cfl:
        check_cfl(system, initial, config)

    started = _time.perf_counter()
    g = system.grid
    has_velocity = initial.velocity is not None
    try:
        one_step = amplification(linear_symbol(system, config.delta), config.dt, config.scheme)
    except SolverDivergenceError as e:
        return Trajectory(
            states=[initial],
            records=[_record(system, initial, N, modes)],
            reason=TerminationReason.SOLVER_FAILURE,
            message=str(e),
        )

    trajectory = Trajectory()
    trajectory.states.append(initial)
    trajectory.records.append(_record(system, initial, N, modes))

    total = int(np.ceil((config.t_end - initial.time) / config.dt - 1e-9))
    stride = np.linalg.matrix_power(one_step, config.output_stride)
    coefficients = np.moveaxis(sfft.fftn(_stack_unknowns(initial), axes=g.axes), 0, -1)
    state = initial
    n = 0
    while n < total:
        count = min(config.output_stride, total - n)
        power = stride if count == config.output_stride else np.linalg.matrix_power(one_step, count)
        coefficients = np.einsum("...ij,...j->...i", power, coefficients)
        n += count
        unknowns = sfft.ifftn(np.moveaxis(coefficients, -1, 0), axes=g.axes).real
        state = _unstack_unknowns(unknowns, initial.time + n * config.dt, has_velocity)
        trajectory.steps = n

        if not np.all(np.isfinite(unknowns)):
            trajectory.reason = TerminationReason.BLOWUP
            trajectory.message = f"non-finite state at t={state.time:.6g}"
            break
        if keep_states:
            trajectory.states.append(state)
        trajectory.records.append(_record(system, state, N, modes))
        sup_u, sup_grad = w1_inf_pieces(g, state.surface, state.velocity)
        blowup = _blowup_message(config, g.kmax, sup_u, sup_grad)
        if blowup:
            trajectory.reason = TerminationReason.BLOWUP
            trajectory.message = f"{blowup} at t={state.time:.6g}"
            break
    if not keep_states and trajectory.states[-1] is not state:
        trajectory.states.append(state)

    trajectory.runtime = _time.perf_counter() - started
    logger.info(
        f"linear run finished: model={system.params.model.value} reason={trajectory.reason.value} "
        f"steps={trajectory.steps} t={state.time:.6g} runtime={trajectory.runtime:.2f}s"
    )
    return trajectory
