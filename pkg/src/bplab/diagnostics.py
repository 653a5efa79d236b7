"""Energies, norms, dispersion measurement, order estimation and shock times."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, newton

from .bathymetry import Bathymetry
from .operators import weighted_I_plus_muTb
from .spectral import Grid

logger = logging.getLogger(__name__)

DEFAULT_N = 3
MIN_PERIODS = 3.0
NOISE_FLOOR = 1e-14

CSV_COLUMNS = ["t", "EN", "E_bp", "E_thm", "sup_U", "sup_gradU"]


class DiagnosticsError(Exception):
    """Diagnostics errors"""

    pass


class InsufficientSamplesError(DiagnosticsError):
    pass


class DegenerateFitError(DiagnosticsError):
    pass


class NoShockError(DiagnosticsError):
    pass


@dataclass
class DiagnosticsRecord:
    time: float
    EN: float
    E_bp: float
    E_thm: float
    sup_U: float
    sup_gradU: float
    mode_amplitudes: Dict[float, float] = field(default_factory=dict)

    def as_row(self) -> Dict[str, float]:
        row = {
            "t": self.time,
            "EN": self.EN,
            "E_bp": self.E_bp,
            "E_thm": self.E_thm,
            "sup_U": self.sup_U,
            "sup_gradU": self.sup_gradU,
        }
        for k, value in self.mode_amplitudes.items():
            row[mode_column(k)] = value
        return row

    @property
    def w1_inf(self) -> float:
        return max(self.sup_U, self.sup_gradU)


def mode_column(k: float) -> str:
    return f"mode_k{k:g}"


def _velocity(vbar: Optional[np.ndarray], grid: Grid) -> np.ndarray:
    if vbar is None:
        return np.zeros((grid.d,) + grid.shape)
    return vbar


# ---------------------------------------------------------------------- energies


def energy_bp(zeta: np.ndarray, vbar: Optional[np.ndarray], mu: float, bath: Bathymetry) -> float:
    """1/2 |zeta|_2^2 + 1/2 (h_b (I + mu T_b) V, V)_2."""
    g = bath.grid
    vbar = _velocity(vbar, g)
    return 0.5 * g.inner(zeta, zeta) + 0.5 * g.inner(weighted_I_plus_muTb(vbar, mu, bath), vbar)


def energy_sw(zeta: np.ndarray, vbar: Optional[np.ndarray], eps: float, bath: Bathymetry) -> float:
    """1/2 |zeta|_2^2 + 1/2 (h V, V)_2 with the full water height h."""
    g = bath.grid
    vbar = _velocity(vbar, g)
    h = bath.h_b + eps * zeta
    return 0.5 * g.inner(zeta, zeta) + 0.5 * g.inner(g.times(h, vbar), vbar)


def energy_EN(zeta: np.ndarray, vbar: Optional[np.ndarray], mu: float, N: int, grid: Grid) -> float:
    """|zeta|_{H^N} + sqrt(mu)|grad zeta|_{H^N} + |V|_{H^N} + sqrt(mu)|grad V|_{H^N}."""
    if N < 0:
        raise DiagnosticsError(f"N must be >= 0, got {N}")
    vbar = _velocity(vbar, grid)
    total = grid.sobolev_norm(zeta, N) + grid.sobolev_norm(vbar, N)
    if mu:
        root = np.sqrt(mu)
        total += root * grid.sobolev_norm(grid.grad_gamma(zeta), N)
        total += root * grid.sobolev_norm(grid.grad_gamma(vbar), N)
    return float(total)


def energy_theorem_E(zeta: np.ndarray, vbar: Optional[np.ndarray], mu: float, s: float, grid: Grid) -> float:
    """mu |div V|_{H^s}^2 + |U|_{H^s}^2 with U = (zeta, V)."""
    vbar = _velocity(vbar, grid)
    total = grid.sobolev_norm(zeta, s) ** 2 + grid.sobolev_norm(vbar, s) ** 2
    if mu:
        total += mu * grid.sobolev_norm(grid.div_gamma(vbar), s) ** 2
    return float(total)


def stacked_energy(stack: Sequence, mu: float, N: int, grid: Grid) -> float:
    """sum_k E^{N-k}(zeta_k, V_k) over a time-derivative stack."""
    if len(stack) - 1 > N:
        raise DiagnosticsError(f"stack depth {len(stack) - 1} exceeds N={N}")
    return float(sum(energy_EN(item.zeta, item.velocity, mu, N - k, grid) for k, item in enumerate(stack)))


def w1_inf_pieces(grid: Grid, surface: np.ndarray, vbar: Optional[np.ndarray]) -> Tuple[float, float]:
    """(sup of the unknowns, sup of their first derivatives) on the nodes."""
    sup_u = grid.sup_norm(surface)
    sup_grad = grid.sup_norm(grid.grad_gamma(surface))
    if vbar is not None:
        sup_u = max(sup_u, grid.sup_norm(vbar))
        sup_grad = max(sup_grad, grid.sup_norm(grid.grad_gamma(vbar)))
    return sup_u, sup_grad


def record_state(
    time: float,
    zeta: np.ndarray,
    surface: np.ndarray,
    vbar: Optional[np.ndarray],
    mu: float,
    bath: Bathymetry,
    N: int = DEFAULT_N,
    modes: Sequence[float] = (),
) -> DiagnosticsRecord:
    """Diagnostics of one state. ``surface`` is the prognostic variable used for W^{1,inf}."""
    g = bath.grid
    sup_u, sup_grad = w1_inf_pieces(g, surface, vbar)
    return DiagnosticsRecord(
        time=float(time),
        EN=energy_EN(zeta, vbar, mu, N, g),
        E_bp=energy_bp(zeta, vbar, mu, bath),
        E_thm=energy_theorem_E(zeta, vbar, mu, N, g),
        sup_U=sup_u,
        sup_gradU=sup_grad,
        mode_amplitudes={k: g.mode_coefficient(zeta, k) for k in modes},
    )


# ---------------------------------------------------------------------- dispersion


def dispersion_omega(k: float, mu: float, gamma_k: Optional[float] = None) -> float:
    """omega(k) = |k| / sqrt(1 + mu k^2 / 3)."""
    kk = abs(k if gamma_k is None else gamma_k)
    return kk / np.sqrt(1.0 + mu * kk**2 / 3.0)


def mbp_dispersion_omega(k: float, mu: float) -> float:
    """Linear MBP frequency over a flat bottom, d = 1."""
    k2 = k * k
    return float(np.sqrt(k2 * (1.0 + mu * k2) / (1.0 + 4.0 * mu * k2 / 3.0)))


def _zero_crossings(times: np.ndarray, signal: np.ndarray) -> np.ndarray:
    sign = np.signbit(signal)
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    t0, t1 = times[idx], times[idx + 1]
    s0, s1 = signal[idx], signal[idx + 1]
    return t0 - s0 * (t1 - t0) / (s1 - s0)


def measure_dispersion(
    trajectory,
    k: float,
    mu: Optional[float] = None,
    min_periods: float = MIN_PERIODS,
) -> Dict[str, float]:
    """Frequency of the mode-k oscillation recorded in a trajectory.

    A first estimate comes from the spacing of the zero crossings; a
    least-squares fit of A cos(omega t + phi) over every sample refines it.

    Args:
        trajectory: Object with ``records`` (DiagnosticsRecord with mode ``k``), or the list itself
        k: Physical wavenumber seeded in the run
        mu: If given, the deviation from omega(k) is reported too

    Raises:
        InsufficientSamplesError: Fewer than ``min_periods`` periods recorded
    """
    records = getattr(trajectory, "records", trajectory)
    try:
        times = np.array([r.time for r in records])
        signal = np.array([r.mode_amplitudes[k] for r in records])
    except KeyError:
        raise DiagnosticsError(f"mode {k} was not recorded")
    if times.size < 8:
        raise InsufficientSamplesError(f"only {times.size} samples recorded")

    crossings = _zero_crossings(times, signal)
    if crossings.size < 2:
        raise InsufficientSamplesError("fewer than two zero crossings recorded")
    half_period = float(np.mean(np.diff(crossings)))
    omega0 = np.pi / half_period
    periods = (times[-1] - times[0]) * omega0 / (2 * np.pi)
    if periods < min_periods:
        raise InsufficientSamplesError(f"only {periods:.2f} periods recorded (need {min_periods})")

    amplitude0 = float(np.max(np.abs(signal)))
    first = int(np.nonzero(np.signbit(signal[1:]) != np.signbit(signal[:-1]))[0][0])
    rising = signal[first + 1] > signal[first]
    phase0 = float((1.5 if rising else 0.5) * np.pi - omega0 * crossings[0])

    def residual(p):
        return p[0] * np.cos(p[1] * times + p[2]) - signal

    fit = least_squares(residual, x0=[amplitude0, omega0, phase0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    omega = abs(float(fit.x[1]))
    result = {"k": float(k), "omega": omega, "periods": float(periods)}
    if mu is not None:
        expected = dispersion_omega(k, mu)
        result["omega_expected"] = expected
        result["rel_err"] = abs(omega - expected) / expected
    logger.debug(f"dispersion: k={k} omega={omega:.10f} periods={periods:.2f}")
    return result


# ---------------------------------------------------------------------- convergence orders


def estimate_order(errors: Sequence[Tuple[float, float]], min_points: int = 3) -> float:
    """Least-squares slope of log(error) against log(parameter).

    Raises:
        DegenerateFitError: Fewer than ``min_points`` points, nonpositive parameters or errors at the noise floor
    """
    if len(errors) < max(2, min_points):
        raise DegenerateFitError(f"need at least {max(2, min_points)} points, got {len(errors)}")
    params = np.array([p for p, _ in errors], dtype=float)
    errs = np.array([e for _, e in errors], dtype=float)
    if np.any(params <= 0):
        raise DegenerateFitError("parameters must be positive")
    if not np.all(np.isfinite(errs)) or np.any(errs <= NOISE_FLOOR * max(1.0, float(np.max(np.abs(errs))))):
        raise DegenerateFitError(f"errors at the noise floor: {errs.tolist()}")
    ratios = params[1:] / params[:-1]
    if np.ptp(ratios) > 1e-6 * np.max(np.abs(ratios)):
        logger.warning(f"parameters are not in geometric progression: {params.tolist()}")
    slope, _ = np.polyfit(np.log(params), np.log(errs), 1)
    return float(slope)


# ---------------------------------------------------------------------- Burgers


def burgers_shock_time(u0: np.ndarray, eps: float, grid: Grid) -> float:
    """T = -1 / (eps min u0'), with u0' spectral.

    Raises:
        NoShockError: If u0' >= 0 everywhere or eps = 0
    """
    slope = float(np.min(grid.grad_gamma(u0)[0]))
    if slope >= 0 or eps <= 0:
        raise NoShockError(f"no gradient catastrophe: min u0' = {slope:.3e}, eps = {eps}")
    return -1.0 / (eps * slope)


def burgers_characteristics(
    u0: Callable[[np.ndarray], np.ndarray],
    du0: Callable[[np.ndarray], np.ndarray],
    eps: float,
    t: float,
    grid: Grid,
) -> np.ndarray:
    """Exact pre-shock solution: u(x, t) = u0(x1) where x = x1 + eps u0(x1) t."""
    x = grid.coords[0]

    def foot(x1):
        return x1 + eps * u0(x1) * t - x

    def dfoot(x1):
        return 1.0 + eps * du0(x1) * t

    x1 = newton(foot, x.copy(), fprime=dfoot, tol=1e-13, maxiter=100)
    return u0(x1)


def detected_blowup_time(records: List[DiagnosticsRecord], threshold: float) -> Optional[float]:
    """First recorded time where W^{1,inf} crosses ``threshold``, linearly interpolated."""
    for prev, cur in zip(records, records[1:]):
        if cur.w1_inf > threshold >= prev.w1_inf:
            frac = (threshold - prev.w1_inf) / (cur.w1_inf - prev.w1_inf)
            return prev.time + frac * (cur.time - prev.time)
    return None
