"""海底地形（bathymetry）と水深・q 変数の変換。

静水深 h_b = 1 - beta*b、全水深 h = 1 + eps*zeta - beta*b、および
q = (1/eps) log(1 + eps*zeta/h_b) の対数変数変換を扱う。
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, NamedTuple, Union

import numpy as np

from .spectral import Grid

logger = logging.getLogger(__name__)

ADMISSIBILITY_MARGIN = 0.1
_SERIES_CUTOFF = 1e-8


class BathymetryError(Exception):
    """地形・水深計算に関するエラー"""

    pass


class NonpositiveDepthError(BathymetryError):
    """静水深 h_b が 0 以下になる地形"""

    pass


class LogDomainError(BathymetryError):
    """1 + eps*zeta/h_b <= 0 で q 変換が定義できない"""

    pass


class DryStateError(BathymetryError):
    """全水深 h が 0 以下（干出）"""

    pass


class WaterHeight(NamedTuple):
    h: np.ndarray
    dry: bool


@dataclass(frozen=True, eq=False)
class Bathymetry:
    """Still-water geometry precomputed on a grid.

    Attributes:
        grid: Grid the fields live on
        b: Bottom variation
        beta: Topography parameter in [0, 1]
        h_b: Still-water column 1 - beta*b
        grad_b: grad_gamma b
        grad_hb: grad_gamma h_b
        h_min: Minimum of h_b over the nodes (positive)
        profile: Name of the preset that produced ``b``
    """

    grid: Grid
    b: np.ndarray
    beta: float
    h_b: np.ndarray
    grad_b: np.ndarray
    grad_hb: np.ndarray
    h_min: float
    profile: str = "custom"

    @property
    def h_max(self) -> float:
        return float(np.max(self.h_b))

    @property
    def h_mean(self) -> float:
        return float(np.mean(self.h_b))

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self.h_b == 1.0))


def _centered(grid: Grid, center: Any) -> list:
    centers = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    return [x - c for x, c in zip(grid.coords, centers)]


def _default_center(grid: Grid) -> tuple:
    return tuple(length / 2 for length in grid.lengths)


def _flat(grid: Grid) -> np.ndarray:
    return np.zeros(grid.shape)


def _constant(grid: Grid, value: float = 1.0) -> np.ndarray:
    return np.full(grid.shape, float(value))


def _gaussian_bump(grid: Grid, center: Any = None, width: float = 1.0, height: float = 1.0) -> np.ndarray:
    if width <= 0:
        raise BathymetryError(f"gaussian_bump の width は正である必要があります: {width}")
    offsets = _centered(grid, _default_center(grid) if center is None else center)
    r2 = sum(o**2 for o in offsets)
    return height * np.exp(-r2 / width**2)


def _sinusoidal(grid: Grid, k: float = 1.0, amplitude: float = 1.0) -> np.ndarray:
    grid.mode_index(k, axis=0)
    return amplitude * np.cos(k * grid.coords[0])


def _two_bumps(
    grid: Grid,
    centers: Any = None,
    width: float = 1.0,
    heights: Any = (1.0, 1.0),
) -> np.ndarray:
    if centers is None:
        centers = [
            tuple(length * f for length in grid.lengths) for f in (1 / 3, 2 / 3)
        ]
    h1, h2 = heights
    return _gaussian_bump(grid, centers[0], width, h1) + _gaussian_bump(grid, centers[1], width, h2)


PROFILES: Dict[str, Callable[..., np.ndarray]] = {
    "flat": _flat,
    "constant": _constant,
    "gaussian_bump": _gaussian_bump,
    "sinusoidal": _sinusoidal,
    "two_bumps": _two_bumps,
}


def build_bathymetry(profile: Union[str, Mapping[str, Any]], beta: float, grid: Grid) -> Bathymetry:
    """プリセット名とパラメータから Bathymetry を構築する。

    Args:
        profile: プリセット名、または ``{"name": ..., **params}`` 形式の dict
        beta: 地形パラメータ（0 <= beta <= 1）
        grid: 計算格子

    Returns:
        Bathymetry

    Raises:
        BathymetryError: beta が範囲外、または未知のプリセット
        NonpositiveDepthError: min(1 - beta*b) <= 0
    """
    if not 0 <= beta <= 1:
        raise BathymetryError(f"beta は [0, 1] の範囲である必要があります: {beta}")

    if isinstance(profile, str):
        name, params = profile, {}
    else:
        params = dict(profile)
        name = params.pop("name", None)
    if name not in PROFILES:
        raise BathymetryError(f"未知の地形プリセットです: {name} (利用可能: {sorted(PROFILES)})")

    try:
        b = PROFILES[name](grid, **params)
    except BathymetryError:
        raise
    except TypeError as e:
        raise BathymetryError(f"地形プリセット {name} のパラメータが不正です: {e}")
    except Exception as e:
        logger.error(f"地形生成に失敗: {e}")
        raise BathymetryError(f"地形生成に失敗: {e}")

    grid.check_finite(b, "b")
    h_b = 1.0 - beta * b
    h_min = float(np.min(h_b))
    if h_min <= 0:
        raise NonpositiveDepthError(
            f"静水深が正になりません: min(1 - beta*b) = {h_min:.3e} (profile={name}, beta={beta})"
        )

    grad_b = grid.grad_gamma(b)
    logger.debug(f"bathymetry built: profile={name} beta={beta} h_min={h_min:.6f}")
    return Bathymetry(
        grid=grid,
        b=b,
        beta=float(beta),
        h_b=h_b,
        grad_b=grad_b,
        grad_hb=-beta * grad_b,
        h_min=h_min,
        profile=name,
    )


def water_height(zeta: np.ndarray, eps: float, bath: Bathymetry) -> WaterHeight:
    """全水深 h = 1 + eps*zeta - beta*b。

    min h <= 0 のときは dry フラグを立てる（例外は送出しない）。
    """
    h = bath.h_b + eps * zeta
    dry = bool(np.min(h) <= 0)
    if dry:
        logger.warning(f"dry state detected: min_h={float(np.min(h)):.3e}")
    return WaterHeight(h=h, dry=dry)


def _admissibility(zeta: np.ndarray, eps: float, bath: Bathymetry) -> np.ndarray:
    ratio = eps * zeta / bath.h_b
    margin = float(np.min(1.0 + ratio))
    if margin <= 0:
        raise LogDomainError(f"q 変換の定義域外です: min(1 + eps*zeta/h_b) = {margin:.3e}")
    if margin < ADMISSIBILITY_MARGIN:
        logger.warning(f"approaching degenerate regime: min_margin={margin:.3e} eps={eps}")
    return ratio


def zeta_to_q(zeta: np.ndarray, eps: float, bath: Bathymetry) -> np.ndarray:
    """q = (1/eps) log(1 + eps*zeta/h_b)。eps = 0 では極限 zeta/h_b を返す。"""
    if eps == 0:
        return zeta / bath.h_b
    ratio = _admissibility(zeta, eps, bath)
    return np.log1p(ratio) / eps


def q_to_zeta(q: np.ndarray, eps: float, bath: Bathymetry) -> np.ndarray:
    """zeta = (h_b/eps)(exp(eps*q) - 1)。eps = 0 では h_b*q。"""
    if eps == 0:
        return bath.h_b * q
    return bath.h_b * np.expm1(eps * q) / eps


def q_positivity_factor(zeta: np.ndarray, eps: float, bath: Bathymetry) -> np.ndarray:
    """Q(zeta) = int_0^1 dt / (h_b + eps*t*zeta), so that q = Q(zeta)*zeta."""
    if eps == 0:
        return 1.0 / bath.h_b
    ratio = _admissibility(zeta, eps, bath)
    small = np.abs(ratio) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, ratio)
    closed = np.log1p(safe) / safe
    series = 1.0 - ratio / 2.0 + ratio**2 / 3.0
    factor = np.where(small, series, closed) / bath.h_b
    if not np.all(factor > 0):
        raise LogDomainError("Q(zeta) が正になりません")
    return factor
