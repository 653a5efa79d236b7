"""Periodic grids and Fourier-multiplier calculus.

Fields are plain numpy arrays. A scalar field has shape ``grid.shape``; a
vector field carries its components on the axis right before the spatial
axes, i.e. shape ``(..., d, *grid.shape)``. Every operation works on the last
``d`` axes, so leading batch axes are allowed throughout.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union

import numpy as np
from scipy import fft as sfft

logger = logging.getLogger(__name__)

MOLLIFIER_POWERS = (-2, -1, 1, 2)


class GridError(Exception):
    """Grid construction or spectral operation errors"""

    pass


class CorruptFieldError(GridError):
    """A field holds NaN or Inf samples"""

    pass


@dataclass(frozen=True)
class Grid:
    """Periodic sampling lattice on the torus [0, L)^d.

    Attributes:
        d: Dimension (1 or 2)
        n: Points per axis (power of two, at least 8)
        L: Domain length, either one value for every axis or one per axis
        gamma: Transversality parameter scaling the y-derivative, in (0, 1]
    """

    d: int
    n: int
    L: Union[float, Tuple[float, ...]] = 2 * np.pi
    gamma: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GridError(f"d must be 1 or 2, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise GridError(f"n must be a power of two >= 8, got {self.n}")
        if any(length <= 0 for length in self.lengths):
            raise GridError(f"L must be positive, got {self.L}")
        if not 0 < self.gamma <= 1:
            raise GridError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def lengths(self) -> Tuple[float, ...]:
        if isinstance(self.L, (tuple, list)):
            if len(self.L) != self.d:
                raise GridError(f"L has {len(self.L)} entries for d={self.d}")
            return tuple(float(x) for x in self.L)
        return (float(self.L),) * self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return float(np.prod([length / self.n for length in self.lengths]))

    @property
    def axes(self) -> Tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @cached_property
    def coords(self) -> Tuple[np.ndarray, ...]:
        """Node coordinates, one array of ``shape`` per axis."""
        lines = [np.arange(self.n) * (length / self.n) for length in self.lengths]
        return tuple(np.meshgrid(*lines, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Physical wavenumbers on the half-spectrum layout used by rfftn."""
        ks = []
        for axis, length in enumerate(self.lengths):
            scale = 2 * np.pi / length
            if axis == self.d - 1:
                k = sfft.rfftfreq(self.n, d=1.0 / self.n) * scale
            else:
                k = sfft.fftfreq(self.n, d=1.0 / self.n) * scale
            view = [1] * self.d
            view[axis] = k.size
            ks.append(k.reshape(view))
        return tuple(ks)

    @cached_property
    def derivative_symbols(self) -> Tuple[np.ndarray, ...]:
        """Symbols of the twisted partials: i*kx and i*gamma*ky, Nyquist zeroed."""
        symbols = []
        nyquist = self.n // 2
        for axis, k in enumerate(self.wavenumbers):
            k = k.copy()
            index = [slice(None)] * self.d
            index[axis] = nyquist if axis == self.d - 1 else slice(nyquist, nyquist + 1)
            k[tuple(index)] = 0.0
            if axis == 1:
                k = k * self.gamma
            symbols.append(1j * k)
        return tuple(symbols)

    @cached_property
    def ksq(self) -> np.ndarray:
        """|xi^gamma|^2 on the half spectrum, consistent with the derivative symbols."""
        total = np.zeros(self.spectral_shape)
        for symbol in self.derivative_symbols:
            total = total + np.abs(symbol) ** 2
        return total

    @property
    def spectral_shape(self) -> Tuple[int, ...]:
        return self.shape[:-1] + (self.n // 2 + 1,)

    @property
    def kmax(self) -> float:
        """Largest |xi^gamma| carried by the derivative symbols."""
        return float(np.sqrt(self.ksq.max()))

    # ------------------------------------------------------------------ transforms

    def check_finite(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        if not np.all(np.isfinite(f)):
            raise CorruptFieldError(f"{name} contains non-finite samples")
        return f

    def forward(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfftn(f, axes=self.axes)

    def inverse(self, fh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(fh, s=self.shape, axes=self.axes)

    def multiply(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply a real-valued Fourier multiplier."""
        return self.inverse(symbol * self.forward(f))

    def _component(self, v: np.ndarray, j: int) -> np.ndarray:
        return v[(..., j) + (slice(None),) * self.d]

    # ------------------------------------------------------------------ derivatives

    def grad_gamma(self, f: np.ndarray) -> np.ndarray:
        fh = self.forward(f)
        parts = [self.inverse(symbol * fh) for symbol in self.derivative_symbols]
        return np.stack(parts, axis=-self.d - 1)

    def div_gamma(self, v: np.ndarray) -> np.ndarray:
        total = 0.0
        for j, symbol in enumerate(self.derivative_symbols):
            total = total + symbol * self.forward(self._component(v, j))
        return self.inverse(total)

    def perp_grad(self, f: np.ndarray) -> np.ndarray:
        if self.d == 1:
            return np.zeros(f.shape[: f.ndim - 1] + (1,) + self.shape)
        dx, dy = self.derivative_symbols
        fh = self.forward(f)
        return np.stack([self.inverse(-dy * fh), self.inverse(dx * fh)], axis=-self.d - 1)

    def perp_div(self, v: np.ndarray) -> np.ndarray:
        if self.d == 1:
            return np.zeros(v.shape[: v.ndim - 2] + self.shape)
        dx, dy = self.derivative_symbols
        return self.inverse(-dy * self.forward(self._component(v, 0)) + dx * self.forward(self._component(v, 1)))

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Twisted Laplacian div_gamma(grad_gamma f)."""
        return self.multiply(f, -self.ksq)

    def lambda_s(self, f: np.ndarray, s: float) -> np.ndarray:
        if s == 0:
            return np.array(f, dtype=float, copy=True)
        return self.multiply(f, (1.0 + self.ksq) ** (s / 2.0))

    def mollify(self, f: np.ndarray, delta: float, power: int) -> np.ndarray:
        """Apply (1 - delta*Laplacian)^power."""
        if delta < 0:
            raise GridError(f"delta must be >= 0, got {delta}")
        if power not in MOLLIFIER_POWERS:
            raise GridError(f"power must be one of {MOLLIFIER_POWERS}, got {power}")
        if delta == 0:
            return np.array(f, dtype=float, copy=True)
        return self.multiply(f, (1.0 + delta * self.ksq) ** power)

    # ------------------------------------------------------------------ pointwise algebra

    def dot(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Pointwise u.v over the component axis."""
        return np.sum(u * v, axis=-self.d - 1)

    def times(self, f: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Pointwise scalar field times vector field."""
        return np.expand_dims(f, -self.d - 1) * v

    def _to_fine(self, f: np.ndarray, m: int) -> np.ndarray:
        fh = sfft.fftn(f, axes=self.axes)
        nyquist = self.n // 2
        for axis in self.axes:
            index = [slice(None)] * fh.ndim
            index[axis] = nyquist
            fh[tuple(index)] = 0.0
        fh = sfft.fftshift(fh, axes=self.axes)
        padded = np.zeros(fh.shape[: fh.ndim - self.d] + (m,) * self.d, dtype=complex)
        start = (m - self.n) // 2
        window = (...,) + (slice(start, start + self.n),) * self.d
        padded[window] = fh
        padded = sfft.ifftshift(padded, axes=self.axes)
        return sfft.ifftn(padded, axes=self.axes).real * (m / self.n) ** self.d

    def _from_fine(self, g: np.ndarray, m: int) -> np.ndarray:
        gh = sfft.fftshift(sfft.fftn(g, axes=self.axes), axes=self.axes)
        start = (m - self.n) // 2
        window = (...,) + (slice(start, start + self.n),) * self.d
        fh = sfft.ifftshift(gh[window], axes=self.axes) * (self.n / m) ** self.d
        nyquist = self.n // 2
        for axis in self.axes:
            index = [slice(None)] * fh.ndim
            index[axis] = nyquist
            fh[tuple(index)] = 0.0
        return sfft.ifftn(fh, axes=self.axes).real

    def dealias_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pointwise product evaluated on a 3/2-padded grid (2/3 rule).

        Inputs broadcast against each other the way numpy arrays do.
        """
        m = 3 * self.n // 2
        return self._from_fine(self._to_fine(a, m) * self._to_fine(b, m), m)

    # ------------------------------------------------------------------ norms

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Quadrature L2 pairing summed over every component."""
        return float(np.sum(f * g) * self.cell_volume)

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    def sobolev_norm(self, f: np.ndarray, s: float) -> float:
        return self.l2_norm(self.lambda_s(f, s))

    def xs_norm(self, v: np.ndarray, s: float, mu: float) -> float:
        """|v|_{X^s}^2 = |v|_{H^s}^2 + mu |div_gamma v|_{H^s}^2."""
        base = self.sobolev_norm(v, s) ** 2
        if mu == 0:
            return float(np.sqrt(base))
        return float(np.sqrt(base + mu * self.sobolev_norm(self.div_gamma(v), s) ** 2))

    def sup_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f))) if np.size(f) else 0.0

    # ------------------------------------------------------------------ flat elliptic symbols

    def flat_elliptic_apply(self, v: np.ndarray, alpha: float, beta: float = 0.0) -> np.ndarray:
        """(I - alpha grad div - beta perp_grad perp_div) v."""
        out = v - alpha * self.grad_gamma(self.div_gamma(v))
        if beta and self.d == 2:
            out = out - beta * self.perp_grad(self.perp_div(v))
        return out

    def flat_elliptic_inverse(self, v: np.ndarray, alpha: float, beta: float = 0.0) -> np.ndarray:
        """Exact inverse of ``flat_elliptic_apply`` on the torus.

        The longitudinal and transverse parts of each mode decouple, so the
        inverse divides them by 1 + alpha|xi|^2 and 1 + beta|xi|^2.
        """
        out = np.array(v, dtype=float, copy=True)
        if alpha:
            div_hat = sum(s * self.forward(self._component(v, j)) for j, s in enumerate(self.derivative_symbols))
            div_hat = div_hat * (alpha / (1.0 + alpha * self.ksq))
            out = out + np.stack(
                [self.inverse(s * div_hat) for s in self.derivative_symbols], axis=-self.d - 1
            )
        if beta and self.d == 2:
            dx, dy = self.derivative_symbols
            curl_hat = -dy * self.forward(self._component(v, 0)) + dx * self.forward(self._component(v, 1))
            curl_hat = curl_hat * (beta / (1.0 + beta * self.ksq))
            out = out + np.stack([self.inverse(-dy * curl_hat), self.inverse(dx * curl_hat)], axis=-self.d - 1)
        return out

    # ------------------------------------------------------------------ single modes

    def mode_index(self, k: float, axis: int = 0) -> int:
        """Lattice index of the physical wavenumber ``k`` along ``axis``."""
        m = k * self.lengths[axis] / (2 * np.pi)
        index = int(round(m))
        if abs(m - index) > 1e-9 or not 0 <= index < self.n // 2:
            raise GridError(f"wavenumber {k} is not representable on axis {axis} (L={self.lengths[axis]}, n={self.n})")
        return index

    def mode_coefficient(self, f: np.ndarray, k: float) -> float:
        """Signed cos(kx) coefficient of ``f``, averaged over the transverse axis."""
        index = self.mode_index(k, axis=0)
        line = np.mean(f, axis=tuple(range(1, self.d))) if self.d > 1 else f
        coeff = sfft.rfft(line)[index] / self.n
        return float(coeff.real if index == 0 else 2.0 * coeff.real)
