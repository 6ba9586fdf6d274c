"""Periodic uniform grid, skew-adjoint x-derivatives and the D / D* transport pair."""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SCHEMES = ("central2", "central4", "spectral_fourier")


@dataclass(frozen=True)
class Grid:
    x_min: float = -4.0
    x_max: float = 4.0
    n_points: int = 512
    scheme: str = "central4"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.n_points < 8:
            raise ValueError("n_points must be >= 8")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown derivative scheme {self.scheme!r}")
        if self.scheme == "spectral_fourier" and self.n_points % 2:
            raise ValueError("spectral_fourier needs an even number of points")

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def dx(self):
        return self.length / self.n_points

    @cached_property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n_points)

    @cached_property
    def _wavenumbers(self):
        k = 2 * math.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        # drop the Nyquist mode so the operator stays real and skew-symmetric
        k[self.n_points // 2] = 0.0
        return k

    def max_symbol(self):
        """Largest ``|symbol|`` of the discrete derivative (units 1/length)."""
        if self.scheme == "central2":
            return 1.0 / self.dx
        if self.scheme == "central4":
            c = 1.0 - math.sqrt(1.5)
            s = math.sqrt(1.0 - c * c)
            return (8 * s - 2 * s * c) / (6 * self.dx)
        return float(np.max(np.abs(self._wavenumbers)))

    def ddx(self, f):
        """Periodic derivative along the last axis."""
        f = np.asarray(f)
        if self.scheme == "central2":
            return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2 * self.dx)
        if self.scheme == "central4":
            return (
                8 * (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1))
                - (np.roll(f, -2, axis=-1) - np.roll(f, 2, axis=-1))
            ) / (12 * self.dx)
        out = np.fft.ifft(1j * self._wavenumbers * np.fft.fft(f, axis=-1), axis=-1)
        return out if np.iscomplexobj(f) else out.real

    def inner_product(self, f, g):
        """Rectangle-rule ``dx * sum f conj(g)`` over the last axis."""
        f = np.asarray(f)
        g = np.asarray(g)
        if f.shape[-1] != self.n_points or g.shape[-1] != self.n_points:
            raise ValueError("field length does not match the grid")
        if f.shape != g.shape:
            raise ValueError("fields have different shapes")
        return self.dx * np.sum(f * np.conj(g), axis=-1)

    def norm(self, f):
        return math.sqrt(float(np.sum(np.real(self.inner_product(f, f)))))

    def boundary_mass(self, f, fraction=0.1):
        """Share of ``sum |f|**2`` in the outer ``fraction`` of the domain."""
        f = np.asarray(f)
        width = fraction * self.length / 2
        edge = (self.x < self.x_min + width) | (self.x >= self.x_max - width)
        dens = np.abs(f) ** 2
        total = float(np.sum(dens))
        if total == 0.0:
            return 0.0
        return float(np.sum(dens[..., edge])) / total


def ddx(grid, f):
    return grid.ddx(f)


def apply_D(grid, pot, f):
    """``D f = f' + V'(x) f``."""
    return grid.ddx(f) + pot.deriv(grid.x, 1) * f


def apply_Dstar(grid, pot, f):
    """``D* f = -f' + V'(x) f``, the adjoint of :func:`apply_D`."""
    return -grid.ddx(f) + pot.deriv(grid.x, 1) * f


def inner_product(grid, f, g):
    return grid.inner_product(f, g)
