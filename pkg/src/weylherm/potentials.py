"""Potential models, the Weyl difference quotient and its Taylor remainder."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

KINDS = ("harmonic", "quartic", "callable")


@dataclass(frozen=True)
class Potential:
    """A potential ``V`` with derivatives.

    ``harmonic`` is ``x**2/2``; ``quartic`` is ``x**2/2 + chi*x**4/4``; ``callable``
    wraps user functions ``funcs = (V, V', V'', ...)``.
    """

    kind: str = "harmonic"
    chi: float = 0.0
    funcs: Sequence[Callable] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "quartic" and self.chi < 0:
            raise ValueError("quartic coupling chi must be >= 0")
        if self.kind == "callable":
            if len(self.funcs) < 2:
                raise ValueError("callable potential needs at least V and V'")
            far = np.asarray(self.funcs[0](np.array([-50.0, 50.0])), dtype=float)
            if not np.all(far > float(self.funcs[0](0.0))):
                logger.warning("callable potential does not look confining; continuing anyway")

    @classmethod
    def harmonic(cls):
        return cls("harmonic")

    @classmethod
    def quartic(cls, chi=0.5):
        return cls("quartic", chi=float(chi))

    @classmethod
    def from_callables(cls, *funcs):
        return cls("callable", funcs=tuple(funcs))

    @property
    def is_polynomial(self):
        return self.kind != "callable"

    @property
    def degree(self):
        """Polynomial degree of V (None for callables)."""
        if self.kind == "harmonic":
            return 2
        if self.kind == "quartic":
            return 4 if self.chi != 0 else 2
        return None

    @property
    def max_derivative(self):
        return 4 if self.is_polynomial else len(self.funcs) - 1

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "callable":
            return np.asarray(self.funcs[0](x), dtype=float)
        return 0.5 * x**2 + 0.25 * self.chi * x**4

    def deriv(self, x, n=1):
        if n == 0:
            return self.value(x)
        if n < 0 or n > self.max_derivative:
            raise ValueError(f"derivative order {n} not available for {self.kind} potential")
        x = np.asarray(x, dtype=float)
        if self.kind == "callable":
            return np.asarray(self.funcs[n](x), dtype=float)
        chi = self.chi
        if n == 1:
            return x + chi * x**3
        if n == 2:
            return 1.0 + 3 * chi * x**2
        if n == 3:
            return 6 * chi * x
        return np.full_like(x, 6 * chi)


def v_eval(pot, x):
    return pot.value(x)


def v_deriv(pot, x, n):
    return pot.deriv(x, n)


def weyl_quotient(pot, hbar, x, y):
    """``(V(x + hbar*y/2) - V(x - hbar*y/2)) / hbar``.

    Polynomial kinds use the expanded form ``V'(x) y + chi hbar**2 x y**3 / 4``,
    which is free of cancellation as ``hbar -> 0``.
    """
    if hbar <= 0:
        raise ValueError("hbar must be > 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if pot.kind == "callable":
        h = 0.5 * hbar * y
        return (pot.value(x + h) - pot.value(x - h)) / hbar
    return pot.deriv(x, 1) * y + e_remainder(pot, hbar, x, y)


def e_remainder(pot, hbar, x, y):
    """Remainder of the Weyl quotient after its linear term ``V'(x) y``."""
    if hbar <= 0:
        raise ValueError("hbar must be > 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if pot.kind == "harmonic":
        return np.zeros(np.broadcast(x, y).shape)
    if pot.kind == "quartic":
        return 0.25 * pot.chi * hbar**2 * x * y**3
    h = 0.5 * hbar * y
    return (pot.value(x + h) - pot.value(x - h)) / hbar - pot.deriv(x, 1) * y


def e_bound_coefficient(pot, domain_radius, samples=8193):
    """``sup |V'''|`` over ``[-r, r]``.

    Exact for the polynomial kinds; sampled on a uniform grid (plus the
    endpoints) for callables.
    """
    if domain_radius <= 0:
        raise ValueError("domain_radius must be > 0")
    if pot.kind == "harmonic":
        return 0.0
    if pot.kind == "quartic":
        return 6 * pot.chi * domain_radius
    if pot.max_derivative < 3:
        raise ValueError("callable potential provides no third derivative")
    xs = np.linspace(-domain_radius, domain_radius, samples)
    return float(np.max(np.abs(pot.deriv(xs, 3))))


def remainder_bound(pot, hbar, x, y):
    """Taylor bound ``hbar**2 |y|**3 sup|V'''| / 24`` with the sup taken over ``|xi| <= |x| + |y|``."""
    # valid for hbar <= 2, where |x +- hbar*y/2| <= |x| + |y|
    radius = abs(x) + abs(y)
    return hbar**2 * abs(y) ** 3 * e_bound_coefficient(pot, max(radius, math.ulp(1.0))) / 24
