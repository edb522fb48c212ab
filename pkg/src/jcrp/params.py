"""Parameters of the two-parameter partition model.

Three regimes are accepted:

* ``two_param(alpha, theta)`` with ``0 <= alpha <= 1`` and ``theta > -alpha``;
* ``negative_kappa(kappa, m)``: ``alpha = -kappa < 0`` and ``theta = m * kappa``;
* ``ewens(lam)``: the one-parameter family, i.e. ``alpha = 0, theta = lam``.

All values are stored as :class:`~fractions.Fraction` so downstream
probabilities stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import ParameterError

Rational = Union[int, Fraction, str]


def as_fraction(x: Rational) -> Fraction:
    """Convert an int, Fraction or ``"p/q"`` string; floats are refused."""
    if isinstance(x, float):
        raise ParameterError(f"float parameter {x!r} refused; pass a Fraction or 'p/q'")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ParameterError(f"cannot read {x!r} as a rational: {exc}") from None


@dataclass(frozen=True)
class ModelParams:
    kind: str
    alpha: Fraction
    theta: Fraction
    kappa: Fraction | None = None
    m: int | None = None

    def __post_init__(self):
        a, t = self.alpha, self.theta
        if self.kind in ("two_param", "ewens"):
            if not 0 <= a <= 1:
                raise ParameterError(f"alpha={a} outside [0, 1]")
            if not t > -a:
                raise ParameterError(f"theta={t} must exceed -alpha={-a}")
            if self.kind == "ewens" and (a != 0 or t <= 0):
                raise ParameterError("Ewens regime needs alpha = 0 and lambda > 0")
        elif self.kind == "negative_kappa":
            if self.kappa is None or self.kappa <= 0:
                raise ParameterError(f"kappa must be positive, got {self.kappa}")
            if not isinstance(self.m, int) or self.m < 1:
                raise ParameterError(f"m must be a positive integer, got {self.m!r}")
            if a != -self.kappa or t != self.m * self.kappa:
                raise ParameterError("inconsistent (alpha, theta) for the negative-kappa regime")
        else:
            raise ParameterError(f"unknown regime {self.kind!r}")

    @classmethod
    def two_param(cls, alpha: Rational, theta: Rational) -> ModelParams:
        return cls("two_param", as_fraction(alpha), as_fraction(theta))

    @classmethod
    def negative_kappa(cls, kappa: Rational, m: int) -> ModelParams:
        k = as_fraction(kappa)
        if isinstance(m, bool) or not isinstance(m, int):
            raise ParameterError(f"m must be a positive integer, got {m!r}")
        return cls("negative_kappa", -k, m * k, kappa=k, m=m)

    @classmethod
    def ewens(cls, lam: Rational) -> ModelParams:
        return cls("ewens", Fraction(0), as_fraction(lam))

    def scaled(self, j: int) -> ModelParams:
        """The same regime with ``(alpha / j, theta / j)``."""
        if self.kind == "negative_kappa":
            return ModelParams.negative_kappa(self.kappa / j, self.m)
        if self.kind == "ewens":
            return ModelParams.ewens(self.theta / j)
        return ModelParams.two_param(self.alpha / j, self.theta / j)

    def new_block_weight(self, num_blocks: int) -> Fraction:
        """Unnormalised chance of opening a new block when ``num_blocks`` exist."""
        return self.theta + self.alpha * num_blocks

    def describe(self) -> str:
        if self.kind == "negative_kappa":
            return f"kappa={self.kappa},m={self.m}"
        if self.kind == "ewens":
            return f"lambda={self.theta}"
        return f"alpha={self.alpha},theta={self.theta}"
