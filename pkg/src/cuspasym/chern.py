"""Exact evaluation of the log-term coefficient from Chern numbers.

The coefficient of the x log x term in the Kahler-Einstein potential near a
smooth divisor D inside an n-dimensional ambient manifold is

    b_tilde = -(2(n-1)/3) * (int_D c1(TD)^{n-2} cup c1(ND)) / (int_D c1(TD)^{n-1}),

with ND the normal bundle.  For a smooth plane curve of degree d >= 4 the
adjunction formula gives deg K_D = d(d-3) and deg ND = d^2, so the
coefficient specializes to 2d / (3(d-3)).  Everything here is exact
rational arithmetic; no floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class ChernData:
    """Chern-number integrals feeding the log-term coefficient.

    n: complex dimension of the ambient manifold (>= 2)
    td_top: int_D c1(TD)^{n-1}
    td_mixed: int_D c1(TD)^{n-2} cup c1(ND)
    """

    n: int
    td_top: Fraction
    td_mixed: Fraction

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"ambient dimension n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "td_top", Fraction(self.td_top))
        object.__setattr__(self, "td_mixed", Fraction(self.td_mixed))


def log_coefficient(data: ChernData) -> Fraction:
    """-(2(n-1)/3) * td_mixed / td_top, exactly.

    td_top = 0 corresponds to a degenerate (non-hyperbolic) divisor where
    the positivity hypothesis fails; rejected.
    """
    if data.td_top == 0:
        raise ValueError("td_top must be nonzero: divisor is degenerate "
                         "(positivity of the adjoint bundle fails on D)")
    return -Fraction(2 * (data.n - 1), 3) * data.td_mixed / data.td_top


def plane_curve_chern(d: int) -> ChernData:
    """Chern data of a smooth degree-d plane curve, d >= 4.

    Adjunction gives genus g = (d-1)(d-2)/2, hence
    td_top = deg c1(TD) = 2 - 2g = -d(d-3); the normal bundle has degree
    d^2, so td_mixed = d^2.
    """
    if not isinstance(d, int) or d <= 3:
        raise ValueError(
            f"plane-curve degree must be an integer >= 4, got {d!r} "
            "(for d <= 3 the adjoint bundle is not positive)")
    return ChernData(n=2, td_top=Fraction(-d * (d - 3)), td_mixed=Fraction(d * d))


def log_coefficient_plane_curve(d: int) -> Fraction:
    """The plane-curve coefficient 2d / (3(d-3)), exactly."""
    return log_coefficient(plane_curve_chern(d))
