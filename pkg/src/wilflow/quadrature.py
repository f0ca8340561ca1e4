"""Inner-product quadrature rules on the unit reference element.

Three rules are used throughout: a mass-lumped (trapezoid) rule with
one-sided evaluation of discontinuous factors, a two-point Gauss rule
(exact for cubics, nonnegative weights) and a three-point Gauss rule
(exact for quintics).  Products of piecewise-linear nodal fields with
per-element geometric factors never exceed degree five, so the
three-point rule evaluates the plain L2 inner product exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RuleKind(enum.Enum):
    MASS_LUMPED = "mass_lumped"
    GAUSS2 = "gauss2"
    GAUSS3 = "gauss3"


@dataclass(frozen=True)
class QuadratureRule:
    """Point/weight rule on [0, 1]; weights sum to one."""

    kind: RuleKind
    points: tuple[tuple[float, float], ...]

    @property
    def locations(self) -> np.ndarray:
        return np.array([p for p, _ in self.points])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.points])


_SQRT3 = np.sqrt(3.0)
_SQRT35 = np.sqrt(0.6)

MASS_LUMPED = QuadratureRule(RuleKind.MASS_LUMPED, ((0.0, 0.5), (1.0, 0.5)))
GAUSS2 = QuadratureRule(
    RuleKind.GAUSS2,
    ((0.5 - 0.5 / _SQRT3, 0.5), (0.5 + 0.5 / _SQRT3, 0.5)),
)
GAUSS3 = QuadratureRule(
    RuleKind.GAUSS3,
    (
        (0.5 - 0.5 * _SQRT35, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * _SQRT35, 5.0 / 18.0),
    ),
)

RULES = {rule.kind: rule for rule in (MASS_LUMPED, GAUSS2, GAUSS3)}


def element_inner_product(f, g, rule: QuadratureRule, element_len: float) -> float:
    """One element's contribution to the inner product of f and g.

    ``f`` and ``g`` are sample providers: callables mapping an array of
    rule locations in [0, 1] to factor values there (scalars per point,
    or vectors as rows of a 2-D array, in which case the pointwise dot
    product is integrated).  For the mass-lumped rule the locations are
    the element endpoints and providers must supply the one-sided limits
    taken from within this element.  The result is scaled by
    ``element_len``, the reference length of the element.
    """
    locs = rule.locations
    fv = np.atleast_1d(np.asarray(f(locs), dtype=float))
    gv = np.atleast_1d(np.asarray(g(locs), dtype=float))
    if fv.ndim == 2 or gv.ndim == 2:
        pointwise = np.sum(np.atleast_2d(fv) * np.atleast_2d(gv), axis=-1)
    else:
        pointwise = fv * gv
    return float(element_len * (rule.weights @ pointwise))


def lumped_weights(curve) -> np.ndarray:
    """Per-node weights of the mass-lumped inner product.

    Each node gets half the length of every adjacent segment; open
    boundary nodes have a single adjacent segment.  The weights sum to
    the total curve length.
    """
    lengths = curve.segment_lengths()
    n = curve.node_count
    w = np.zeros(n)
    if curve.is_periodic:
        w += 0.5 * lengths
        w += 0.5 * np.roll(lengths, 1)
    else:
        w[:-1] += 0.5 * lengths
        w[1:] += 0.5 * lengths
    return w
