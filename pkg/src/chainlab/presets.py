"""Ready-made domains used by the demos and the test suite."""

from __future__ import annotations

import math

from .geometry import (
    CircularArc,
    DomainConfig,
    NeckSpec,
    PieceSpec,
    Segment,
    StraightStrip,
    WidthFamily,
)


def rectangle(x0, y0, x1, y1) -> PieceSpec:
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    arcs = [Segment(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    return PieceSpec(arcs)


def square(side=2.0, center=(0.0, 0.0)) -> DomainConfig:
    cx, cy = center
    a = 0.5 * side
    return DomainConfig([rectangle(cx - a, cy - a, cx + a, cy + a)], [], WidthFamily([]))


def disc(radius=1.0, center=(0.0, 0.0)) -> DomainConfig:
    # two half circles so that neither arc closes on itself
    arcs = [
        CircularArc(center, radius, 0.0, math.pi),
        CircularArc(center, radius, math.pi, 2.0 * math.pi),
    ]
    return DomainConfig([PieceSpec(arcs, vertices=[])], [], WidthFamily([]))


def two_squares(width=0.5) -> DomainConfig:
    """Squares ``[-3, -1] x [-1, 1]`` and ``[1, 3] x [-1, 1]`` joined by a
    straight neck of length 2 along the x axis.

    The neck homotopy is ``G(s, t) = (-1 + s, t / 2)``, so the interval
    ``(-w, w)`` gives a neck of width ``w`` (``0 < w < 1``).
    """
    neck = NeckSpec(0, 1, StraightStrip((-1.0, 0.0), (1.0, 0.0), 0.5), 2.0)
    return DomainConfig(
        [rectangle(-3, -1, -1, 1), rectangle(1, -1, 3, 1)],
        [neck],
        WidthFamily([(-width, width)]),
    )
