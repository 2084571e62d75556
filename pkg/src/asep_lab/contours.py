"""Complex contours with quadrature nodes and weights.

Every contour carries nodes z_i and weights w_i such that

    (1 / 2 pi i) * integral f(z) dz  ~=  sum_i w_i f(z_i),

i.e. the 1/(2 pi i) measure factor lives in the weights.  Closed analytic
curves (circles) use the trapezoid rule, which is spectrally accurate for
periodic analytic integrands; straight pieces (rectangle edges, vertical
segments) use Gauss-Legendre panels.  Node counts are powers of two so a
contour can be exactly halved for convergence-by-doubling estimates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

_TWO_PI_I = 2j * np.pi


def _check_count(n: int) -> None:
    if n < 8 or n & (n - 1):
        raise GeometryError(f"node count must be a power of two >= 8, got {n}")


@dataclass(frozen=True)
class Contour:
    """A quadrature-ready contour; ``spec`` records how to rebuild it."""

    kind: str
    spec: tuple
    nodes: np.ndarray
    weights: np.ndarray
    closed: bool

    def __len__(self) -> int:
        return len(self.nodes)

    def halved(self) -> "Contour":
        """Same geometry at half the node count (for error estimates)."""
        return build_contour(self.kind, *self.spec, nodes=len(self.nodes) // 2)

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * values))


def circle(center: complex, radius: float, nodes: int = 256) -> Contour:
    """Counterclockwise circle; trapezoid nodes at angles 2*pi*j/N."""
    _check_count(nodes)
    if radius <= 0:
        raise GeometryError(f"radius must be positive, got {radius}")
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    e = np.exp(1j * theta)
    z = center + radius * e
    # dz = i r e^{i theta} dtheta, dtheta = 2 pi / N
    w = (1j * radius * e) * (2.0 * np.pi / nodes) / _TWO_PI_I
    return Contour("circle", (center, radius), z, w, True)


def _gauss_panel(z0: complex, z1: complex, n: int):
    x, wx = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (z0 + z1), 0.5 * (z1 - z0)
    return mid + half * x, half * wx / _TWO_PI_I


def rounded_rectangle(x0: float, x1: float, halfheight: float,
                      corner: float | None = None, nodes: int = 256) -> Contour:
    """Counterclockwise rectangle over [x0, x1] x [-h, h] with rounded corners.

    Built from Gauss-Legendre panels on the four edges and trapezoid arcs on
    the four corner quarter-circles (eight panels of nodes/8 points each).
    """
    _check_count(nodes)
    h = halfheight
    if x1 <= x0 or h <= 0:
        raise GeometryError("rectangle needs x1 > x0 and halfheight > 0")
    rc = min(0.5 * h, 0.25 * (x1 - x0)) if corner is None else corner
    if rc <= 0 or rc > h or 2 * rc > (x1 - x0):
        raise GeometryError(f"corner radius {rc} incompatible with rectangle")
    n8 = nodes // 8
    zs, ws = [], []

    def arc(cz, a0, a1):
        x, wx = np.polynomial.legendre.leggauss(n8)
        th = 0.5 * (a1 - a0) * x + 0.5 * (a0 + a1)
        e = np.exp(1j * th)
        zs.append(cz + rc * e)
        ws.append(1j * rc * e * 0.5 * (a1 - a0) * wx / _TWO_PI_I)

    def edge(z0, z1):
        z, w = _gauss_panel(z0, z1, n8)
        zs.append(z)
        ws.append(w)

    edge(complex(x0 + rc, -h), complex(x1 - rc, -h))          # bottom ->
    arc(complex(x1 - rc, -h + rc), -np.pi / 2, 0.0)           # SE corner
    edge(complex(x1, -h + rc), complex(x1, h - rc))           # right ^
    arc(complex(x1 - rc, h - rc), 0.0, np.pi / 2)             # NE corner
    edge(complex(x1 - rc, h), complex(x0 + rc, h))            # top <-
    arc(complex(x0 + rc, h - rc), np.pi / 2, np.pi)           # NW corner
    edge(complex(x0, h - rc), complex(x0, -h + rc))           # left v
    arc(complex(x0 + rc, -h + rc), np.pi, 3 * np.pi / 2)      # SW corner
    return Contour("rounded_rectangle", (x0, x1, halfheight, rc),
                   np.concatenate(zs), np.concatenate(ws), True)


def vertical_segment(real_part: float, height: float, nodes: int = 256) -> Contour:
    """Upward segment real_part + i[-height, height], Gauss-Legendre nodes."""
    _check_count(nodes)
    if height <= 0:
        raise GeometryError(f"imaginary truncation must be positive, got {height}")
    x, wx = np.polynomial.legendre.leggauss(nodes)
    z = real_part + 1j * height * x
    w = 1j * height * wx / _TWO_PI_I
    return Contour("vertical_segment", (real_part, height), z, w, False)


_BUILDERS = {
    "circle": circle,
    "rounded_rectangle": rounded_rectangle,
    "vertical_segment": vertical_segment,
}


def build_contour(kind: str, *spec, nodes: int = 256) -> Contour:
    """Dispatch on contour kind; see the individual constructors."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise GeometryError(f"unknown contour kind {kind!r}") from None
    return builder(*spec, nodes=nodes)


def residue_probe(contour: Contour, pole: complex) -> complex:
    """Quadrature of 1/(z - pole); ~1 for poles inside, ~0 outside."""
    return contour.integrate(1.0 / (contour.nodes - pole))
