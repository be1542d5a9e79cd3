"""Trigonometric polynomials on R^2/Z^2 and vector fields with trigonometric coefficients.

f = sum a_(m,n) exp(2*pi*i*(m*x + n*y)); the support is finite and coefficients below
PRUNE_TOL are dropped after every operation.
"""
from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

__all__ = ["Mode", "PRUNE_TOL", "TrigPoly", "VectorField", "grid_points", "sum_polys"]

Mode = tuple[int, int]
PRUNE_TOL = 1e-15
TWO_PI_I = 2j * np.pi


def grid_points(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample points (i/N, j/N), first index along x."""
    t = np.arange(N) / N
    return np.meshgrid(t, t, indexing="ij")


@dataclass(frozen=True, eq=False)
class TrigPoly:
    coeffs: Mapping[Mode, complex]

    def __post_init__(self) -> None:
        clean = {
            (int(m), int(n)): complex(c)
            for (m, n), c in self.coeffs.items()
            if abs(c) >= PRUNE_TOL
        }
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    # -- constructors
    @classmethod
    def zero(cls) -> TrigPoly:
        return cls({})

    @classmethod
    def constant(cls, value: complex) -> TrigPoly:
        return cls({(0, 0): value})

    @classmethod
    def mode(cls, m: int, n: int, value: complex = 1.0) -> TrigPoly:
        return cls({(m, n): value})

    @classmethod
    def cos(cls, m: int, n: int) -> TrigPoly:
        """cos(2*pi*(m*x + n*y))."""
        return cls({(m, n): 0.5, (-m, -n): 0.5}) if (m, n) != (0, 0) else cls.constant(1.0)

    @classmethod
    def sin(cls, m: int, n: int) -> TrigPoly:
        return cls({(m, n): -0.5j, (-m, -n): 0.5j})

    @classmethod
    def random(
        cls, rng: np.random.Generator, degree: int, *, real: bool = False, scale: float = 1.0
    ) -> TrigPoly:
        """Random polynomial with modes |m|, |n| <= degree and Gaussian coefficients."""
        coeffs: dict[Mode, complex] = {}
        for m in range(-degree, degree + 1):
            for n in range(-degree, degree + 1):
                coeffs[(m, n)] = scale * complex(rng.normal(), rng.normal())
        poly = cls(coeffs)
        return (poly + poly.conj()) * 0.5 if real else poly

    # -- algebra
    def __add__(self, other: TrigPoly | complex) -> TrigPoly:
        other = _as_poly(other)
        out = dict(self.coeffs)
        for mode, c in other.coeffs.items():
            out[mode] = out.get(mode, 0.0) + c
        return TrigPoly(out)

    __radd__ = __add__

    def __neg__(self) -> TrigPoly:
        return TrigPoly({mode: -c for mode, c in self.coeffs.items()})

    def __sub__(self, other: TrigPoly | complex) -> TrigPoly:
        return self + (-_as_poly(other))

    def __rsub__(self, other: complex) -> TrigPoly:
        return _as_poly(other) - self

    def __mul__(self, other: TrigPoly | complex) -> TrigPoly:
        if not isinstance(other, TrigPoly):
            return TrigPoly({mode: c * other for mode, c in self.coeffs.items()})
        out: dict[Mode, complex] = {}
        for (m1, n1), c1 in self.coeffs.items():
            for (m2, n2), c2 in other.coeffs.items():
                key = (m1 + m2, n1 + n2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return TrigPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> TrigPoly:
        return self * (1.0 / scalar)

    def conj(self) -> TrigPoly:
        return TrigPoly({(-m, -n): np.conj(c) for (m, n), c in self.coeffs.items()})

    def apply_symbol(self, symbol: Callable[[int, int], complex]) -> TrigPoly:
        """Fourier multiplier: each a_(m,n) is multiplied by symbol(m, n)."""
        return TrigPoly({(m, n): c * symbol(m, n) for (m, n), c in self.coeffs.items()})

    # -- calculus
    def dx(self) -> TrigPoly:
        return self.apply_symbol(lambda m, n: TWO_PI_I * m)

    def dy(self) -> TrigPoly:
        return self.apply_symbol(lambda m, n: TWO_PI_I * n)

    def derivative(self, vx: complex, vy: complex) -> TrigPoly:
        """Directional derivative along the constant vector vx*d/dx + vy*d/dy."""
        return self.apply_symbol(lambda m, n: TWO_PI_I * (vx * m + vy * n))

    def gradient(self) -> tuple[TrigPoly, TrigPoly]:
        return self.dx(), self.dy()

    # -- inspection
    @property
    def degree(self) -> int:
        return max((max(abs(m), abs(n)) for m, n in self.coeffs), default=0)

    @property
    def constant_term(self) -> complex:
        return self.coeffs.get((0, 0), 0.0)

    def max_norm(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def allclose(self, other: TrigPoly | complex, tol: float = 1e-12) -> bool:
        return (self - _as_poly(other)).max_norm() <= tol

    def is_real(self, tol: float = 1e-14) -> bool:
        return self.allclose(self.conj(), tol)

    def is_constant(self) -> bool:
        return all(mode == (0, 0) for mode in self.coeffs)

    def within_band(self, half_width: float) -> bool:
        return all(abs(m) < half_width and abs(n) < half_width for m, n in self.coeffs)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for (m, n), c in self.coeffs.items():
            out += c * np.exp(TWO_PI_I * (m * x + n * y))
        return out

    def on_grid(self, N: int) -> np.ndarray:
        x, y = grid_points(N)
        return self.evaluate(x, y)

    def sup_norm(self, samples: int = 256) -> float:
        """max |f| estimated on a dense grid."""
        return float(np.max(np.abs(self.on_grid(samples))))

    def __repr__(self) -> str:
        terms = ", ".join(f"{mode}: {c:.6g}" for mode, c in self.coeffs.items())
        return f"TrigPoly({{{terms}}})"


def _as_poly(value: TrigPoly | complex) -> TrigPoly:
    return value if isinstance(value, TrigPoly) else TrigPoly.constant(value)


def sum_polys(polys: Iterable[TrigPoly]) -> TrigPoly:
    out = TrigPoly.zero()
    for p in polys:
        out = out + p
    return out


@dataclass(frozen=True, eq=False)
class VectorField:
    """X = x * d/dx + y * d/dy with trigonometric coefficient functions."""

    x: TrigPoly
    y: TrigPoly

    @classmethod
    def constant(cls, vx: complex, vy: complex) -> VectorField:
        return cls(TrigPoly.constant(vx), TrigPoly.constant(vy))

    @classmethod
    def along(cls, h: TrigPoly, vx: complex, vy: complex) -> VectorField:
        """h times the constant vector (vx, vy)."""
        return cls(h * vx, h * vy)

    def __call__(self, f: TrigPoly) -> TrigPoly:
        return self.x * f.dx() + self.y * f.dy()

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(self.x + other.x, self.y + other.y)

    def __mul__(self, scalar: complex | TrigPoly) -> VectorField:
        return VectorField(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def conj(self) -> VectorField:
        return VectorField(self.x.conj(), self.y.conj())

    def is_constant(self) -> bool:
        return self.x.is_constant() and self.y.is_constant()

    def components_on_grid(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        return self.x.on_grid(N), self.y.on_grid(N)
