"""Periodic torus discretization: grids, transforms, symbols, norms.

The domain is [-pi, pi]^d sampled on n points per dimension.  Transform
convention (it matters for every energy formula downstream): the forward
transform is the plain sum ``F_k = sum_x f(x) exp(-i k.x)`` over the grid
points, the inverse divides by n^d.  Because the grid starts at -pi rather
than 0, the forward transform is the FFT times the phase (-1)^(k1+...+kd).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TorusGrid",
    "Field",
    "OperatorSymbol",
    "transform",
    "apply_symbol",
    "nonlinear_term",
    "mean_project",
    "norm",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on [-pi, pi]^d, d <= 3, n even points per dimension."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis_coords(self) -> np.ndarray:
        return -np.pi + self.spacing * np.arange(self.n)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of physical coordinates, indexing='ij'."""
        x = self.axis_coords()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavevector component along each axis, FFT layout."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return tuple(np.meshgrid(*([k] * self.dim), indexing="ij"))

    def ksq(self) -> np.ndarray:
        ks = self.wavenumbers()
        return sum(k * k for k in ks)

    def phase(self) -> np.ndarray:
        """(-1)^(k1+...+kd), relating the FFT to the -pi-based transform."""
        ktot = sum(self.wavenumbers())
        return np.where(np.asarray(ktot).astype(np.int64) % 2 == 0, 1.0, -1.0)

    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with max_i |k_i| <= n/3."""
        ks = self.wavenumbers()
        cut = self.n / 3.0
        keep = np.ones(self.shape, dtype=bool)
        for k in ks:
            keep &= np.abs(k) <= cut
        return keep


class Field:
    """Scalar field on a TorusGrid with dual physical/spectral storage.

    Value-like: operations return new fields.  Either representation may be
    supplied; the other is computed on demand and cached.
    """

    __slots__ = ("grid", "_phys", "_spec")

    def __init__(self, grid: TorusGrid, physical=None, spectral=None):
        if physical is None and spectral is None:
            raise ValueError("need physical or spectral data")
        self.grid = grid
        self._phys = None if physical is None else np.asarray(physical, dtype=float)
        self._spec = None if spectral is None else np.asarray(spectral, dtype=complex)
        for a in (self._phys, self._spec):
            if a is not None and a.shape != grid.shape:
                raise ValueError(f"data shape {a.shape} != grid shape {grid.shape}")

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "Field":
        return cls(grid, physical=fn(*grid.coords()))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "Field":
        return cls(grid, physical=np.full(grid.shape, float(value)))

    @property
    def physical(self) -> np.ndarray:
        if self._phys is None:
            ph = self.grid.phase()
            self._phys = np.fft.ifftn(self._spec * ph).real
        return self._phys

    @property
    def spectral(self) -> np.ndarray:
        if self._spec is None:
            ph = self.grid.phase()
            self._spec = np.fft.fftn(self._phys) * ph
        return self._spec

    @property
    def has_physical(self) -> bool:
        return self._phys is not None

    @property
    def has_spectral(self) -> bool:
        return self._spec is not None

    def copy(self) -> "Field":
        return Field(self.grid,
                     None if self._phys is None else self._phys.copy(),
                     None if self._spec is None else self._spec.copy())

    def mean(self) -> float:
        if self._phys is not None:
            return float(self._phys.mean())
        return float(self._spec.flat[0].real) / self.grid.n ** self.grid.dim


def transform(f: Field, direction: str) -> Field:
    """Force one representation: 'forward' fills spectral, 'inverse' physical."""
    if direction == "forward":
        return Field(f.grid, physical=f.physical, spectral=f.spectral)
    if direction == "inverse":
        _ = f.physical
        return Field(f.grid, physical=f.physical, spectral=f._spec)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


class OperatorSymbol:
    """Real Fourier multiplier given as a function of |k|^2.

    Covers all generators used here (functions of the Laplacian); radial
    symmetry comes for free.
    """

    def __init__(self, fn_of_ksq, label: str = ""):
        self._fn = fn_of_ksq
        self.label = label

    def eval_at_mode(self, kvec) -> float:
        ksq = float(sum(k * k for k in np.atleast_1d(kvec)))
        return float(self._fn(ksq))

    def on_grid(self, grid: TorusGrid) -> np.ndarray:
        return np.asarray(self._fn(grid.ksq()), dtype=float)

    @classmethod
    def laplacian(cls) -> "OperatorSymbol":
        return cls(lambda ksq: -ksq, "laplacian")

    @classmethod
    def allen_cahn_generator(cls, nu: float) -> "OperatorSymbol":
        """nu*Laplacian + 1 (the linear part of the cubic double-well force)."""
        return cls(lambda ksq: 1.0 - nu * ksq, f"ac(nu={nu:g})")

    @classmethod
    def cahn_hilliard_generator(cls, nu: float) -> "OperatorSymbol":
        """-nu*Laplacian^2 - Laplacian."""
        return cls(lambda ksq: ksq - nu * ksq * ksq, f"ch(nu={nu:g})")


def apply_symbol(f: Field, sym: OperatorSymbol) -> Field:
    return Field(f.grid, spectral=f.spectral * sym.on_grid(f.grid))


def nonlinear_term(f: Field, dealias: bool = True) -> Field:
    """Pointwise cube of the field, dealiased by the two-thirds rule.

    Only the cubic part of the double-well force; the linear -phi is folded
    into the generator symbols above.
    """
    if dealias:
        spec = np.where(f.grid.dealias_mask(), f.spectral, 0.0)
        ph = np.fft.ifftn(spec * f.grid.phase()).real
    else:
        ph = f.physical
    return Field(f.grid, physical=ph ** 3)


def mean_project(f: Field) -> Field:
    """Zero the k=0 coefficient (mean-free projection)."""
    spec = f.spectral.copy()
    spec.flat[0] = 0.0
    return Field(f.grid, spectral=spec)


def norm(f: Field, kind: str = "l2", s: float | None = None) -> float:
    """Parseval-based norm: 'l2', 'h1', or 'hs' with explicit order s.

    Sobolev weights are (1 + |k|^2)^s; 'h1' is s=1.
    """
    g = f.grid
    dens = np.abs(f.spectral) ** 2
    kind = kind.lower()
    if kind == "l2":
        w = 1.0
    elif kind == "h1":
        w = 1.0 + g.ksq()
    elif kind == "hs":
        if s is None:
            raise ValueError("kind='hs' needs the order s")
        w = (1.0 + g.ksq()) ** s
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    total = float(np.sum(w * dens)) * (2.0 * np.pi) ** g.dim / g.n ** (2 * g.dim)
    return np.sqrt(total)


# ---------------------------------------------------------------------------
# FPF1 snapshot format: magic 'FPF1', little-endian u32 dim, u32 n,
# f64 alpha, f64 nu, then n^d f64 physical values in row-major order.

_FPF1_MAGIC = b"FPF1"
_FPF1_HEAD = struct.Struct("<II dd")


def save_field(path, f: Field, alpha: float, nu: float) -> None:
    g = f.grid
    data = np.ascontiguousarray(f.physical, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_FPF1_MAGIC)
        fh.write(_FPF1_HEAD.pack(g.dim, g.n, float(alpha), float(nu)))
        fh.write(data.tobytes())


def load_field(path) -> tuple[Field, float, float]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FPF1_MAGIC:
            raise ValueError(f"not an FPF1 file: magic {magic!r}")
        dim, n, alpha, nu = _FPF1_HEAD.unpack(fh.read(_FPF1_HEAD.size))
        grid = TorusGrid(dim, n)
        raw = fh.read(8 * n ** dim)
        vals = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).astype(float)
    return Field(grid, physical=vals), alpha, nu
