"""Periodic-grid spectral fields on the square torus [-L, L)^2.

The grid carries the dual frequency lattice xi_k = k * (pi/L) for integer
pairs k with |k_i| < n/2 (the Nyquist row is zeroed so every multiplier is
symmetric and derivatives stay skew-adjoint).  Coefficients follow the
symmetric transform pair

    u_hat(k) = (h^2 / 2pi) * sum_j u(x_j) exp(-i xi_k . x_j),
    u(x_j)   = (dxi^2 / 2pi) * sum_k u_hat(k) exp(+i xi_k . x_j),

so that the plain quadratic sums satisfy Parseval exactly:

    sum_k |u_hat(k)|^2 dxi^2 == sum_j |u(x_j)|^2 h^2.

All operations are pure: they return new fields and never mutate inputs,
so values are safe to share read-only across threads.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

_MAGIC = b"QDNLSFLD"
_TINY = 1e-300


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Square periodic grid: box [-L, L)^2 sampled at n x n points.

    ``frequency_step * half_width == pi`` (lattice duality), and n is a
    power of two >= 8 so dyadic frequency decompositions tile evenly.
    """

    half_width: float
    points_per_dim: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        n = self.points_per_dim
        if n < 8 or not _is_power_of_two(n):
            raise ValueError(f"points_per_dim must be a power of two >= 8, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def frequency_step(self) -> float:
        return np.pi / self.half_width

    @cached_property
    def x(self) -> np.ndarray:
        """1D physical coordinates -L + j*h."""
        n = self.points_per_dim
        return -self.half_width + self.spacing * np.arange(n)

    @cached_property
    def mesh(self):
        """(X1, X2) physical meshgrid, 'ij' indexing."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def k(self) -> np.ndarray:
        """1D integer frequencies in FFT order, Nyquist included as -n/2."""
        n = self.points_per_dim
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def kmesh(self):
        return np.meshgrid(self.k, self.k, indexing="ij")

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes kept (both |k_i| < n/2)."""
        k1, k2 = self.kmesh
        half = self.points_per_dim // 2
        return (np.abs(k1) < half) & (np.abs(k2) < half)

    @cached_property
    def xi(self):
        """(xi1, xi2) frequency meshgrids."""
        k1, k2 = self.kmesh
        return k1 * self.frequency_step, k2 * self.frequency_step

    @cached_property
    def xi_sq(self) -> np.ndarray:
        x1, x2 = self.xi
        return x1 * x1 + x2 * x2

    @cached_property
    def _offset_phase(self) -> np.ndarray:
        # exp(-i xi_k . x_0) with x_0 = (-L, -L): the grid starts off-origin.
        k1, k2 = self.kmesh
        return np.where((k1 + k2) % 2 == 0, 1.0, -1.0)

    @cached_property
    def radial_classes(self):
        """(labels, class |k|^2 values): exact lattice circles k1^2+k2^2 = m.

        A function is radial on the lattice iff its coefficients are constant
        on each class; every radial Fourier multiplier is constant there too,
        so radial projection commutes with all radial multipliers exactly.
        """
        k1, k2 = self.kmesh
        m = (k1 * k1 + k2 * k2).ravel()
        values, labels = np.unique(m, return_inverse=True)
        return labels.reshape(k1.shape), values

    def bandwidth_index(self) -> int:
        """Largest usable |k_i| (Nyquist excluded)."""
        return self.points_per_dim // 2 - 1

    def __repr__(self):
        return f"Grid2D(half_width={self.half_width}, points_per_dim={self.points_per_dim})"


@dataclass(frozen=True)
class SpectralField:
    """Complex scalar field on a Grid2D, stored by Fourier coefficients.

    ``coefficients`` is the full (n, n) array in FFT index order holding
    u_hat(k) in the module's symmetric normalization.  The physical view is
    derived lazily.  Instances are immutable.
    """

    grid: Grid2D
    coefficients: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        n = self.grid.points_per_dim
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.shape != (n, n):
            raise ValueError(f"coefficient array must be {(n, n)}, got {c.shape}")
        c = np.where(self.grid.nyquist_mask, c, 0.0)
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    # -- constructors --------------------------------------------------

    @staticmethod
    def zero(grid: Grid2D) -> "SpectralField":
        return SpectralField(grid, np.zeros((grid.points_per_dim,) * 2, dtype=np.complex128))

    @staticmethod
    def from_physical(grid: Grid2D, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=np.complex128)
        n = grid.points_per_dim
        if values.shape != (n, n):
            raise ValueError(f"physical array must be {(n, n)}, got {values.shape}")
        scale = grid.spacing**2 / (2.0 * np.pi)
        coeffs = scale * grid._offset_phase * np.fft.fft2(values)
        return SpectralField(grid, coeffs)

    @staticmethod
    def from_function(grid: Grid2D, fn) -> "SpectralField":
        x1, x2 = grid.mesh
        return SpectralField.from_physical(grid, fn(x1, x2))

    @staticmethod
    def from_coefficients(grid: Grid2D, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(grid, np.array(coeffs, dtype=np.complex128))

    # -- views ---------------------------------------------------------

    @cached_property
    def values(self) -> np.ndarray:
        """Physical samples u(x_j) on the grid mesh."""
        g = self.grid
        scale = g.points_per_dim**2 * g.frequency_step**2 / (2.0 * np.pi)
        out = scale * np.fft.ifft2(g._offset_phase * self.coefficients)
        out.flags.writeable = False
        return out

    def coefficient_at(self, k1: int, k2: int) -> complex:
        n = self.grid.points_per_dim
        return complex(self.coefficients[k1 % n, k2 % n])

    # -- algebra (grid-checked) -----------------------------------------

    def _check_same_grid(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__

    def conj(self) -> "SpectralField":
        """Complex conjugate (computed in physical space: hat reflects)."""
        n = self.grid.points_per_dim
        idx = (-np.arange(n)) % n
        refl = self.coefficients[np.ix_(idx, idx)]
        return SpectralField(self.grid, np.conj(refl))

    def apply_multiplier(self, multiplier: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * multiplier)


@dataclass(frozen=True)
class VectorField:
    """Pair of SpectralFields on one shared grid (2-component fields)."""

    components: tuple

    def __post_init__(self):
        c1, c2 = self.components
        if c1.grid != c2.grid:
            raise ValueError("vector field components must share one grid")
        object.__setattr__(self, "components", (c1, c2))

    @property
    def grid(self) -> Grid2D:
        return self.components[0].grid

    @staticmethod
    def zero(grid: Grid2D) -> "VectorField":
        return VectorField((SpectralField.zero(grid), SpectralField.zero(grid)))

    def __add__(self, other):
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar):
        return VectorField(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity exponent s for the <xi>^s weighted norms."""

    s: float

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError("Sobolev index must be finite")


# -- transforms and norms ------------------------------------------------


def dft_roundtrip(field: SpectralField) -> SpectralField:
    """Forward-then-inverse transform; returns the input to 1e-12 relative."""
    return SpectralField.from_physical(field.grid, field.values)


def l2_norm(field: SpectralField) -> float:
    """L^2 norm, sqrt(sum |u_hat|^2 dxi^2) == sqrt(sum |u|^2 h^2)."""
    dxi = field.grid.frequency_step
    return float(np.linalg.norm(field.coefficients) * dxi)


def physical_l2_norm(field: SpectralField) -> float:
    h = field.grid.spacing
    return float(np.linalg.norm(field.values) * h)


def sobolev_norm(field: SpectralField, s) -> float:
    """H^s norm: (sum_k <xi_k>^{2s} |u_hat(k)|^2 dxi^2)^{1/2}."""
    s = s.s if isinstance(s, SobolevIndex) else float(s)
    g = field.grid
    weight = (1.0 + g.xi_sq) ** s
    total = np.sum(weight * np.abs(field.coefficients) ** 2) * g.frequency_step**2
    return float(np.sqrt(total))


def homogeneous_norm(field: SpectralField, s) -> float:
    """Homogeneous norm (sum_{k!=0} |xi_k|^{2s} |u_hat|^2 dxi^2)^{1/2}."""
    s = s.s if isinstance(s, SobolevIndex) else float(s)
    g = field.grid
    xi_sq = g.xi_sq.copy()
    xi_sq[0, 0] = 1.0  # excluded below; placeholder avoids 0**negative
    weight = xi_sq**s
    mag2 = np.abs(field.coefficients) ** 2
    mag2_00 = mag2[0, 0]
    total = (np.sum(weight * mag2) - weight[0, 0] * mag2_00) * g.frequency_step**2
    return float(np.sqrt(max(total, 0.0)))


def vector_l2_norm(vf: VectorField) -> float:
    return float(np.sqrt(sum(l2_norm(c) ** 2 for c in vf.components)))


def vector_sobolev_norm(vf: VectorField, s) -> float:
    return float(np.sqrt(sum(sobolev_norm(c, s) ** 2 for c in vf.components)))


# -- multiplier operators --------------------------------------------------


def free_propagator(field: SpectralField, sigma: float, t: float) -> SpectralField:
    """exp(i t sigma Laplacian): multiplies u_hat(k) by exp(-i t sigma |xi_k|^2)."""
    phase = np.exp(-1j * t * sigma * field.grid.xi_sq)
    return field.apply_multiplier(phase)


def free_propagator_vector(vf: VectorField, sigma: float, t: float) -> VectorField:
    return VectorField(tuple(free_propagator(c, sigma, t) for c in vf.components))


def derivative(field: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along axis 0 or 1."""
    xi = field.grid.xi[axis]
    return field.apply_multiplier(1j * xi)


def laplacian(field: SpectralField) -> SpectralField:
    return field.apply_multiplier(-field.grid.xi_sq)


def gradient(field: SpectralField) -> VectorField:
    return VectorField((derivative(field, 0), derivative(field, 1)))


def divergence(vf: VectorField) -> SpectralField:
    return derivative(vf.components[0], 0) + derivative(vf.components[1], 1)


# -- radiality -------------------------------------------------------------


def _circle_means(field: SpectralField) -> np.ndarray:
    """Per-mode circle average over kept (non-Nyquist) lattice modes."""
    grid = field.grid
    labels, _ = grid.radial_classes
    keep = grid.nyquist_mask.ravel()
    lab = labels.ravel()[keep]
    c = field.coefficients.ravel()[keep]
    nclass = labels.max() + 1
    counts = np.bincount(lab, minlength=nclass)
    counts = np.maximum(counts, 1)
    mean_re = np.bincount(lab, weights=c.real, minlength=nclass) / counts
    mean_im = np.bincount(lab, weights=c.imag, minlength=nclass) / counts
    return (mean_re + 1j * mean_im)[labels]


def radial_deviation(field: SpectralField) -> float:
    """Max deviation from the per-circle angular average, relative to max |u_hat|.

    Circles are the exact lattice classes k1^2 + k2^2 = m, the finest angular
    binning the square lattice supports: a rotation-invariant function sampled
    on the lattice is constant on each class, and every radial multiplier is
    class-constant, so multipliers commute with the projection exactly.
    """
    means = np.where(field.grid.nyquist_mask, _circle_means(field), 0.0)
    c = field.coefficients
    scale = max(np.max(np.abs(c)), _TINY)
    return float(np.max(np.abs(c - means)) / scale)


def is_radial(field: SpectralField, tol: float) -> bool:
    return radial_deviation(field) <= tol


def radialize(field: SpectralField) -> SpectralField:
    """Replace each coefficient by its lattice-circle average (idempotent)."""
    return SpectralField(field.grid, _circle_means(field))


def random_field(grid: Grid2D, rng, band: float | None = None) -> SpectralField:
    """Complex Gaussian coefficients, optionally restricted to |xi| <= band."""
    n = grid.points_per_dim
    coeffs = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if band is not None:
        coeffs = np.where(grid.xi_sq <= band**2, coeffs, 0.0)
    return SpectralField(grid, coeffs)


def random_radial_field(grid: Grid2D, rng, band: float | None = None,
                        inner: float = 0.0) -> SpectralField:
    """Radial random field: one Gaussian amplitude per lattice circle."""
    f = random_field(grid, rng, band=band)
    if inner > 0.0:
        f = SpectralField(grid, np.where(grid.xi_sq >= inner**2, f.coefficients, 0.0))
    return radialize(f)


# -- serialization ----------------------------------------------------------


def save_fields(path, fields) -> None:
    """Binary snapshot container.

    Header (little endian): 8-byte magic, int64 version, float64 half_width,
    int64 points_per_dim, int64 component count; payload: per component the
    row-major complex128 coefficient array in FFT index order.
    """
    fields = list(fields)
    grid = fields[0].grid
    for f in fields:
        if f.grid != grid:
            raise ValueError("all components must share one grid")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", 1))
        fh.write(struct.pack("<d", grid.half_width))
        fh.write(struct.pack("<q", grid.points_per_dim))
        fh.write(struct.pack("<q", len(fields)))
        for f in fields:
            fh.write(np.ascontiguousarray(f.coefficients, dtype="<c16").tobytes())


def load_fields(path):
    """Inverse of :func:`save_fields`; returns a list of SpectralField."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"not a field container (magic {magic!r})")
        (version,) = struct.unpack("<q", fh.read(8))
        if version != 1:
            raise ValueError(f"unsupported container version {version}")
        (half_width,) = struct.unpack("<d", fh.read(8))
        (n,) = struct.unpack("<q", fh.read(8))
        (ncomp,) = struct.unpack("<q", fh.read(8))
        grid = Grid2D(half_width, int(n))
        out = []
        for _ in range(ncomp):
            raw = fh.read(16 * n * n)
            arr = np.frombuffer(raw, dtype="<c16").reshape(n, n).astype(np.complex128)
            out.append(SpectralField(grid, arr))
        return out


def field_to_csv(field: SpectralField, fh) -> None:
    """Coefficient dump as 'k1,k2,re,im' rows for inspection."""
    close = False
    if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
        fh = open(fh, "w")
        close = True
    try:
        fh.write("k1,k2,re,im\n")
        k1m, k2m = field.grid.kmesh
        c = field.coefficients
        buf = io.StringIO()
        for a, b, z in zip(k1m.ravel(), k2m.ravel(), c.ravel()):
            buf.write(f"{a},{b},{z.real!r},{z.imag!r}\n")
        fh.write(buf.getvalue())
    finally:
        if close:
            fh.close()
