"""Frequency-space toolkit: dyadic cutoffs, projections, weighted norms.

Three commuting multiplier families act on fields:

* dyadic frequency blocks  P_N  via psi_N(|xi|),
* modulation blocks        Q_L^sigma  via psi_L(tau + sigma |xi|^2),
* angular sectors          R_j^A  via weights omega_j^A on the circle,

together with the weighted space-time norm

    |u|_{X^{s,b}_sigma} = | <xi>^s <tau + sigma|xi|^2>^b u~(tau, xi) |_{L^2}.

The base bump chi is the standard exp(-1/x) glue (support (-2, 2), == 1 on
[-1, 1]); psi = chi - chi(2 .) and psi_N(t) = psi(t/N) telescope to an
exactly representable partition of unity for power-of-two N.  Angular
weights combine psi offsets on the circle of circumference 2A, so each
sector is a pair of antipodal arcs of width ~ pi/A and the weights of all A
sectors sum to one identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fields import Grid2D, SpectralField


# -- smooth cutoff family ----------------------------------------------------


def _glue(x):
    """exp(-1/x) for x > 0, else 0; the C-infinity transition kernel."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def chi(t):
    """Even smooth bump: 1 on [-1, 1], 0 outside (-2, 2), monotone between."""
    t = np.abs(np.asarray(t, dtype=float))
    up = _glue(2.0 - t)
    down = _glue(t - 1.0)
    with np.errstate(invalid="ignore"):
        val = np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, up / (up + down)))
    return val if val.ndim else float(val)


def psi(t):
    """chi(t) - chi(2t): the difference bump supported on 1/2 < |t| < 2."""
    t = np.asarray(t, dtype=float)
    return chi(t) - chi(2.0 * t)


def psi_dyadic(t, N):
    """psi_N: psi(t/N) for N >= 2, chi(t) for N = 1."""
    if N == 1:
        return chi(t)
    return psi(np.asarray(t, dtype=float) / N)


def dyadic_blocks(limit) -> list:
    """Dyadic numbers 1, 2, 4, ... covering |t| <= limit (support-complete)."""
    out = [1]
    while out[-1] < limit:
        out.append(out[-1] * 2)
    return out


def is_dyadic(N) -> bool:
    n = int(N)
    return n == N and n >= 1 and (n & (n - 1)) == 0


# -- Littlewood-Paley projection --------------------------------------------


def lp_multiplier(grid: Grid2D, N) -> np.ndarray:
    if not is_dyadic(N):
        raise ValueError(f"dyadic block index required, got {N}")
    return psi_dyadic(np.sqrt(grid.xi_sq), N)


def lp_project(field, N):
    """P_N: multiply spatial coefficients by psi_N(|xi|).

    Accepts a SpectralField or a TimeSpaceField; the zero frequency sits in
    the N = 1 block (chi(0) = 1, psi_N(0) = 0 for N >= 2).
    """
    if isinstance(field, TimeSpaceField):
        mult = lp_multiplier(field.grid, N)[None, :, :]
        return field.apply_multiplier(mult)
    return field.apply_multiplier(lp_multiplier(field.grid, N))


# -- angular sectors ---------------------------------------------------------


def _psi_scalar_grid(d):
    return psi(d)


def _angle_index_weights(s, A):
    """omega weights on the circle for fractional sector coordinate s = A*theta/pi.

    Returns (offsets k, weights w_k) stacked so that sector j = k mod A gets
    weight w_k; the five integer offsets around s cover the psi support.
    """
    base = np.floor(s).astype(np.int64)
    offsets = np.arange(-2, 3)
    ks = base[..., None] + offsets
    d = s[..., None] - ks
    num = _psi_scalar_grid(d)
    denom = np.sum(num, axis=-1, keepdims=True)
    return ks, num / denom


@dataclass(frozen=True)
class AngularSector:
    """Sector j of the A-fold angular decomposition (antipodal arc pair).

    A is dyadic >= 64; j in [0, A).  The weight at direction theta is
    psi((s - j) mod A) + psi(A - ((s - j) mod A)) over the common
    normalization, s = A theta / pi; antipodal directions share sectors.
    """

    A: int
    j: int

    def __post_init__(self):
        if not is_dyadic(self.A) or self.A < 64:
            raise ValueError(f"A must be dyadic >= 64, got {self.A}")
        if not 0 <= self.j < self.A:
            raise ValueError(f"sector index j must lie in [0, {self.A}), got {self.j}")

    def weights(self, theta):
        """omega_j^A evaluated at angle(s) theta (radians)."""
        theta = np.asarray(theta, dtype=float)
        s = self.A * theta / np.pi
        ks, w = _angle_index_weights(s, self.A)
        hit = (ks - self.j) % self.A == 0
        return np.sum(np.where(hit, w, 0.0), axis=-1)


def sector_weight_grid(grid: Grid2D, sector: AngularSector) -> np.ndarray:
    """omega_j^A(theta(xi)) on the frequency lattice; zero mode -> sector 0."""
    k1, k2 = grid.kmesh
    theta = np.arctan2(k2, k1)
    w = sector.weights(theta)
    w[0, 0] = 1.0 if sector.j == 0 else 0.0
    return w


def angular_project(field, sector: AngularSector):
    """R_j^A: weight spatial coefficients by the sector's circle weights."""
    if isinstance(field, TimeSpaceField):
        return field.apply_multiplier(sector_weight_grid(field.grid, sector)[None, :, :])
    return field.apply_multiplier(sector_weight_grid(field.grid, sector))


def sector_index(theta, A) -> np.ndarray:
    """Nearest sector center for direction theta: round(A theta/pi) mod A."""
    return np.int64(np.rint(np.asarray(theta, dtype=float) * A / np.pi)) % A


def sector_distance(j1, j2, A):
    """Circular distance min(|j1-j2| mod A, A - |j1-j2| mod A)."""
    d = np.abs(np.asarray(j1) - np.asarray(j2)) % A
    return np.minimum(d, A - d)


# -- time-space fields -------------------------------------------------------


class TimeSpaceField:
    """Complex function on a [0, T) x grid lattice with a (tau, xi) view.

    Canonical storage is the spectral array ``spectrum[r, k1, k2]`` in FFT
    index order with tau_r = r * 2 pi / T (time Nyquist row zeroed).  The
    symmetric normalization keeps the 3D Parseval identity exact:

        sum |u~|^2 dxi^2 dtau == sum |u|^2 h^2 dt.
    """

    def __init__(self, grid: Grid2D, time_window: float, spectrum: np.ndarray):
        if time_window <= 0:
            raise ValueError("time window must be positive")
        spectrum = np.asarray(spectrum, dtype=np.complex128)
        n_t = spectrum.shape[0]
        if n_t < 8 or (n_t & (n_t - 1)) != 0:
            raise ValueError(f"time sample count must be a power of two >= 8, got {n_t}")
        n = grid.points_per_dim
        if spectrum.shape[1:] != (n, n):
            raise ValueError(f"spatial shape must be {(n, n)}")
        mask = self._keep_mask(grid, n_t)
        spectrum = np.where(mask, spectrum, 0.0)
        spectrum.flags.writeable = False
        self.grid = grid
        self.time_window = float(time_window)
        self.spectrum = spectrum

    @staticmethod
    def _keep_mask(grid, n_t):
        tkeep = np.abs(np.fft.fftfreq(n_t, d=1.0 / n_t).astype(np.int64)) < n_t // 2
        return tkeep[:, None, None] & grid.nyquist_mask[None, :, :]

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_physical(cls, grid: Grid2D, time_window: float, values: np.ndarray):
        values = np.asarray(values, dtype=np.complex128)
        n_t = values.shape[0]
        dt = time_window / n_t
        scale = grid.spacing**2 * dt / (2.0 * np.pi) ** 1.5
        spectrum = scale * grid._offset_phase[None, :, :] * np.fft.fftn(values, axes=(0, 1, 2))
        return cls(grid, time_window, spectrum)

    @classmethod
    def zero(cls, grid: Grid2D, time_window: float, n_t: int):
        return cls(grid, time_window, np.zeros((n_t, grid.points_per_dim, grid.points_per_dim), complex))

    @classmethod
    def from_random(cls, grid: Grid2D, time_window: float, n_t: int, rng,
                    band: float | None = None):
        shape = (n_t, grid.points_per_dim, grid.points_per_dim)
        spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        if band is not None:
            spec = np.where(grid.xi_sq[None, :, :] <= band**2, spec, 0.0)
        return cls(grid, time_window, spec)

    @classmethod
    def from_free_wave(cls, grid: Grid2D, time_window: float, n_t: int,
                       data: SpectralField, sigma: float, window=None):
        """Samples of e^{i t sigma Lap} data on the time lattice.

        ``window`` (None | 'smooth') optionally applies the C-infinity taper
        before the time transform; modulation localization of a free wave is
        exact only up to this window's leakage, which callers measure.
        """
        ts = time_window / n_t * np.arange(n_t)
        phases = np.exp(-1j * sigma * np.multiply.outer(ts, grid.xi_sq))
        coeffs = phases * data.coefficients[None, :, :]
        scale = grid.points_per_dim**2 * grid.frequency_step**2 / (2.0 * np.pi)
        values = scale * np.fft.ifft2(grid._offset_phase[None, :, :] * coeffs, axes=(1, 2))
        if window == "smooth":
            values = values * smooth_time_window(n_t)[:, None, None]
        elif window is not None:
            raise ValueError(f"unknown window kind {window!r}")
        return cls.from_physical(grid, time_window, values)

    # -- views -----------------------------------------------------------

    @property
    def n_t(self) -> int:
        return self.spectrum.shape[0]

    @cached_property
    def values(self) -> np.ndarray:
        dt = self.time_window / self.n_t
        scale = self.grid.spacing**2 * dt / (2.0 * np.pi) ** 1.5
        out = np.fft.ifftn(
            self.grid._offset_phase[None, :, :] * self.spectrum, axes=(0, 1, 2)
        ) / scale
        out.flags.writeable = False
        return out

    @cached_property
    def tau(self) -> np.ndarray:
        """Time frequencies tau_r in FFT order."""
        n_t = self.n_t
        return np.fft.fftfreq(n_t, d=1.0 / n_t) * (2.0 * np.pi / self.time_window)

    @property
    def measure(self) -> float:
        """Spectral cell volume dxi^2 dtau."""
        return self.grid.frequency_step**2 * (2.0 * np.pi / self.time_window)

    def apply_multiplier(self, mult) -> "TimeSpaceField":
        return TimeSpaceField(self.grid, self.time_window, self.spectrum * mult)

    def __add__(self, other):
        self._check(other)
        return TimeSpaceField(self.grid, self.time_window, self.spectrum + other.spectrum)

    def __sub__(self, other):
        self._check(other)
        return TimeSpaceField(self.grid, self.time_window, self.spectrum - other.spectrum)

    def _check(self, other):
        if self.grid != other.grid or self.time_window != other.time_window \
                or self.n_t != other.n_t:
            raise ValueError("time-space fields live on different lattices")


def smooth_time_window(n_t: int, margin: float = 0.125) -> np.ndarray:
    """C-infinity taper on [0, 1): 1 on [margin, 1 - margin], 0 at the ends."""
    u = np.arange(n_t) / n_t
    up = _glue(u / margin)
    dn = _glue((1.0 - u) / margin)
    rise = up / (up + _glue(1.0 - u / margin))
    fall = dn / (dn + _glue(1.0 - (1.0 - u) / margin))
    return rise * fall


def l2_norm_tx(tsf: TimeSpaceField) -> float:
    return float(np.linalg.norm(tsf.spectrum) * np.sqrt(tsf.measure))


def physical_l2_norm_tx(tsf: TimeSpaceField) -> float:
    h = tsf.grid.spacing
    dt = tsf.time_window / tsf.n_t
    return float(np.linalg.norm(tsf.values) * np.sqrt(h * h * dt))


def lp_lq_norm(tsf: TimeSpaceField, p: float, q: float) -> float:
    """Mixed norm |u|_{L^p_t L^q_x} on the discrete window."""
    vals = np.abs(tsf.values)
    h = tsf.grid.spacing
    dt = tsf.time_window / tsf.n_t
    if np.isinf(q):
        space = np.max(vals, axis=(1, 2))
    else:
        space = (np.sum(vals**q, axis=(1, 2)) * h * h) ** (1.0 / q)
    if np.isinf(p):
        return float(np.max(space))
    return float((np.sum(space**p) * dt) ** (1.0 / p))


# -- modulation projection ---------------------------------------------------


def modulation_argument(tsf: TimeSpaceField, sigma: float) -> np.ndarray:
    """tau + sigma |xi|^2 on the (tau, xi) lattice."""
    return tsf.tau[:, None, None] + sigma * tsf.grid.xi_sq[None, :, :]


def modulation_project(tsf: TimeSpaceField, sigma: float, L) -> TimeSpaceField:
    """Q_L^sigma: multiply the spectrum by psi_L(tau + sigma |xi|^2)."""
    if not is_dyadic(L):
        raise ValueError(f"dyadic modulation index required, got {L}")
    return tsf.apply_multiplier(psi_dyadic(modulation_argument(tsf, sigma), L))


def modulation_project_geq(tsf: TimeSpaceField, sigma: float, M) -> TimeSpaceField:
    """Q_{>=M}^sigma = sum_{L >= M} Q_L^sigma = 1 - chi(2 (tau+sigma|xi|^2)/M)."""
    if not is_dyadic(M) or M < 2:
        raise ValueError(f"dyadic threshold >= 2 required, got {M}")
    m = modulation_argument(tsf, sigma)
    return tsf.apply_multiplier(1.0 - chi(2.0 * m / M))


def modulation_project_lt(tsf: TimeSpaceField, sigma: float, M) -> TimeSpaceField:
    """Q_{<M} = Id - Q_{>=M}^sigma."""
    if not is_dyadic(M) or M < 2:
        raise ValueError(f"dyadic threshold >= 2 required, got {M}")
    m = modulation_argument(tsf, sigma)
    return tsf.apply_multiplier(chi(2.0 * m / M))


def modulation_blocks(tsf: TimeSpaceField, sigma: float) -> list:
    """Dyadic L values covering every lattice modulation."""
    return dyadic_blocks(float(np.max(np.abs(modulation_argument(tsf, sigma)))) + 1.0)


# -- weighted norms ----------------------------------------------------------


def xsb_norm(tsf: TimeSpaceField, s: float, b: float, sigma: float) -> float:
    """Direct weighted norm | <xi>^s <tau+sigma|xi|^2>^b u~ |_{L^2}."""
    w_space = (1.0 + tsf.grid.xi_sq) ** s
    m = modulation_argument(tsf, sigma)
    w_mod = (1.0 + m * m) ** b
    total = np.sum(w_space[None, :, :] * w_mod * np.abs(tsf.spectrum) ** 2) * tsf.measure
    return float(np.sqrt(total))


def xsb_norm_blocks(tsf: TimeSpaceField, s: float, b: float, sigma: float):
    """Dyadic-block form (sum_N sum_L N^{2s} L^{2b} |Q_L P_N u|^2)^{1/2}.

    Returns (block_norm, direct_norm, ratio); the two are equivalent with
    constants set by the cutoff overlaps, and the ratio is reported so the
    equivalence band is visible in every run.
    """
    xi_abs = np.sqrt(tsf.grid.xi_sq)
    m = modulation_argument(tsf, sigma)
    mag2 = np.abs(tsf.spectrum) ** 2
    total = 0.0
    for N in dyadic_blocks(float(np.max(xi_abs)) + 1.0):
        pn = psi_dyadic(xi_abs, N)
        if not np.any(pn > 0):
            continue
        w_slice = (pn**2)[None, :, :] * mag2
        for L in dyadic_blocks(float(np.max(np.abs(m))) + 1.0):
            ql = psi_dyadic(m, L)
            block = np.sum(w_slice * ql**2) * tsf.measure
            total += N ** (2 * s) * L ** (2 * b) * block
    block_norm = float(np.sqrt(total))
    direct = xsb_norm(tsf, s, b, sigma)
    return block_norm, direct, block_norm / direct if direct > 0 else float("nan")


def xsb_norm_gradient(tsf_pair, s: float, b: float, sigma: float) -> float:
    """Quotient-space norm: X^{s,b} size of the gradient pair (| [u] | = |grad u|)."""
    return float(np.sqrt(sum(xsb_norm(c, s, b, sigma) ** 2 for c in tsf_pair)))
