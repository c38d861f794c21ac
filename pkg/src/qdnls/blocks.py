"""Sparse block-localized time-space data for the estimate sweeps.

Sweeping the product estimates at frequency scales up to ~10^3 would need
dense (tau, xi) lattices far beyond memory, but every quantity involved --
block projections, L^2 norms, products, trilinear pairings -- is exact on
finitely supported spectra.  A :class:`SpikeField` holds finitely many
lattice modes (tau, k1, k2) with complex amplitudes; products become sparse
convolutions with the same normalization as the dense transform pair, so a
dense cross-check at small size agrees to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomp import AngularSector, psi_dyadic

_K_BITS = 13
_T_BITS = 26
_K_OFF = 1 << (_K_BITS - 1)
_T_OFF = 1 << (_T_BITS - 1)


def _encode(tau, k1, k2):
    if np.any(np.abs(k1) >= _K_OFF) or np.any(np.abs(k2) >= _K_OFF):
        raise ValueError(f"spatial index exceeds +-{_K_OFF - 1}")
    if np.any(np.abs(tau) >= _T_OFF):
        raise ValueError(f"time index exceeds +-{_T_OFF - 1}")
    return ((tau + _T_OFF) << (2 * _K_BITS)) | ((k1 + _K_OFF) << _K_BITS) | (k2 + _K_OFF)


@dataclass(frozen=True)
class SpikeField:
    """Finitely supported spectrum on the (dtau Z) x (dxi Z)^2 lattice."""

    dxi: float
    dtau: float
    tau_idx: np.ndarray
    k1_idx: np.ndarray
    k2_idx: np.ndarray
    amp: np.ndarray

    def __post_init__(self):
        n = len(self.amp)
        for name in ("tau_idx", "k1_idx", "k2_idx"):
            arr = getattr(self, name)
            if len(arr) != n or arr.dtype != np.int64:
                raise ValueError(f"{name} must be int64 of length {n}")

    @property
    def measure(self) -> float:
        return self.dxi * self.dxi * self.dtau

    @property
    def xi(self):
        return self.k1_idx * self.dxi, self.k2_idx * self.dxi

    @property
    def xi_sq(self):
        x1, x2 = self.xi
        return x1 * x1 + x2 * x2

    @property
    def tau(self):
        return self.tau_idx * self.dtau

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.amp) * np.sqrt(self.measure))

    def scaled(self, factor) -> "SpikeField":
        return SpikeField(self.dxi, self.dtau, self.tau_idx, self.k1_idx, self.k2_idx,
                          self.amp * factor)

    def normalized(self) -> "SpikeField":
        n = self.l2_norm()
        if n == 0:
            raise ValueError("cannot normalize a zero field")
        return self.scaled(1.0 / n)

    def deduped(self) -> "SpikeField":
        """Merge coincident modes (sum amplitudes)."""
        keys = _encode(self.tau_idx, self.k1_idx, self.k2_idx)
        uniq, inv = np.unique(keys, return_inverse=True)
        amp = np.zeros(len(uniq), dtype=np.complex128)
        np.add.at(amp, inv, self.amp)
        tau = (uniq >> (2 * _K_BITS)) - _T_OFF
        k1 = ((uniq >> _K_BITS) & ((1 << _K_BITS) - 1)) - _K_OFF
        k2 = (uniq & ((1 << _K_BITS) - 1)) - _K_OFF
        return SpikeField(self.dxi, self.dtau, tau.astype(np.int64),
                          k1.astype(np.int64), k2.astype(np.int64), amp)

    # -- multiplier projections ------------------------------------------

    def lp_weight(self, N) -> "SpikeField":
        """P_N weights psi_N(|xi|)."""
        return self.scaled(psi_dyadic(np.sqrt(self.xi_sq), N))

    def modulation_weight(self, sigma, L) -> "SpikeField":
        """Q_L^sigma weights psi_L(tau + sigma |xi|^2)."""
        return self.scaled(psi_dyadic(self.tau + sigma * self.xi_sq, L))

    def sector_weight(self, sector: AngularSector) -> "SpikeField":
        """R_j^A weights omega_j^A(theta(xi)); zero mode belongs to sector 0."""
        x1, x2 = self.xi
        theta = np.arctan2(x2, x1)
        w = sector.weights(theta)
        at_origin = (self.k1_idx == 0) & (self.k2_idx == 0)
        w = np.where(at_origin, 1.0 if sector.j == 0 else 0.0, w)
        return self.scaled(w)

    def conj(self) -> "SpikeField":
        """Spectrum of the complex conjugate: reflect and conjugate."""
        return SpikeField(self.dxi, self.dtau, -self.tau_idx, -self.k1_idx,
                          -self.k2_idx, np.conj(self.amp))


def product(a: SpikeField, b: SpikeField, chunk: int = 4_000_000) -> SpikeField:
    """Spectrum of the pointwise product a * b (sparse convolution).

    Matches the dense convention: F[pq] = (2 pi)^{-3/2} (p~ * q~) with the
    convolution sum carrying one lattice measure.  Pair enumeration is
    chunked to bound memory.
    """
    if a.dxi != b.dxi or a.dtau != b.dtau:
        raise ValueError("operands live on different lattices")
    scale = a.measure / (2.0 * np.pi) ** 1.5
    na, nb = len(a.amp), len(b.amp)
    keys_parts, amp_parts = [], []
    rows = max(1, chunk // max(nb, 1))
    for start in range(0, na, rows):
        sl = slice(start, min(start + rows, na))
        tau = (a.tau_idx[sl, None] + b.tau_idx[None, :]).ravel()
        k1 = (a.k1_idx[sl, None] + b.k1_idx[None, :]).ravel()
        k2 = (a.k2_idx[sl, None] + b.k2_idx[None, :]).ravel()
        amp = (a.amp[sl, None] * b.amp[None, :]).ravel()
        keys_parts.append(_encode(tau, k1, k2))
        amp_parts.append(amp)
    keys = np.concatenate(keys_parts)
    amps = np.concatenate(amp_parts)
    uniq, inv = np.unique(keys, return_inverse=True)
    out = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(out, inv, amps)
    tau = (uniq >> (2 * _K_BITS)) - _T_OFF
    k1 = ((uniq >> _K_BITS) & ((1 << _K_BITS) - 1)) - _K_OFF
    k2 = (uniq & ((1 << _K_BITS) - 1)) - _K_OFF
    return SpikeField(a.dxi, a.dtau, tau.astype(np.int64), k1.astype(np.int64),
                      k2.astype(np.int64), out * scale)


def trilinear_pairing(u: SpikeField, v: SpikeField, w: SpikeField) -> complex:
    """int u v w dx dt = (2 pi)^{-3/2} measure^2 sum_{m1+m2+m3=0} u~ v~ w~."""
    if not (u.dxi == v.dxi == w.dxi and u.dtau == v.dtau == w.dtau):
        raise ValueError("operands live on different lattices")
    uv = product(u, v)
    keys_w = _encode(-w.tau_idx, -w.k1_idx, -w.k2_idx)
    order = np.argsort(keys_w)
    keys_sorted = keys_w[order]
    amp_sorted = w.amp[order]
    keys_uv = _encode(uv.tau_idx, uv.k1_idx, uv.k2_idx)
    pos = np.searchsorted(keys_sorted, keys_uv)
    pos = np.clip(pos, 0, len(keys_sorted) - 1)
    hit = keys_sorted[pos] == keys_uv
    # duplicate w keys are impossible after dedupe; callers pass deduped fields
    total = np.sum(uv.amp[hit] * amp_sorted[pos[hit]])
    return complex(total * w.measure)


_circle_count_cache: dict = {}


def circle_count(m: int) -> int:
    """Number of integer lattice points with k1^2 + k2^2 = m."""
    if m not in _circle_count_cache:
        count = 0
        r = int(np.floor(np.sqrt(m)))
        for k1 in range(-r, r + 1):
            rem = m - k1 * k1
            k2 = int(np.rint(np.sqrt(rem))) if rem >= 0 else -1
            if k2 >= 0 and k1 * k1 + k2 * k2 == m:
                count += 1 if k2 == 0 else 2
        _circle_count_cache[m] = count
    return _circle_count_cache[m]


def radial_projection_norm(field: SpikeField) -> float:
    """L^2 norm of the orthogonal projection onto circle-constant spectra.

    Amplitudes are averaged over each full lattice circle (tau, |k|^2 = m),
    including the circle points the field does not touch, so
    |proj|^2 = sum_classes |sum amp|^2 / #circle * measure.
    """
    m = field.k1_idx**2 + field.k2_idx**2
    keys = (field.tau_idx.astype(np.int64) << 32) ^ m.astype(np.int64)
    uniq, inv = np.unique(keys, return_inverse=True)
    sums = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(sums, inv, field.amp)
    m_of_class = np.zeros(len(uniq), dtype=np.int64)
    m_of_class[inv] = m
    counts = np.array([circle_count(int(mm)) for mm in m_of_class], dtype=float)
    total = np.sum(np.abs(sums) ** 2 / counts)
    return float(np.sqrt(total * field.measure))


def from_dense(tsf) -> SpikeField:
    """SpikeField view of a dense TimeSpaceField's nonzero spectrum."""
    nz = np.nonzero(tsf.spectrum)
    tau_idx = np.fft.fftfreq(tsf.n_t, d=1.0 / tsf.n_t).astype(np.int64)[nz[0]]
    k = tsf.grid.k
    dtau = 2.0 * np.pi / tsf.time_window
    return SpikeField(tsf.grid.frequency_step, dtau, tau_idx,
                      k[nz[1]], k[nz[2]], tsf.spectrum[nz])
