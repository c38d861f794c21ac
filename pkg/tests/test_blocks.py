"""Sparse spike fields must agree exactly with the dense transform pipeline."""

import numpy as np
import pytest

from qdnls.blocks import SpikeField, from_dense, product, trilinear_pairing
from qdnls.decomp import AngularSector, TimeSpaceField, l2_norm_tx, lp_project
from qdnls.fields import Grid2D

GRID = Grid2D(np.pi, 32)  # unit frequency step
WINDOW = 2 * np.pi        # unit time-frequency step
RNG = np.random.default_rng(77)


def sparse_random(n, rng=RNG, kmax=4, taumax=6):
    tau = rng.integers(-taumax, taumax + 1, n).astype(np.int64)
    k1 = rng.integers(-kmax, kmax + 1, n).astype(np.int64)
    k2 = rng.integers(-kmax, kmax + 1, n).astype(np.int64)
    amp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return SpikeField(1.0, 1.0, tau, k1, k2, amp).deduped()


def to_dense(sp):
    spec = np.zeros((32, 32, 32), complex)
    spec[sp.tau_idx % 32, sp.k1_idx % 32, sp.k2_idx % 32] = sp.amp
    return TimeSpaceField(GRID, WINDOW, spec)


class TestAgainstDense:
    def test_l2_norm_matches(self):
        a = sparse_random(40)
        assert a.l2_norm() == pytest.approx(l2_norm_tx(to_dense(a)), rel=1e-14)

    def test_product_matches_pointwise_product(self):
        a, b = sparse_random(40), sparse_random(40)
        dense = TimeSpaceField.from_physical(GRID, WINDOW,
                                             to_dense(a).values * to_dense(b).values)
        sparse = to_dense(product(a, b))
        err = np.max(np.abs(sparse.spectrum - dense.spectrum))
        assert err <= 1e-13 * np.max(np.abs(dense.spectrum))

    def test_trilinear_matches_integral(self):
        a, b, c = sparse_random(25), sparse_random(25), sparse_random(25)
        da, db, dc = to_dense(a), to_dense(b), to_dense(c)
        h = GRID.spacing
        dt = WINDOW / 32
        dense = np.sum(da.values * db.values * dc.values) * h * h * dt
        assert trilinear_pairing(a, b, c) == pytest.approx(dense, abs=1e-12)

    def test_lp_weight_matches_projection(self):
        a = sparse_random(60, kmax=10)
        lhs = to_dense(a.lp_weight(4)).spectrum
        rhs = lp_project(to_dense(a), 4).spectrum
        assert np.max(np.abs(lhs - rhs)) <= 1e-14

    def test_from_dense_roundtrip(self):
        a = sparse_random(30)
        via = from_dense(to_dense(a)).deduped()
        assert via.l2_norm() == pytest.approx(a.l2_norm(), rel=1e-14)


class TestOperations:
    def test_dedupe_merges(self):
        tau = np.array([1, 1], dtype=np.int64)
        k = np.array([2, 2], dtype=np.int64)
        f = SpikeField(1.0, 1.0, tau, k, k, np.array([1.0 + 0j, 2.0 + 0j]))
        d = f.deduped()
        assert len(d.amp) == 1 and d.amp[0] == 3.0

    def test_conj_reflects(self):
        a = sparse_random(10)
        dense = TimeSpaceField.from_physical(GRID, WINDOW, np.conj(to_dense(a).values))
        sparse = to_dense(a.conj())
        assert np.max(np.abs(sparse.spectrum - dense.spectrum)) <= 1e-14

    def test_sector_weight_zero_mode_convention(self):
        f = SpikeField(1.0, 1.0, np.zeros(1, np.int64), np.zeros(1, np.int64),
                       np.zeros(1, np.int64), np.ones(1, complex))
        assert f.sector_weight(AngularSector(64, 0)).amp[0] == 1.0
        assert f.sector_weight(AngularSector(64, 5)).amp[0] == 0.0

    def test_modulation_weight(self):
        f = SpikeField(1.0, 1.0, np.array([-4], np.int64), np.array([2], np.int64),
                       np.array([0], np.int64), np.ones(1, complex))
        # tau + sigma |xi|^2 = -4 + 1*4 = 0: only the L = 1 block keeps it
        assert f.modulation_weight(1.0, 1).amp[0] == 1.0
        assert f.modulation_weight(1.0, 4).amp[0] == 0.0

    def test_index_bounds_checked(self):
        with pytest.raises(ValueError, match="exceeds"):
            SpikeField(1.0, 1.0, np.array([0], np.int64), np.array([2**13], np.int64),
                       np.array([0], np.int64), np.ones(1, complex)).deduped()

    def test_mismatched_lattice_rejected(self):
        a = sparse_random(5)
        b = SpikeField(0.5, 1.0, a.tau_idx, a.k1_idx, a.k2_idx, a.amp)
        with pytest.raises(ValueError, match="lattice"):
            product(a, b)
