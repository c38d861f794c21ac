"""Lattice scans of the resonance geometry behind the low-modulation regime.

For a frequency triple xi1 + xi2 + xi3 = 0 the best possible joint
modulation over tau1 + tau2 + tau3 = 0 has a closed form: with
a_j = sigma_j |xi_j|^2,

    min over taus of max_j |tau_j + a_j| = |a_1 + a_2 + a_3| / 3

(attained at tau_j = -a_j + (a_1+a_2+a_3)/3; no smaller value exists since
the three shifted values sum to a_1+a_2+a_3).  The scans check two facts:

* when the pairwise sums of the sigmas are all nonzero, every triple whose
  best modulation is small compared to max |xi_j|^2 has comparable
  magnitudes |xi_1| ~ |xi_2| ~ |xi_3|, and
* in the fully resonant regime (theta~ = 0), small modulation forces the
  directions into nearly aligned or nearly antipodal sector pairs.
"""

from __future__ import annotations

import numpy as np

from .decomp import sector_distance, sector_index
from .model import sigma_theta_kappa


def _disk_lattice(radius: int):
    r = int(radius)
    k = np.arange(-r, r + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    keep = k1 * k1 + k2 * k2 <= r * r
    return k1[keep].astype(np.int64), k2[keep].astype(np.int64)


def min_joint_modulation(sigmas, xi1, xi2):
    """|sigma1|xi1|^2 + sigma2|xi2|^2 + sigma3|xi3|^2| / 3 with xi3 = -xi1-xi2."""
    s1, s2, s3 = sigmas
    m1 = np.sum(np.asarray(xi1, float) ** 2, axis=-1)
    m2 = np.sum(np.asarray(xi2, float) ** 2, axis=-1)
    m3 = np.sum((np.asarray(xi1, float) + np.asarray(xi2, float)) ** 2, axis=-1)
    return np.abs(s1 * m1 + s2 * m2 + s3 * m3) / 3.0


def resonance_geometry_scan(sigmas, radius: int, eps: float, *, ratio_threshold=1 / 8,
                            chunk=256):
    """Exhaustive integer scan of the comparability dichotomy.

    Scans every triple xi1 + xi2 + xi3 = 0 with |xi_i| <= radius.  A triple
    is 'low modulation' when its best joint modulation is <= eps * max|xi|^2.
    Reports the smallest magnitude ratio min|xi| / max|xi| among those (the
    comparability constant) and, over triples below ``ratio_threshold``, the
    smallest modulation-to-frequency quotient (the constant of the reverse
    implication).  Requires all pairwise sigma sums nonzero (kappa~ != 0).
    """
    s1, s2, s3 = (float(s) for s in sigmas)
    theta, kappa = sigma_theta_kappa(s1, s2, s3)
    if kappa == 0:
        raise ValueError("scan requires kappa~ != 0 (all pairwise sigma sums nonzero)")
    k1, k2 = _disk_lattice(radius)
    m_all = (k1 * k1 + k2 * k2).astype(np.float64)
    n_pts = len(k1)
    r2max = float(radius * radius)
    min_ratio_lowmod = np.inf
    worst_triple = None
    n_lowmod = 0
    n_total = 0
    c_reverse = np.inf
    for start in range(0, n_pts, chunk):
        sl = slice(start, min(start + chunk, n_pts))
        a1 = k1[sl][:, None]
        a2 = k2[sl][:, None]
        m1 = m_all[sl][:, None]
        b1 = a1 + k1[None, :]
        b2 = a2 + k2[None, :]
        m3 = (b1 * b1 + b2 * b2).astype(np.float64)
        ok = m3 <= r2max
        m2 = m_all[None, :]
        mx = np.maximum(np.maximum(m1, m2), m3)
        ok &= mx > 0
        modulation = np.abs(s1 * m1 + s2 * m2 + s3 * m3) / 3.0
        low = ok & (modulation <= eps * mx)
        n_total += int(np.sum(ok))
        n_lowmod += int(np.sum(low))
        mx_safe = np.where(ok, mx, 1.0)
        mn_all = np.minimum(np.minimum(m1 + 0 * m3, m2 + 0 * m3), m3)
        if np.any(low):
            ratio = np.sqrt(np.where(low, mn_all / mx_safe, np.inf))
            idx = np.unravel_index(np.argmin(ratio), ratio.shape)
            if ratio[idx] < min_ratio_lowmod:
                min_ratio_lowmod = float(ratio[idx])
                worst_triple = (
                    (int(a1[idx[0], 0]), int(a2[idx[0], 0])),
                    (int(k1[idx[1]]), int(k2[idx[1]])),
                    (int(-b1[idx]), int(-b2[idx])),
                )
        # reverse implication: strongly unbalanced triples carry large modulation
        unbalanced = ok & (mn_all < (ratio_threshold**2) * mx)
        if np.any(unbalanced):
            quot = np.where(unbalanced, modulation / mx_safe, np.inf)
            c_reverse = min(c_reverse, float(np.min(quot)))
    return {
        "estimate_id": "resonance_geometry",
        "sigmas": [s1, s2, s3],
        "theta": theta,
        "kappa": kappa,
        "radius": radius,
        "eps": eps,
        "triples_scanned": n_total,
        "low_modulation_triples": n_lowmod,
        "min_ratio_low_modulation": min_ratio_lowmod if np.isfinite(min_ratio_lowmod) else None,
        "worst_triple": worst_triple,
        "ratio_threshold": ratio_threshold,
        "reverse_constant": c_reverse if np.isfinite(c_reverse) else None,
    }


def angular_separation_scan(sigmas, N, a_list, n_samples, rng, *, seed=None):
    """Sector alignment forced by small modulation in the theta~ = 0 regime.

    Samples near-resonant triples with |xi_i| ~ N and best joint modulation
    <= N^2 / A^2, then records the circular sector distances between all
    pairs; the maximum over the sample is the empirical alignment constant
    (the analytic statement is 'bounded', expected <= 8).
    """
    s1, s2, s3 = (float(s) for s in sigmas)
    theta, kappa = sigma_theta_kappa(s1, s2, s3)
    scale = abs(s1 * s2) + abs(s2 * s3) + abs(s3 * s1)
    if abs(theta) > 1e-12 * scale:
        raise ValueError(f"angular scan requires theta~ = 0, got {theta}")
    # theta~ = 0 makes (s1+s3)(s2+s3) = s3^2 > 0; the resonant locus fixes the
    # magnitude ratio r2/r1 and pins the angle to 0 or pi (proof geometry)
    rho = np.sqrt(abs(s1 + s3) / abs(s2 + s3))
    results = {}
    for A in a_list:
        budget = N * N / (A * A)
        max_dist = 0
        kept = 0
        attempts = 0
        while kept < n_samples and attempts < 50 * n_samples:
            attempts += 1
            r1 = N * rng.uniform(0.9, 1.1)
            dr_scale = np.sqrt(3.0 * budget / abs(s2 + s3))
            r2 = rho * r1 + rng.uniform(-1.2, 1.2) * dr_scale
            if r2 <= 0:
                continue
            # resonant angle: sigma1 r1^2 + sigma2 r2^2 + sigma3 |xi1+xi2|^2 = 0
            cos_c = -(s1 * r1 * r1 + s2 * r2 * r2 + s3 * (r1 * r1 + r2 * r2)) \
                / (2 * s3 * r1 * r2)
            # allowed band around it from the modulation budget
            dc = 3.0 * budget / (2 * abs(s3) * r1 * r2)
            cos_lo, cos_hi = cos_c - dc, cos_c + dc
            if cos_hi < -1 or cos_lo > 1:
                continue
            cs = rng.uniform(max(cos_lo, -1.0), min(cos_hi, 1.0))
            ang = np.arccos(cs) * rng.choice([-1.0, 1.0])
            base = rng.uniform(0, 2 * np.pi)
            xi1 = r1 * np.array([np.cos(base), np.sin(base)])
            xi2 = r2 * np.array([np.cos(base + ang), np.sin(base + ang)])
            xi3 = -(xi1 + xi2)
            mags = [np.linalg.norm(x) for x in (xi1, xi2, xi3)]
            if min(mags) < 1e-6 * N:
                continue
            if min_joint_modulation(sigmas, xi1, xi2) > budget:
                continue
            kept += 1
            js = [int(sector_index(np.arctan2(x[1], x[0]), A)) for x in (xi1, xi2, xi3)]
            for a in range(3):
                for b in range(a + 1, 3):
                    max_dist = max(max_dist, int(sector_distance(js[a], js[b], A)))
        if kept < n_samples // 2:
            raise RuntimeError(
                f"angular scan under-sampled at A={A}: kept {kept}/{n_samples}"
            )
        results[A] = {"max_sector_distance": max_dist, "samples": kept,
                      "modulation_budget": budget}
    return {
        "estimate_id": "angular_separation",
        "sigmas": [s1, s2, s3],
        "theta": theta,
        "kappa": kappa,
        "N": N,
        "by_A": results,
        "max_over_all_A": max(r["max_sector_distance"] for r in results.values()),
        "seed": seed,
    }
