"""System coefficients, resonance algebra, scaling symmetry, invariants.

The three-wave system couples fields u, v, w with dispersion coefficients
(alpha, beta, gamma).  Two derived numbers organize everything:

    theta = alpha*beta*gamma*(1/alpha - 1/beta - 1/gamma)
    kappa = (alpha - beta)*(alpha - gamma)*(beta + gamma)

theta = 0 is the mass-resonance regime; kappa never vanishes when
theta >= 0.  The resonance function

    Phi(xi, eta) = alpha|eta|^2 - beta|xi - eta|^2 - gamma|xi|^2

controls the quadratic frequency interaction and factorizes as
(alpha - gamma)|eta - p(xi - eta)|^2 with p = gamma/(alpha - gamma)
exactly when theta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    Grid2D,
    SpectralField,
    VectorField,
    is_radial,
    l2_norm,
)

_REL_TOL = 1e-12


def theta_kappa(alpha: float, beta: float, gamma: float):
    theta = alpha * beta * gamma * (1.0 / alpha - 1.0 / beta - 1.0 / gamma)
    kappa = (alpha - beta) * (alpha - gamma) * (beta + gamma)
    return theta, kappa


@dataclass(frozen=True)
class SystemCoefficients:
    """Dispersion coefficients with derived resonance data.

    ``regime`` is one of 'theta_positive', 'mass_resonance' (theta = 0),
    'theta_negative' (kappa != 0), 'kappa_zero'; sweeps use it to refuse
    parameter regimes an estimate does not cover.
    """

    alpha: float
    beta: float
    gamma: float
    theta: float
    kappa: float
    regime: str

    @property
    def sigma_triples(self):
        """The three coefficient permutations with theta~ = theta, |kappa~| = |kappa|."""
        a, b, g = self.alpha, self.beta, self.gamma
        return ((b, g, -a), (-g, a, -b), (a, -b, -g))

    @property
    def p(self) -> float:
        """gamma/(alpha - gamma); the resonance-locus slope when theta = 0."""
        if self.alpha == self.gamma:
            raise ValueError("p undefined: alpha == gamma")
        return self.gamma / (self.alpha - self.gamma)


def make_coefficients(alpha: float, beta: float, gamma: float) -> SystemCoefficients:
    for name, val in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if val == 0 or not np.isfinite(val):
            raise ValueError(f"coefficient {name} must be nonzero and finite, got {val}")
    theta, kappa = theta_kappa(alpha, beta, gamma)
    # classification with scale-aware tolerance
    theta_scale = abs(alpha * beta * gamma) * (1 / abs(alpha) + 1 / abs(beta) + 1 / abs(gamma))
    kappa_scale = (abs(alpha) + abs(beta)) * (abs(alpha) + abs(gamma)) * (abs(beta) + abs(gamma))
    theta_zero = abs(theta) <= _REL_TOL * theta_scale
    kappa_zero = abs(kappa) <= _REL_TOL * kappa_scale
    if theta_zero:
        regime = "mass_resonance"
    elif theta > 0:
        regime = "theta_positive"
    elif kappa_zero:
        regime = "kappa_zero"
    else:
        regime = "theta_negative"
    if (theta_zero or theta > 0) and kappa_zero:
        raise AssertionError("kappa = 0 cannot occur with theta >= 0 for nonzero coefficients")
    return SystemCoefficients(alpha, beta, gamma, theta, kappa, regime)


def sigma_theta_kappa(sigma1: float, sigma2: float, sigma3: float):
    """theta~ and kappa~ of a dispersion triple (sigma1, sigma2, sigma3)."""
    theta = sigma1 * sigma2 * sigma3 * (1 / sigma1 + 1 / sigma2 + 1 / sigma3)
    kappa = (sigma1 + sigma2) * (sigma2 + sigma3) * (sigma3 + sigma1)
    return theta, kappa


def resonance_phi(coeffs: SystemCoefficients, xi, eta, check_factorization: bool | None = None):
    """Phi(xi, eta) = alpha|eta|^2 - beta|xi-eta|^2 - gamma|xi|^2.

    xi, eta are frequency pairs (arrays broadcast elementwise over the last
    axis of length 2).  In the mass-resonance regime the factored form
    (alpha-gamma)|eta - p(xi-eta)|^2 is evaluated as well and asserted to
    agree to 1e-10 relative; requesting the check with alpha == gamma fails.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    d = xi - eta
    abs2 = lambda v: np.sum(v * v, axis=-1)
    phi = coeffs.alpha * abs2(eta) - coeffs.beta * abs2(d) - coeffs.gamma * abs2(xi)
    if check_factorization is None:
        check_factorization = coeffs.regime == "mass_resonance"
    if check_factorization:
        if coeffs.alpha == coeffs.gamma:
            raise ValueError("factored resonance form undefined for alpha == gamma")
        p = coeffs.p
        factored = (coeffs.alpha - coeffs.gamma) * abs2(eta - p * d)
        err = np.max(np.abs(phi - factored))
        bound = 1e-10 * np.max(np.abs(phi)) + 1e-12
        if err > bound:
            raise AssertionError(
                f"resonance factorization mismatch: |direct - factored| = {err:.3e}"
            )
    return phi


@dataclass(frozen=True)
class SystemState:
    """The triple (u, v, w) or (u, v, W) at one time.

    Cartesian form carries a 2-component w; radial form carries the scalar
    potential W with w = grad W implied.  All fields share one grid.
    """

    u: VectorField
    v: VectorField
    time: float = 0.0
    w: VectorField | None = None
    W: SpectralField | None = None

    def __post_init__(self):
        if (self.w is None) == (self.W is None):
            raise ValueError("state needs exactly one of w (cartesian) or W (radial)")
        grid = self.u.grid
        others = [self.v.grid]
        others.append(self.w.grid if self.w is not None else self.W.grid)
        if any(g != grid for g in others):
            raise ValueError("all state fields must share one grid")

    @property
    def form(self) -> str:
        return "cartesian" if self.w is not None else "radial"

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def check_radial(self, tol: float) -> bool:
        comps = list(self.u.components) + list(self.v.components)
        if self.W is not None:
            comps.append(self.W)
        return all(is_radial(c, tol) for c in comps)


def quadratic_invariants(state: SystemState):
    """(M1, M2) = (|u|^2 + |v|^2, |u|^2 + |w|^2) in L^2.

    Conserved along the flow (checked against a high-order reference
    integration before being used as a solver acceptance invariant).
    """
    if state.form != "cartesian":
        raise ValueError("quadratic invariants are defined on cartesian-form states")
    nu = sum(l2_norm(c) ** 2 for c in state.u.components)
    nv = sum(l2_norm(c) ** 2 for c in state.v.components)
    nw = sum(l2_norm(c) ** 2 for c in state.w.components)
    return nu + nv, nu + nw


# -- scaling symmetry --------------------------------------------------------


def _scale_field(f: SpectralField, lam: float, target: Grid2D) -> SpectralField:
    """A_lambda f with hat(A_lambda f)(xi) = lam * f_hat(lam xi), resampled.

    Source mode xi lands at xi/lam, snapped to the target lattice (exact
    when the lattices are commensurate, e.g. power-of-two lam with the
    default target grid).
    """
    src = f.grid
    out = np.zeros((target.points_per_dim,) * 2, dtype=np.complex128)
    tgt_n = target.points_per_dim
    ratio = src.frequency_step / (lam * target.frequency_step)
    nz1, nz2 = np.nonzero(f.coefficients)
    if nz1.size == 0:
        return SpectralField(target, out)
    k1 = src.k[nz1]
    k2 = src.k[nz2]
    t1 = np.rint(k1 * ratio).astype(np.int64)
    t2 = np.rint(k2 * ratio).astype(np.int64)
    if np.max(np.maximum(np.abs(t1), np.abs(t2))) > target.bandwidth_index():
        raise ValueError("rescaled mode exceeds target grid bandwidth; supply a finer grid")
    np.add.at(out, (t1 % tgt_n, t2 % tgt_n), lam * f.coefficients[nz1, nz2])
    return SpectralField(target, out)


def scaling_transform(state: SystemState, lam: float, target_grid: Grid2D | None = None) -> SystemState:
    """Apply A_lambda(t, x) = lam^{-1} A(lam^{-2} t, lam^{-1} x) to a state.

    Returns the state at time lam^2 * t on ``target_grid`` (default: half
    width and point count scaled by lam, which keeps integer frequency
    indices fixed and makes power-of-two lam exact).  Rescaled modes that
    fall outside the target bandwidth are an error.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    src = state.grid
    if target_grid is None:
        n = src.points_per_dim * lam
        if abs(n - round(n)) > 1e-9 or not _is_pow2(int(round(n))):
            raise ValueError("default target grid needs lam * points to be a power of two")
        target_grid = Grid2D(src.half_width * lam, int(round(n)))

    def sv(vf):
        return VectorField(tuple(_scale_field(c, lam, target_grid) for c in vf.components))

    u = sv(state.u)
    v = sv(state.v)
    if state.form == "cartesian":
        return SystemState(u=u, v=v, w=sv(state.w), time=lam**2 * state.time)
    # Scalar potential scales with an extra lam (w = grad W loses one lam^-1).
    W = _scale_field(state.W, lam, target_grid) * lam
    return SystemState(u=u, v=v, W=W, time=lam**2 * state.time)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0
