"""Second-iterate growth experiment for the mass-resonance regime.

For theta = 0 coefficients, annulus data

    f_hat = N^{-s-1/2} 1_{D1},   D1 = {N <= |xi| <= N+1},
    g_hat = N^{-s-1/2} 1_{D2},   D2 = {N/p <= |xi| <= N/p + 1},   p = gamma/(alpha-gamma) > 0,

drive the second Picard iterate of the w-equation,

    z(t) = -i int_0^t e^{i(t-t')gamma Lap} grad[(e^{it'alpha Lap} f)(conj(e^{it'beta Lap} g))] dt',

whose Fourier transform is known in closed form: the time integral collapses
per frequency pair to (e^{-it Phi} - 1)/(-i Phi) with Phi the resonance
function, which factorizes here as

    Phi(xi_c, eta) = (alpha-gamma) * [((1+p)(eta1-N) - p(1+c))^2 + (1+p)^2 eta2^2]

for on-axis targets xi_c = ((1+1/p) N + 1 + c, 0), c in [0, 2^-10].  The H^s
mass of z concentrates on the thin annulus D around |xi_c|; measuring it
against N and t exposes the t^{1/2} N^{1/2-s} growth that rules out a twice
differentiable flow map below s = 1/2.

Two independent routes compute the same numbers:

* an adaptive 2D quadrature over the exact lens D1 cap (the oracle), and
* a frequency-lattice Riemann sum (the grid pipeline), which is what a
  discrete spectral solver would produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .model import SystemCoefficients

D_WIDTH = 2.0**-10  # radial width of the measurement annulus


class QuadratureError(RuntimeError):
    """Raised when panel refinement fails to converge; carries the trace."""

    def __init__(self, message, trace):
        super().__init__(f"{message}; refinement trace: {trace}")
        self.trace = trace


@dataclass(frozen=True)
class AnnulusDataSpec:
    """Annulus test-data layout for one frequency scale N.

    Radii: D1 = [N, N+1], D2 = [N/p, N/p + 1], and the measurement annulus
    D = [(1+1/p)N + 1, (1+1/p)N + 1 + 2^-10].  Amplitude N^{-s-1/2} keeps
    the H^s sizes of f and g of order one (asserted within a factor 4).
    """

    N: float
    s: float
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"resonance slope p must be positive, got {self.p}")
        if not self.N >= 4:
            raise ValueError("frequency scale N must be >= 4")
        for name in ("hs_norm_f", "hs_norm_g"):
            val = getattr(self, name)()
            if not 0.25 <= val <= 4.0:
                raise AssertionError(f"{name} = {val:.3f} outside [1/4, 4]")

    @property
    def amplitude(self) -> float:
        return self.N ** (-self.s - 0.5)

    @property
    def d1(self):
        return (self.N, self.N + 1.0)

    @property
    def d2(self):
        return (self.N / self.p, self.N / self.p + 1.0)

    @property
    def d_target(self):
        r = (1.0 + 1.0 / self.p) * self.N + 1.0
        return (r, r + D_WIDTH)

    def _annulus_hs_norm(self, lo, hi):
        # (amp^2 * 2 pi * int_lo^hi (1+r^2)^s r dr)^(1/2), closed form
        s = self.s
        if abs(s + 1.0) < 1e-12:
            integral = 0.5 * np.log((1 + hi * hi) / (1 + lo * lo))
        else:
            integral = ((1 + hi * hi) ** (s + 1) - (1 + lo * lo) ** (s + 1)) / (2 * (s + 1))
        return float(self.amplitude * np.sqrt(2 * np.pi * integral))

    def hs_norm_f(self) -> float:
        return self._annulus_hs_norm(*self.d1)

    def hs_norm_g(self) -> float:
        return self._annulus_hs_norm(*self.d2)

    def min_grid_bandwidth(self) -> float:
        """Largest |xi| the pipeline must resolve: the D annulus plus slack."""
        return self.d_target[1] + 1.0


def annulus_spec(coeffs: SystemCoefficients, s: float, N: float) -> AnnulusDataSpec:
    if coeffs.regime != "mass_resonance":
        raise ValueError(f"annulus experiment requires theta = 0, got regime {coeffs.regime}")
    return AnnulusDataSpec(N=float(N), s=float(s), p=coeffs.p)


# -- kernels ---------------------------------------------------------------


def kernel_cos(phi, t):
    """int_0^t cos(t' phi) dt' = sin(t phi)/phi, series below |t phi| = 1e-6."""
    phi = np.asarray(phi, dtype=float)
    x = t * phi
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, phi)
    out = np.sin(x) / safe
    return np.where(small, t * (1.0 - x * x / 6.0), out)


def kernel_full(phi, t):
    """int_0^t e^{-i t' phi} dt' = (e^{-it phi} - 1)/(-i phi), stable at phi = 0."""
    phi = np.asarray(phi, dtype=float)
    half = 0.5 * t * phi
    return t * np.exp(-1j * half) * np.sinc(half / np.pi)


def phi_on_axis(spec: AnnulusDataSpec, coeffs: SystemCoefficients, c, eta1, eta2):
    """Resonance function at xi_c = ((1+1/p)N+1+c, 0) in factored form."""
    p = spec.p
    q = (1.0 + p) * (eta1 - spec.N) - p * (1.0 + c)
    return (coeffs.alpha - coeffs.gamma) * (q * q + (1.0 + p) ** 2 * eta2 * eta2)


def _lens_bounds(spec: AnnulusDataSpec, c):
    """eta1 range [N+c, N+1] and eta2 extent Y(eta1) of the support lens."""
    n_hi = spec.d1[1]
    m_hi = spec.d2[1]
    xc = spec.d_target[0] + c

    def eta2_max(eta1):
        a = n_hi * n_hi - eta1 * eta1
        b = m_hi * m_hi - (xc - eta1) ** 2
        return np.sqrt(np.clip(np.minimum(a, b), 0.0, None))

    return spec.N + c, spec.N + 1.0, eta2_max


def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w  # mapped to [0, 1]


def _panelled_nodes(lo, hi, panels, order=12):
    u, wu = _gl_nodes(order)
    edges = np.linspace(lo, hi, panels + 1)
    widths = np.diff(edges)
    pts = (edges[:-1, None] + widths[:, None] * u[None, :]).ravel()
    wts = (widths[:, None] * wu[None, :]).ravel()
    return pts, wts


def _lens_quadrature_bipolar(spec, coeffs, c, t, kernel, n_tau, n_rho, order=12):
    """Lens integral in bipolar radii (rho1, rho2) = (|eta|, |xi_c - eta|).

    The resonance phase is exactly alpha rho1^2 - beta rho2^2 - gamma xc^2,
    while the area element contributes 2 rho1 rho2 / (xc |eta2|) per half
    plane.  On the lens, rho1 + rho2 - xc = tau^2 turns the |eta2| ~ sqrt
    boundary vanishing into a smooth integrand:

        F = (4 / xc) int_0^{sqrt(1-c)} int_{N+c+tau^2}^{N+1}
              K(Phi) rho1 rho2 / sqrt((rho2 + xc - rho1)(rho1 + eta1)/(2 xc))
            d rho1 d tau.
    """
    xc = spec.d_target[0] + c
    tau, wt = _panelled_nodes(0.0, np.sqrt(max(1.0 - c, 0.0)), n_tau, order)
    u, wu = _gl_nodes(order)
    edges = np.linspace(0.0, 1.0, n_rho + 1)
    widths = np.diff(edges)
    unit = (edges[:-1, None] + widths[:, None] * u[None, :]).ravel()
    wunit = (widths[:, None] * wu[None, :]).ravel()
    lo = spec.N + c + tau * tau  # rho1 lower edge per tau
    hi = spec.N + 1.0
    span = hi - lo
    rho1 = lo[:, None] + span[:, None] * unit[None, :]
    w2 = span[:, None] * wunit[None, :]
    rho2 = xc + tau[:, None] ** 2 - rho1
    eta1 = (xc * xc + rho1 * rho1 - rho2 * rho2) / (2.0 * xc)
    jac = rho1 * rho2 / np.sqrt((rho2 + xc - rho1) * (rho1 + eta1) / (2.0 * xc))
    phi = (coeffs.alpha * rho1 * rho1 - coeffs.beta * rho2 * rho2
           - coeffs.gamma * xc * xc)
    vals = kernel(phi, t)
    return (4.0 / xc) * np.sum(wt[:, None] * w2 * jac * vals)


def _lens_quadrature_cartesian(spec, coeffs, c, t, kernel, n1_panels, n2_panels, order=12):
    """Direct (eta1, eta2) panelling; reference path for cross-validation.

    Converges slowly near the sqrt edges of the lens, so it is only used at
    loose tolerance to check the bipolar route, never as the oracle.
    """
    lo, hi, eta2_max = _lens_bounds(spec, c)
    e1, w1 = _panelled_nodes(lo, hi, n1_panels, order)
    y = eta2_max(e1)
    u, wu = _gl_nodes(order)
    edges2 = np.linspace(0.0, 1.0, n2_panels + 1)
    widths2 = np.diff(edges2)
    e2unit = (edges2[:-1, None] + widths2[:, None] * u[None, :]).ravel()
    w2unit = (widths2[:, None] * wu[None, :]).ravel()
    eta2 = y[:, None] * e2unit[None, :]
    weights = (w1 * y)[:, None] * w2unit[None, :]
    phi = phi_on_axis(spec, coeffs, c, e1[:, None], eta2)
    vals = kernel(phi, t)
    return 2.0 * np.sum(weights * vals)  # factor 2: eta2 -> -eta2 symmetry


_MAX_NODES = 40_000_000


def second_iterate_lens_integral(coeffs, s, N, c, t, *, kernel="full",
                                 rtol=1e-8, atol=1e-15, max_level=8):
    """A(xi_c) = int over the lens of kernel(Phi) d eta, adaptively refined.

    ``kernel='cos'`` integrates sin(t Phi)/Phi (the lower-bound profile);
    ``kernel='full'`` integrates the complex exact time kernel.  Panel
    counts start at the oscillation count of t*Phi across the lens and
    double until two successive sweeps agree; raises
    :class:`QuadratureError` with the refinement trace otherwise.
    """
    spec = annulus_spec(coeffs, s, N)
    if not 0.0 <= c <= D_WIDTH:
        raise ValueError(f"c must lie in [0, {D_WIDTH}], got {c}")
    kern = {"cos": kernel_cos, "full": kernel_full}[kernel]
    xc = spec.d_target[0] + c
    # Phi spans along tau (through rho2) and along rho1; one panel per
    # half-period of t*Phi in each direction, with a floor.
    rho1_hi, rho2_hi = spec.d1[1], spec.d2[1]
    span_tau = abs(t) * 2.0 * (abs(coeffs.beta) * rho2_hi + abs(coeffs.alpha) * rho1_hi)
    span_rho = abs(t) * 2.0 * abs(coeffs.alpha * rho1_hi + coeffs.beta * rho2_hi)
    n_tau = max(8, int(np.ceil(span_tau / np.pi)))
    n_rho = max(4, int(np.ceil(span_rho / np.pi)))
    trace = []
    prev = None
    for _ in range(max_level):
        if n_tau * n_rho * 144 > _MAX_NODES:
            raise QuadratureError("lens quadrature node budget exceeded", trace)
        val = _lens_quadrature_bipolar(spec, coeffs, c, t, kern, n_tau, n_rho)
        trace.append((n_tau, n_rho, complex(val)))
        if prev is not None and abs(val - prev) <= rtol * abs(val) + atol:
            return val
        prev = val
        n_tau *= 2
        n_rho *= 2
    raise QuadratureError("lens quadrature did not converge", trace)


def fc_quadrature_oracle(coeffs, s, N, c, t, **kw):
    """|F(xi_c)|: modulus of the cosine-kernel lens integral (brute-force oracle)."""
    return abs(second_iterate_lens_integral(coeffs, s, N, c, t, kernel="cos", **kw))


def lens_area(coeffs, s, N, c):
    """|E| = area of the support lens (the t -> 0 limit has F -> t |E|)."""
    spec = annulus_spec(coeffs, s, N)
    lo, hi, eta2_max = _lens_bounds(spec, c)
    u, w = _gl_nodes(64)
    e1 = lo + (hi - lo) * u
    return float(2.0 * (hi - lo) * np.sum(w * eta2_max(e1)))


# -- frequency-lattice pipeline ---------------------------------------------


def _annulus_lattice_points(lo, hi, step):
    """All lattice points (step * Z)^2 with lo <= |eta| <= hi, as flat arrays."""
    i_max = int(np.floor(hi / step))
    rows = np.arange(-i_max, i_max + 1)
    e1_list, e2_list = [], []
    for i in rows:
        x = i * step
        hi_sq = hi * hi - x * x
        if hi_sq < 0:
            continue
        j_hi = int(np.floor(np.sqrt(hi_sq) / step + 1e-12))
        lo_sq = lo * lo - x * x
        if lo_sq <= 0:
            j = np.arange(-j_hi, j_hi + 1)
        else:
            j_lo = int(np.ceil(np.sqrt(lo_sq) / step - 1e-12))
            if j_lo > j_hi:
                continue
            j = np.concatenate([np.arange(-j_hi, -j_lo + 1), np.arange(j_lo, j_hi + 1)])
        e1_list.append(np.full(j.shape, x))
        e2_list.append(j * step)
    if not e1_list:
        return np.empty(0), np.empty(0)
    return np.concatenate(e1_list), np.concatenate(e2_list)


def second_iterate_grid_value(coeffs, s, N, target, t, frequency_step, *, kernel="cos"):
    """Lattice Riemann sum for the lens integral at a lattice frequency target.

    This is what a truncated-torus spectral computation of the second iterate
    produces at ``target``: the bilinear lattice sum over modes eta in D1 with
    indicator data on D1 x D2 and the exact per-pair time kernel, weighted by
    the cell measure.  ``target`` may be a scalar c in [0, 2^-10] (meaning the
    on-axis point xi_c) or an explicit frequency pair; its components must be
    lattice multiples of ``frequency_step``, which must also resolve the
    unit-width annuli.
    """
    spec = annulus_spec(coeffs, s, N)
    step = float(frequency_step)
    if step > 2.0**-2:
        raise ValueError(
            f"frequency_step {step} too coarse to resolve the unit-width annuli; "
            "need <= 0.25"
        )
    if np.isscalar(target):
        xi_t = np.array([spec.d_target[0] + float(target), 0.0])
    else:
        xi_t = np.asarray(target, dtype=float)
    if np.max(np.abs(xi_t / step - np.rint(xi_t / step))) > 1e-9:
        raise ValueError(f"target {xi_t} is not on the lattice with step {step}")
    kern = {"cos": kernel_cos, "full": kernel_full}[kernel]
    eta1, eta2 = _annulus_lattice_points(spec.d1[0], spec.d1[1], step)
    r2sq = (xi_t[0] - eta1) ** 2 + (xi_t[1] - eta2) ** 2
    keep = (r2sq >= spec.d2[0] ** 2) & (r2sq <= spec.d2[1] ** 2)
    r1sq = eta1[keep] ** 2 + eta2[keep] ** 2
    phi = (coeffs.alpha * r1sq - coeffs.beta * r2sq[keep]
           - coeffs.gamma * float(xi_t @ xi_t))
    return complex(np.sum(kern(phi, t)) * step * step)


def required_points_per_dim(spec: AnnulusDataSpec, frequency_step: float) -> int:
    """Smallest power-of-two grid resolving the experiment at this step."""
    need = spec.min_grid_bandwidth() / frequency_step
    n = 8
    while n // 2 - 1 < need:
        n *= 2
    return n


# -- oracle-path restricted H^s norm ---------------------------------------


def second_iterate_hs_norm(coeffs, s, N, t, *, c_samples=3, **kw):
    """H^s norm of the second iterate restricted to the annulus D.

    Uses |z_hat(xi)| = |xi| N^{-2s-1} |A(|xi|)| / (2 pi) with A from the lens
    quadrature, and integrates the radial profile over D with Simpson in the
    annulus coordinate c (the profile is nearly constant across D's 2^-10
    width, so three samples are ample).
    """
    spec = annulus_spec(coeffs, s, N)
    if c_samples < 3 or c_samples % 2 == 0:
        raise ValueError("c_samples must be an odd count >= 3")
    cs = np.linspace(0.0, D_WIDTH, c_samples)
    amps = np.array(
        [abs(second_iterate_lens_integral(coeffs, s, N, c, t, kernel="full", **kw)) for c in cs]
    )
    r = spec.d_target[0] + cs
    integrand = (1.0 + r * r) ** s * r**3 * amps**2
    radial = simpson(integrand, x=cs)
    return float(np.sqrt(spec.amplitude**4 * radial / (2.0 * np.pi)))


# -- the experiment ----------------------------------------------------------


def pipeline_agreement(coeffs, s, N, t, frequency_step, points_per_dim=None):
    """Relative gap between the grid pipeline and the oracle at xi_c.

    Rejects under-resolved grids: when ``points_per_dim`` is given it must
    cover the bandwidth (1 + 1/p) N + 2 at the given frequency step.
    """
    spec = annulus_spec(coeffs, s, N)
    if points_per_dim is not None:
        need = required_points_per_dim(spec, frequency_step)
        if points_per_dim < need:
            raise ValueError(
                f"grid under-resolved: points_per_dim {points_per_dim} < required {need} "
                f"at frequency_step {frequency_step}"
            )
    oracle = fc_quadrature_oracle(coeffs, s, N, 0.0, t)
    grid = abs(second_iterate_grid_value(coeffs, s, N, 0.0, t, frequency_step, kernel="cos"))
    return abs(grid - oracle) / oracle, grid, oracle


def norm_inflation_experiment(coeffs, s, N_list, t_list, *, c_samples=3,
                              agreement_step=None, rtol=1e-8):
    """Growth exponents of the second iterate's restricted H^s norm.

    Computes the oracle-path norm for every (N, t), fits log-norm against
    log N at each fixed t (expected slope 1/2 - s in the oscillatory regime
    2 N t >> 1) and against log t at each fixed N (expected slope 1/2), per
    the >= 4 points fitting rule.  With ``agreement_step`` set, the lattice
    pipeline is compared against the oracle at every N (at the largest t).
    """
    from .reports import ExponentFit, fit_from_points

    N_list = [float(N) for N in N_list]
    t_list = [float(t) for t in t_list]
    specs = {N: annulus_spec(coeffs, s, N) for N in N_list}
    norms = {
        N: {t: second_iterate_hs_norm(coeffs, s, N, t, c_samples=c_samples, rtol=rtol)
            for t in t_list}
        for N in N_list
    }
    n_fits = {}
    if len(N_list) >= 4:
        for t in t_list:
            n_fits[t] = fit_from_points(N_list, [norms[N][t] for N in N_list])
    t_fits = {}
    if len(t_list) >= 4:
        for N in N_list:
            t_fits[N] = fit_from_points(t_list, [norms[N][t] for t in t_list])
    report = {
        "estimate_id": "norm_inflation",
        "coefficients": {
            "alpha": coeffs.alpha, "beta": coeffs.beta, "gamma": coeffs.gamma,
            "theta": coeffs.theta, "kappa": coeffs.kappa, "p": coeffs.p,
        },
        "s": s,
        "N_list": N_list,
        "t_list": t_list,
        "data_norms": {str(N): {"f": specs[N].hs_norm_f(), "g": specs[N].hs_norm_g()}
                       for N in N_list},
        "norms": {str(N): {str(t): norms[N][t] for t in t_list} for N in N_list},
        "n_slope_fits": {str(t): f.to_dict() if f else None for t, f in n_fits.items()},
        "t_slope_fits": {str(N): f.to_dict() if f else None for N, f in t_fits.items()},
        "targets": {"n_slope": 0.5 - s, "t_slope": 0.5},
    }
    if agreement_step is not None:
        t_ref = max(t_list)
        agreements = {}
        for N in N_list:
            rel, grid_val, oracle_val = pipeline_agreement(coeffs, s, N, t_ref, agreement_step)
            agreements[str(N)] = {"rel_gap": rel, "grid": grid_val, "oracle": oracle_val}
        report["pipeline_agreement"] = {"t": t_ref, "frequency_step": agreement_step,
                                        "by_N": agreements}
    return report
