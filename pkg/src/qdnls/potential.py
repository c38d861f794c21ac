"""Irrotational fields and scalar-potential reconstruction.

A 2-component field w admits a scalar potential W with grad W = w when its
rotation vanishes both spectrally and pointwise:

    xi1 w2_hat(xi) - xi2 w1_hat(xi) = 0   and   x1 w2(x) - x2 w1(x) = 0.

The second condition pins the potential's angular derivative to zero, so W
is radial.  Two reconstructions are provided: line integrals along grid
lines (spectral antiderivatives, so both routes carry spectral accuracy)
and division by the Laplacian symbol.  Potentials are identified up to
constants; the zero-Fourier-mode gauge picks the representative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    SpectralField,
    VectorField,
    gradient,
    is_radial,
    l2_norm,
    sobolev_norm,
    vector_l2_norm,
)

_TINY = 1e-300


class RotationalFieldError(ValueError):
    """Field failed the irrotationality admission test."""

    def __init__(self, condition, defect, tol):
        super().__init__(
            f"vector field rejected: {condition} defect {defect:.3e} exceeds tol {tol:.3e}"
        )
        self.condition = condition
        self.defect = defect
        self.tol = tol


@dataclass(frozen=True)
class IrrotationalField:
    """Admitted 2-component field with its measured rotation defects."""

    w: VectorField
    fourier_defect: float
    physical_defect: float


@dataclass(frozen=True)
class PotentialRepresentative:
    """Scalar potential in the zero-mean gauge (zero Fourier mode = 0)."""

    W: SpectralField
    gauge: str = "zero-mean"

    def __post_init__(self):
        if abs(self.W.coefficients[0, 0]) > 1e-12 * max(np.max(np.abs(self.W.coefficients)), _TINY):
            raise ValueError("potential representative must have vanishing zero mode")


def rotation_defects(w: VectorField):
    """(fourier, physical) rotation defects, each normalized scale-free.

    Fourier: max |xi1 w2_hat - xi2 w1_hat| / max |xi| |w_hat|;
    physical: max |x1 w2 - x2 w1| / max |x| |w|.
    """
    grid = w.grid
    w1, w2 = w.components
    xi1, xi2 = grid.xi
    spec = np.abs(xi1 * w2.coefficients - xi2 * w1.coefficients)
    mag = np.sqrt(grid.xi_sq) * np.hypot(np.abs(w1.coefficients), np.abs(w2.coefficients))
    fourier = float(np.max(spec) / max(np.max(mag), _TINY))
    x1, x2 = grid.mesh
    phys = np.abs(x1 * w2.values - x2 * w1.values)
    pmag = np.hypot(x1, x2) * np.hypot(np.abs(w1.values), np.abs(w2.values))
    physical = float(np.max(phys) / max(np.max(pmag), _TINY))
    return fourier, physical


def check_irrotational(w: VectorField, tol: float) -> IrrotationalField:
    """Admit w iff both rotation defects are <= tol; else raise with the culprit."""
    fourier, physical = rotation_defects(w)
    if fourier > tol:
        raise RotationalFieldError("spectral rotation (xi1 w2_hat - xi2 w1_hat)", fourier, tol)
    if physical > tol:
        raise RotationalFieldError("pointwise rotation (x1 w2 - x2 w1)", physical, tol)
    return IrrotationalField(w=w, fourier_defect=fourier, physical_defect=physical)


def _line_antiderivative(values, grid, axis, anchor_index):
    """Antiderivative along one axis via the spectral 1/(i xi) symbol.

    Valid for grid-periodic integrands with vanishing line means (true for
    components of torus gradients); the residual line mean is dropped.
    """
    n = grid.points_per_dim
    k = grid.k
    fhat = np.fft.fft(values, axis=axis)
    shape = [1, 1]
    shape[axis] = n
    kk = k.reshape(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(kk != 0, 1.0 / (1j * kk * grid.frequency_step), 0.0)
    anti = np.fft.ifft(fhat * inv, axis=axis)
    take = [slice(None), slice(None)]
    take[axis] = slice(anchor_index, anchor_index + 1)
    return anti - anti[tuple(take)]


def reconstruct_line(field: IrrotationalField, anchor=(0, 0)) -> PotentialRepresentative:
    """Line-integral potential, gauge-fixed.

    W(x) = int_{a1}^{x1} w1(y1, x2) dy1 + int_{a2}^{x2} w2(a1, y2) dy2 with the
    anchor a at a grid point (given by index pair); each 1D integral is the
    exact spectral antiderivative along the grid line, then the zero mode is
    subtracted.  Anchor changes move W by a constant only.
    """
    w1, w2 = field.w.components
    grid = w1.grid
    i1, i2 = int(anchor[0]) % grid.points_per_dim, int(anchor[1]) % grid.points_per_dim
    part1 = _line_antiderivative(w1.values, grid, axis=0, anchor_index=i1)
    col = _line_antiderivative(w2.values[i1:i1 + 1, :], grid, axis=1, anchor_index=i2)
    W_vals = part1 + col
    W = SpectralField.from_physical(grid, W_vals)
    coeffs = W.coefficients.copy()
    coeffs[0, 0] = 0.0
    return PotentialRepresentative(SpectralField(grid, coeffs))


def reconstruct_spectral(field: IrrotationalField) -> PotentialRepresentative:
    """Symbol-division potential: W_hat = (xi . w_hat) / (i |xi|^2), zero mode 0."""
    w1, w2 = field.w.components
    grid = w1.grid
    xi1, xi2 = grid.xi
    dots = xi1 * w1.coefficients + xi2 * w2.coefficients
    with np.errstate(divide="ignore", invalid="ignore"):
        W_hat = np.where(grid.xi_sq > 0, dots / (1j * grid.xi_sq), 0.0)
    return PotentialRepresentative(SpectralField(grid, W_hat))


def roundtrip_error(field: IrrotationalField, rep: PotentialRepresentative) -> float:
    """|grad W - w|_{L^2} of a reconstruction."""
    diff = gradient(rep.W) - field.w
    return vector_l2_norm(diff)


def check_angular_constancy(rep: PotentialRepresentative, tol: float) -> bool:
    """True iff the potential is angle-independent (radial) within tol."""
    return is_radial(rep.W, tol)


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    sobolev_size: float
    fourier_defect: float
    physical_defect: float


def membership_As(w: VectorField, s: float, tol: float) -> MembershipReport:
    """Membership in the admissible class: finite H^s size + both rotation
    conditions within tol.  On a finite lattice the norm is always finite;
    its value is recorded rather than tested."""
    size = float(np.sqrt(sum(sobolev_norm(c, s) ** 2 for c in w.components)))
    fourier, physical = rotation_defects(w)
    return MembershipReport(
        member=bool(fourier <= tol and physical <= tol),
        sobolev_size=size,
        fourier_defect=fourier,
        physical_defect=physical,
    )


def potential_report(w: VectorField, tol: float, s: float = 1.0):
    """One-stop reconstruction: returns (JSON-friendly report, representative).

    The representative is None when the field is not admitted.
    """
    fourier, physical = rotation_defects(w)
    report = {
        "defects": {"fourier": fourier, "physical": physical},
        "tolerance": tol,
        "admitted": bool(fourier <= tol and physical <= tol),
        "sobolev_size": float(np.sqrt(sum(sobolev_norm(c, s) ** 2 for c in w.components))),
        "s": s,
    }
    if not report["admitted"]:
        return report, None
    field = check_irrotational(w, tol)
    rep_spec = reconstruct_spectral(field)
    rep_line = reconstruct_line(field)
    scale = max(vector_l2_norm(w), _TINY)
    gap = l2_norm(rep_spec.W - rep_line.W) / max(l2_norm(rep_spec.W), _TINY)
    report.update(
        round_trip_error=roundtrip_error(field, rep_spec) / scale,
        line_vs_spectral=gap,
        radial=bool(check_angular_constancy(rep_spec, max(100 * tol, 1e-8))),
    )
    return report, rep_spec
