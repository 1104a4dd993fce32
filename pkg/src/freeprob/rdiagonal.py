"""Brown measures of Haar-rotated positive operators and a closed-form catalog.

For U Haar unitary free from a positive H whose distribution mu_H is not a
point mass, the Brown measure of UH is rotation invariant: it carries the
atom mu_H({0}) at the origin, lives on the annulus between 1/||H^-1||_2 and
||H||_2, and the closed ball of radius S_{mu_{H^2}}(t - 1)^{-1/2} has mass
exactly t for t in (mu_H({0}), 1].  brown_rdiagonal turns that quantile
description into a sampled radial CDF.

The catalog lists the five operators built from two free copies of the 2x2
matrix algebra that the rest of the package simulates.  Catalog ground truth
is the ball-mass form; planar densities, where wanted, are derived from it
as F'(r) / (2 pi r) rather than read off any printed density expression,
since the latter is only consistent with the ball masses up to the area
Jacobian (and, for the squared nilpotent sum, a constant).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .config import SIZE, TOL
from .errors import DiracInputError, DomainError, MeasureFormatError
from .measures import ScalarMeasure, chi_vector, moment

__all__ = [
    "OperatorTag",
    "RadialPlanarMeasure",
    "brown_rdiagonal",
    "catalog_brown",
    "support_membership",
    "pullback_radii",
    "conditional_cdf",
]

SQRT_HALF = 1.0 / math.sqrt(2.0)


class OperatorTag(str, enum.Enum):
    """Operators with catalogued Brown measures, named by their factors."""

    W1F12 = "W1F12"
    E12_plus_F12 = "E12_plus_F12"
    E12_plus_F12_squared = "E12_plus_F12_squared"
    W1_plus_F12_squared = "W1_plus_F12_squared"
    W1_plus_F12 = "W1_plus_F12"


@dataclass(frozen=True)
class RadialPlanarMeasure:
    """Rotation-invariant planar probability measure stored as a radial CDF.

    cumulative[i] is the mass of the closed ball of radius radii[i] about
    center (atoms included).  Evaluation interpolates with a monotone
    piecewise cubic unless closed_form names a catalog law, in which case the
    exact expression is used.  For the W1_plus_F12 tag the measure is not
    radial about any point and the stored coordinate is |z^2 - 1|; the
    pullback under squaring, together with the z -> -z symmetry, determines
    the planar law.
    """

    center: complex
    atoms: tuple[tuple[complex, float], ...]
    radii: np.ndarray
    cumulative: np.ndarray
    support_inner: float
    support_outer: float
    closed_form: str | None = None

    def __post_init__(self) -> None:
        radii = np.asarray(self.radii, dtype=float)
        cum = np.asarray(self.cumulative, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "cumulative", cum)
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(
            self, "atoms", tuple((complex(z), float(m)) for z, m in self.atoms)
        )
        if radii.shape != cum.shape or radii.ndim != 1 or radii.size == 0:
            raise MeasureFormatError("radial CDF needs matching 1-d sample arrays")
        if np.any(np.diff(radii) < 0) or np.any(np.diff(cum) < -TOL.cdf_end_atol):
            raise MeasureFormatError("radial CDF samples must be monotone")
        if abs(cum[-1] - 1.0) > TOL.cdf_end_atol:
            raise MeasureFormatError(f"radial CDF must end at 1, got {cum[-1]!r}")
        if (
            self.support_inner < self.support_outer
            and radii[0] <= self.support_inner
            and abs(cum[0] - self.center_atom_mass) > 1e-9
        ):
            raise MeasureFormatError(
                "cumulative mass at the inner edge must equal the center atom mass"
            )
        if not self.support_inner <= self.support_outer:
            raise MeasureFormatError("support_inner must not exceed support_outer")

    @property
    def center_atom_mass(self) -> float:
        return sum(m for z, m in self.atoms if z == self.center)

    @cached_property
    def _interpolant(self):
        r, idx = np.unique(self.radii, return_index=True)
        if r.size < 2:
            return None
        return PchipInterpolator(r, self.cumulative[idx], extrapolate=False)

    def cdf(self, r) -> np.ndarray | float:
        """Mass of the closed ball (in the stored radial coordinate)."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if self.closed_form is not None:
            out = _closed_cdf(self.closed_form, r)
        else:
            out = np.empty_like(r)
            below = r < self.radii[0]
            above = r >= self.radii[-1]
            mid = ~(below | above)
            out[below] = self.center_atom_mass
            out[above] = self.cumulative[-1]
            if mid.any():
                interp = self._interpolant
                if interp is None:
                    out[mid] = self.cumulative[0]
                else:
                    out[mid] = np.clip(interp(r[mid]), 0.0, 1.0)
        return float(out[0]) if scalar else out

    def ball_mass(self, r) -> np.ndarray | float:
        return self.cdf(r)

    def density(self, r) -> np.ndarray | float:
        """Radial part of the planar density, F'(r) / (2 pi r)."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if np.any(r <= 0):
            raise DomainError("planar density is defined for r > 0")
        if self.closed_form is not None:
            deriv = _closed_cdf_derivative(self.closed_form, r)
        else:
            interp = self._interpolant
            if interp is None:
                raise DomainError("density needs at least two CDF samples")
            deriv = np.clip(interp.derivative()(np.clip(r, self.radii[0], self.radii[-1])), 0.0, None)
            deriv = np.where((r < self.radii[0]) | (r > self.radii[-1]), 0.0, deriv)
        out = deriv / (2.0 * math.pi * r)
        return float(out[0]) if scalar else out

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "center": [self.center.real, self.center.imag],
            "atoms": [[z.real, z.imag, m] for z, m in self.atoms],
            "cdf": [[float(r), float(f)] for r, f in zip(self.radii, self.cumulative)],
            "support": [self.support_inner, self.support_outer],
            "closed_form": self.closed_form,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "RadialPlanarMeasure":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MeasureFormatError(f"invalid JSON: {exc}") from exc
        try:
            pairs = np.array(payload["cdf"], dtype=float).reshape(-1, 2)
            return cls(
                center=complex(payload["center"][0], payload["center"][1]),
                atoms=tuple(
                    (complex(a, b), float(m)) for a, b, m in payload["atoms"]
                ),
                radii=pairs[:, 0],
                cumulative=pairs[:, 1],
                support_inner=float(payload["support"][0]),
                support_outer=float(payload["support"][1]),
                closed_form=payload.get("closed_form"),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MeasureFormatError(f"malformed radial measure payload: {exc}") from exc

    def cdf_csv_rows(self, denominator: int = 1024) -> list[tuple[float, float]]:
        """(r, F) rows on the dyadic grid k/denominator covering the support.

        Dyadic radii keep round values like 0.5 exactly representable in the
        exported file; the exact support endpoints are appended.
        """
        k0 = math.ceil(self.support_inner * denominator)
        k1 = math.floor(self.support_outer * denominator)
        rs = [k / denominator for k in range(k0, k1 + 1)]
        if not rs or rs[0] > self.support_inner:
            rs.insert(0, self.support_inner)
        if rs[-1] < self.support_outer:
            rs.append(self.support_outer)
        return [(float(r), float(self.cdf(r))) for r in rs]


# -- closed forms ----------------------------------------------------------


def _closed_cdf(tag: str, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if tag == OperatorTag.W1F12.value:
        out = np.where(r < SQRT_HALF, 1.0 / (2.0 * (1.0 - np.minimum(r, SQRT_HALF) ** 2)), 1.0)
        return np.where(r < 0.0, 0.0, out)
    if tag in (OperatorTag.E12_plus_F12.value, OperatorTag.W1_plus_F12_squared.value):
        rc = np.clip(r, 0.0, SQRT_HALF)
        return np.where(r >= SQRT_HALF, 1.0, rc**2 / (1.0 - rc**2))
    if tag == OperatorTag.E12_plus_F12_squared.value:
        rc = np.clip(r, 0.0, 0.5)
        return np.where(r >= 0.5, 1.0, rc / (1.0 - rc))
    if tag == OperatorTag.W1_plus_F12.value:
        # coordinate rho = |z^2 - 1|; pullback of the squared operator's law
        rc = np.clip(r, 0.0, SQRT_HALF)
        return np.where(r >= SQRT_HALF, 1.0, rc**2 / (1.0 - rc**2))
    raise DomainError(f"unknown closed-form tag {tag!r}")


def _closed_cdf_derivative(tag: str, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if tag == OperatorTag.W1F12.value:
        inside = (r > 0.0) & (r < SQRT_HALF)
        return np.where(inside, r / (1.0 - r**2) ** 2, 0.0)
    if tag in (
        OperatorTag.E12_plus_F12.value,
        OperatorTag.W1_plus_F12_squared.value,
        OperatorTag.W1_plus_F12.value,
    ):
        inside = (r > 0.0) & (r < SQRT_HALF)
        return np.where(inside, 2.0 * r / (1.0 - r**2) ** 2, 0.0)
    if tag == OperatorTag.E12_plus_F12_squared.value:
        inside = (r > 0.0) & (r < 0.5)
        return np.where(inside, 1.0 / (1.0 - r) ** 2, 0.0)
    raise DomainError(f"unknown closed-form tag {tag!r}")


def _uniform_samples(tag: OperatorTag, outer: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    rs = np.linspace(0.0, outer, n)
    return rs, _closed_cdf(tag.value, rs)


def catalog_brown(tag: OperatorTag | str) -> RadialPlanarMeasure:
    """Closed-form Brown measure for a catalogued operator."""
    tag = OperatorTag(tag)
    n = SIZE.cdf_samples
    if tag is OperatorTag.W1F12:
        rs, fs = _uniform_samples(tag, SQRT_HALF, n)
        return RadialPlanarMeasure(
            center=0j,
            atoms=((0j, 0.5),),
            radii=rs,
            cumulative=fs,
            support_inner=0.0,
            support_outer=SQRT_HALF,
            closed_form=tag.value,
        )
    if tag is OperatorTag.E12_plus_F12:
        rs, fs = _uniform_samples(tag, SQRT_HALF, n)
        return RadialPlanarMeasure(
            center=0j,
            atoms=(),
            radii=rs,
            cumulative=fs,
            support_inner=0.0,
            support_outer=SQRT_HALF,
            closed_form=tag.value,
        )
    if tag is OperatorTag.E12_plus_F12_squared:
        rs, fs = _uniform_samples(tag, 0.5, n)
        return RadialPlanarMeasure(
            center=0j,
            atoms=(),
            radii=rs,
            cumulative=fs,
            support_inner=0.0,
            support_outer=0.5,
            closed_form=tag.value,
        )
    if tag is OperatorTag.W1_plus_F12_squared:
        rs, fs = _uniform_samples(tag, SQRT_HALF, n)
        return RadialPlanarMeasure(
            center=1.0 + 0j,
            atoms=(),
            radii=rs,
            cumulative=fs,
            support_inner=0.0,
            support_outer=SQRT_HALF,
            closed_form=tag.value,
        )
    # Not radial about any center: stored in the coordinate rho = |z^2 - 1|
    # with center 0 recording the z -> -z symmetry point.
    rs, fs = _uniform_samples(tag, SQRT_HALF, n)
    return RadialPlanarMeasure(
        center=0j,
        atoms=(),
        radii=rs,
        cumulative=fs,
        support_inner=0.0,
        support_outer=SQRT_HALF,
        closed_form=tag.value,
    )


def support_membership(tag: OperatorTag | str, z: complex) -> bool:
    """Whether z lies in the closed support of the catalogued Brown measure."""
    tag = OperatorTag(tag)
    z = complex(z)
    if tag in (OperatorTag.W1F12, OperatorTag.E12_plus_F12):
        return abs(z) <= SQRT_HALF
    if tag is OperatorTag.E12_plus_F12_squared:
        return abs(z) <= 0.5
    if tag is OperatorTag.W1_plus_F12_squared:
        return abs(z - 1.0) <= SQRT_HALF
    return abs(z * z - 1.0) <= SQRT_HALF


def pullback_radii(tag: OperatorTag | str, values: np.ndarray) -> np.ndarray:
    """Map sampled eigenvalues to the radial coordinate of the catalog law."""
    tag = OperatorTag(tag)
    values = np.asarray(values, dtype=complex)
    if tag is OperatorTag.W1_plus_F12:
        return np.abs(values * values - 1.0)
    center = catalog_brown(tag).center
    return np.abs(values - center)


def conditional_cdf(measure: RadialPlanarMeasure):
    """CDF of the measure conditioned on not sitting in the center atom."""
    a = measure.center_atom_mass
    if a >= 1.0:
        raise DomainError("conditional law undefined: all mass sits in the atom")

    def cdf(r):
        return (np.asarray(measure.cdf(r), dtype=float) - a) / (1.0 - a)

    return cdf


# -- the radial recipe -----------------------------------------------------


def _degenerate_circle(c: float, n: int) -> RadialPlanarMeasure:
    # uniform measure on the circle of radius ||H||_2 = c; at c = 0 this is
    # the point mass at the origin
    rs = np.array([c, c])
    fs = np.array([1.0, 1.0])
    return RadialPlanarMeasure(
        center=0j,
        atoms=((0j, 1.0),) if c == 0.0 else (),
        radii=rs,
        cumulative=fs,
        support_inner=c,
        support_outer=c,
        closed_form=None,
    )


def brown_rdiagonal(
    mu_h: ScalarMeasure,
    samples: int | None = None,
    allow_dirac: bool = False,
) -> RadialPlanarMeasure:
    """Brown measure of U H for U Haar unitary free from positive H ~ mu_h.

    The output is rotation invariant about 0: an atom mu_h({0}) at the
    origin and the radial CDF obtained by inverting the quantile map
    r(t) = S_{mu_{H^2}}(t - 1)^{-1/2}.  Point masses are rejected unless
    allow_dirac is set, in which case the uniform measure on the circle of
    radius ||H||_2 is returned as the degenerate limit.
    """
    if samples is None:
        samples = SIZE.cdf_samples
    if samples < 16:
        raise DomainError("need at least 16 CDF samples")
    if mu_h.is_dirac:
        if not allow_dirac:
            raise DiracInputError(
                "the radial recipe needs a non-degenerate distribution; "
                "pass allow_dirac=True for the uniform-circle limit"
            )
        return _degenerate_circle(mu_h.atoms[0][0], samples)

    atom = mu_h.mass_at(0.0)
    mu_sq = mu_h.pushforward_square()
    second = moment(mu_h, 2)
    outer = math.sqrt(second)
    inv_sq = mu_h.inverse_square_moment()
    inner = 0.0 if (atom > 0.0 or not math.isfinite(inv_sq)) else 1.0 / math.sqrt(inv_sq)

    # quantile map on a grid strongly graded toward t = atom, where the
    # radius approaches the inner edge and the CDF starts out flat; the
    # offset floor keeps chi evaluation away from the psi(-inf) cancellation
    u = np.linspace(0.0, 1.0, SIZE.quantile_grid + 1)[1:]
    t = atom + (1.0 - atom) * np.maximum(u**4, 1e-10)
    t[-1] = 1.0
    w = t[:-1] - 1.0
    z = chi_vector(mu_sq, w)
    s_vals = z * (1.0 + w) / w
    if np.any(s_vals <= 0.0):
        raise DomainError("S-transform came out nonpositive; measure outside scope")
    r_dense = np.empty_like(t)
    r_dense[:-1] = s_vals**-0.5
    r_dense[-1] = outer
    f_dense = t

    # strictly increasing radii for interpolation (solver noise at the far
    # inner edge can reorder near-equal radii)
    running = np.maximum.accumulate(r_dense)
    keep = np.concatenate(([True], r_dense[1:] > running[:-1]))
    r_dense, f_dense = r_dense[keep], f_dense[keep]

    # sample radii clustered quadratically at both support edges: monotone
    # cubic reconstruction loses accuracy exactly where the CDF flattens out
    v = np.linspace(0.0, 1.0, samples)
    rs = inner + (outer - inner) * 0.5 * (1.0 - np.cos(np.pi * v))
    fs = np.empty_like(rs)
    inside = (rs >= r_dense[0]) & (rs <= r_dense[-1])
    interp = PchipInterpolator(r_dense, f_dense, extrapolate=False)
    fs[inside] = interp(rs[inside])
    # below the first dense sample the CDF runs linearly into the anchor
    low = rs < r_dense[0]
    if low.any():
        r0, f0 = r_dense[0], f_dense[0]
        frac = (rs[low] - inner) / (r0 - inner) if r0 > inner else 0.0
        fs[low] = atom + (f0 - atom) * frac
    fs[rs > r_dense[-1]] = 1.0
    fs = np.maximum.accumulate(np.clip(fs, atom, 1.0))
    fs[0] = atom
    fs[-1] = 1.0

    atoms = ((0j, atom),) if atom > 0.0 else ()
    return RadialPlanarMeasure(
        center=0j,
        atoms=atoms,
        radii=rs,
        cumulative=fs,
        support_inner=inner,
        support_outer=outer,
        closed_form=None,
    )
