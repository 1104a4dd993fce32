"""Probability measures on [0, inf) and their multiplicative transforms.

A measure is a finite list of atoms plus an optional piecewise-linear
density, total mass one.  The moment transform

    psi(z) = int t z / (1 - t z) dmu(t)

is strictly increasing on the principal branch (-inf, 1/max_support); chi
denotes its functional inverse there and the S-transform is
S(w) = chi(w) (1 + w) / w, extended continuously by S(0) = 1/mean.  For a
measure supported on {0, a} these have closed forms; the numeric path uses
bracketed bisection with a Newton polish and must agree with the closed
forms to within Tolerances.closed_numeric_atol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import DomainError, MeasureFormatError, PoleError

__all__ = [
    "ScalarMeasure",
    "TransformSample",
    "moment",
    "psi_transform",
    "chi_inverse",
    "chi_inverse_detailed",
    "s_transform",
]


@dataclass(frozen=True)
class TransformSample:
    """One evaluated transform point with the branch that produced it."""

    argument: float
    value: float
    branch_info: str


@dataclass(frozen=True)
class ScalarMeasure:
    """Probability measure on [0, inf): atoms plus optional sampled density.

    atoms: (location, mass) pairs, sorted strictly increasing on construction;
    equal locations are merged.  density: (x, f(x)) samples interpreted as a
    piecewise-linear density, integrated by the trapezoid rule.  Total mass
    must equal one within Tolerances.mass_atol.
    """

    atoms: tuple[tuple[float, float], ...]
    density: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self) -> None:
        cleaned: dict[float, float] = {}
        for loc, mass in self.atoms:
            loc = float(loc)
            mass = float(mass)
            if not math.isfinite(loc) or loc < 0.0:
                raise MeasureFormatError(f"atom location must be finite and >= 0, got {loc}")
            if not 0.0 < mass <= 1.0:
                raise MeasureFormatError(f"atom mass must lie in (0, 1], got {mass}")
            cleaned[loc] = cleaned.get(loc, 0.0) + mass
        object.__setattr__(self, "atoms", tuple(sorted(cleaned.items())))

        dens = tuple((float(x), float(f)) for x, f in self.density)
        xs = [x for x, _ in dens]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise MeasureFormatError("density grid must be strictly increasing")
        if any(x < 0.0 for x in xs):
            raise MeasureFormatError("density support must lie in [0, inf)")
        if any(f < 0.0 for _, f in dens):
            raise MeasureFormatError("density values must be nonnegative")
        if len(dens) == 1:
            raise MeasureFormatError("a density needs at least two samples")
        object.__setattr__(self, "density", dens)

        total = sum(m for _, m in self.atoms) + self._density_integral()
        if abs(total - 1.0) > TOL.mass_atol:
            raise MeasureFormatError(f"total mass is {total!r}, expected 1 within {TOL.mass_atol}")

    # -- basic structure -------------------------------------------------

    def _density_integral(self) -> float:
        if not self.density:
            return 0.0
        xs = np.array([x for x, _ in self.density])
        fs = np.array([f for _, f in self.density])
        return float(np.trapezoid(fs, xs))

    def mass_at(self, loc: float) -> float:
        """Atom mass sitting exactly at loc (0.0 when there is none)."""
        for x, m in self.atoms:
            if x == loc:
                return m
        return 0.0

    @property
    def max_support(self) -> float:
        hi = self.atoms[-1][0] if self.atoms else 0.0
        if self.density:
            hi = max(hi, self.density[-1][0])
        return hi

    @property
    def is_dirac(self) -> bool:
        return not self.density and len(self.atoms) == 1

    @property
    def mean(self) -> float:
        return moment(self, 1)

    def inverse_square_moment(self) -> float:
        """int t^-2 dmu(t); inf when there is mass at (or touching) zero."""
        if self.mass_at(0.0) > 0.0:
            return math.inf
        total = sum(m / t**2 for t, m in self.atoms)
        if self.density:
            xs = np.array([x for x, _ in self.density])
            fs = np.array([f for _, f in self.density])
            if xs[0] == 0.0 and fs[0] > 0.0:
                return math.inf
            with np.errstate(divide="ignore"):
                vals = np.where(xs > 0.0, fs / np.maximum(xs, 1e-300) ** 2, np.inf)
            if np.any(~np.isfinite(vals) & (fs > 0.0)):
                return math.inf
            total += float(np.trapezoid(np.where(np.isfinite(vals), vals, 0.0), xs))
        return total

    def pushforward_square(self) -> "ScalarMeasure":
        """Distribution of t^2 when t is distributed by this measure."""
        atoms = tuple((t * t, m) for t, m in self.atoms)
        dens: tuple[tuple[float, float], ...] = ()
        if self.density:
            xs = np.array([x for x, _ in self.density])
            fs = np.array([f for _, f in self.density])
            cont = float(np.trapezoid(fs, xs))
            if cont > 0.0:
                # y = x^2, g(y) = f(sqrt(y)) / (2 sqrt(y)); refine the grid so
                # the trapezoid mass survives the change of variables, then
                # rescale the transformed samples to keep it exact
                xr = np.unique(
                    np.concatenate(
                        [np.linspace(xs[i], xs[i + 1], 9) for i in range(len(xs) - 1)]
                    )
                )
                fr = np.interp(xr, xs, fs)
                pos = xr > 0.0
                ys = xr[pos] ** 2
                gs = fr[pos] / (2.0 * xr[pos])
                mass = float(np.trapezoid(gs, ys))
                if mass > 0.0 and len(ys) >= 2:
                    gs *= cont / mass
                    dens = tuple(zip(ys.tolist(), gs.tolist()))
        return ScalarMeasure(atoms, dens)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "atoms": [[loc, mass] for loc, mass in self.atoms],
            "density": [[x, f] for x, f in self.density],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ScalarMeasure":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MeasureFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "atoms" not in payload:
            raise MeasureFormatError("measure JSON must be an object with an 'atoms' key")
        atoms = payload["atoms"]
        density = payload.get("density", [])
        try:
            return cls(
                tuple((float(a), float(b)) for a, b in atoms),
                tuple((float(a), float(b)) for a, b in density),
            )
        except (TypeError, ValueError) as exc:
            raise MeasureFormatError(f"malformed measure entries: {exc}") from exc


# -- moments --------------------------------------------------------------


def moment(measure: ScalarMeasure, k: int) -> float:
    """k-th moment int t^k dmu(t); moment(mu, 0) is exactly 1."""
    if k < 0:
        raise DomainError("moment order must be a nonnegative integer")
    if k == 0:
        return 1.0
    total = sum(m * t**k for t, m in measure.atoms)
    if measure.density:
        xs = np.array([x for x, _ in measure.density])
        fs = np.array([f for _, f in measure.density])
        total += float(np.trapezoid(fs * xs**k, xs))
    return total


# -- psi ------------------------------------------------------------------


def _psi_raw(measure: ScalarMeasure, z: np.ndarray) -> np.ndarray:
    """Vector psi with no domain policing; callers keep z on the branch."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    for t, m in measure.atoms:
        if t == 0.0:
            continue
        out = out + m * t * z / (1.0 - t * z)
    if measure.density:
        xs = np.array([x for x, _ in measure.density])
        fs = np.array([f for _, f in measure.density])
        integrand = xs[None, :] * z.reshape(-1, 1) / (1.0 - xs[None, :] * z.reshape(-1, 1))
        vals = np.trapezoid(fs[None, :] * integrand, xs, axis=1)
        out = out + vals.reshape(z.shape)
    return out


def _psi_prime(measure: ScalarMeasure, z: float) -> float:
    total = 0.0
    for t, m in measure.atoms:
        if t == 0.0:
            continue
        total += m * t / (1.0 - t * z) ** 2
    if measure.density:
        xs = np.array([x for x, _ in measure.density])
        fs = np.array([f for _, f in measure.density])
        total += float(np.trapezoid(fs * xs / (1.0 - xs * z) ** 2, xs))
    return total


def psi_transform(measure: ScalarMeasure, z: float) -> float:
    """psi(z) = int t z / (1 - t z) dmu(t) on the principal branch."""
    z = float(z)
    for t, m in measure.atoms:
        if t > 0.0 and 1.0 - t * z == 0.0:
            raise PoleError(f"psi evaluated at pole z = 1/{t}")
    hi = measure.max_support
    if hi > 0.0 and z >= 1.0 / hi:
        raise DomainError(f"z = {z} lies outside the principal branch (-inf, {1.0 / hi})")
    return float(_psi_raw(measure, np.array([z]))[0])


# -- chi ------------------------------------------------------------------


def _psi_lower_limit(measure: ScalarMeasure) -> float:
    """lim_{z -> -inf} psi(z) = mu({0}) - 1."""
    return measure.mass_at(0.0) - 1.0


def _chi_closed(measure: ScalarMeasure, y: float) -> float:
    """Exact inverse for purely atomic measures with at most two atoms."""
    atoms = measure.atoms
    if len(atoms) == 1:
        c, _ = atoms[0]
        if c == 0.0:
            raise DomainError("psi of the Dirac at zero is identically 0")
        return y / (c * (1.0 + y))
    (a, am), (b, bm) = atoms
    if a == 0.0:
        return y / (b * (y + bm))
    # a b (y+1) z^2 - (y (a+b) + mean) z + y = 0 on the principal branch
    a2 = a * b * (y + 1.0)
    a1 = -(y * (a + b) + (am * a + bm * b))
    a0 = y
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        raise DomainError(f"y = {y} is not attained by psi on the principal branch")
    sq = math.sqrt(disc)
    q = -(a1 + math.copysign(sq, a1)) / 2.0
    roots = []
    if a2 != 0.0:
        roots.append(q / a2)
    if q != 0.0:
        roots.append(a0 / q)
    best = None
    for z in roots:
        if z >= 1.0 / b:
            continue
        resid = abs(float(_psi_raw(measure, np.array([z]))[0]) - y)
        if best is None or resid < best[1]:
            best = (z, resid)
    if best is None or best[1] > 1e-6 * (1.0 + abs(y)):
        raise DomainError(f"y = {y} is not attained by psi on the principal branch")
    return best[0]


def _chi_bracket(measure: ScalarMeasure, y: float) -> tuple[float, float]:
    hi_support = measure.max_support
    if y > 0.0:
        if hi_support == 0.0:
            raise DomainError("psi of a measure concentrated at 0 never leaves 0")
        lo, hi = 0.0, (1.0 - TOL.bracket_delta) / hi_support
        if float(_psi_raw(measure, np.array([hi]))[0]) < y:
            raise DomainError(f"y = {y} exceeds psi on the principal branch")
        return lo, hi
    # negative y: expand to the left until psi(lo) <= y
    if y <= _psi_lower_limit(measure):
        raise DomainError(
            f"y = {y} is at or below the lower limit {_psi_lower_limit(measure)} of psi"
        )
    lo, hi = -1.0, 0.0
    for _ in range(240):
        if float(_psi_raw(measure, np.array([lo]))[0]) <= y:
            return lo, hi
        lo *= 2.0
    raise DomainError(f"failed to bracket y = {y}; it sits too close to the lower limit")


def _chi_numeric(measure: ScalarMeasure, y: float) -> float:
    # Safeguarded Newton: every step either is a Newton update inside the
    # current bracket or a bisection of it, and the iterate with the smallest
    # residual wins.  psi(lo) <= y <= psi(hi) holds throughout.
    if y == 0.0:
        return 0.0
    lo, hi = _chi_bracket(measure, y)
    z = 0.5 * (lo + hi)
    best_f, best_z = math.inf, z
    for _ in range(300):
        f = float(_psi_raw(measure, np.array([z]))[0]) - y
        if abs(f) < best_f:
            best_f, best_z = abs(f), z
        if f == 0.0:
            return z
        if f < 0.0:
            lo = z
        else:
            hi = z
        fp = _psi_prime(measure, z)
        z_next = z - f / fp if fp > 0.0 else 0.5 * (lo + hi)
        if not lo < z_next < hi:
            z_next = 0.5 * (lo + hi)
        if z_next in (lo, hi) or abs(z_next - z) <= 1e-16 * (1.0 + abs(z_next)):
            f_next = abs(float(_psi_raw(measure, np.array([z_next]))[0]) - y)
            if f_next < best_f:
                best_z = z_next
            break
        z = z_next
    return best_z


def chi_inverse(measure: ScalarMeasure, y: float, method: str = "auto") -> float:
    """Inverse of psi on the principal branch.

    method 'auto' uses the closed form for purely atomic measures with at
    most two atoms and falls back to bisection plus Newton; 'closed' and
    'numeric' force one path (used by the cross-validation tests).
    """
    return chi_inverse_detailed(measure, y, method).value


def chi_inverse_detailed(measure: ScalarMeasure, y: float, method: str = "auto") -> TransformSample:
    """chi with the branch that produced the value attached."""
    y = float(y)
    if method not in ("auto", "closed", "numeric"):
        raise DomainError(f"unknown chi method {method!r}")
    closed_ok = not measure.density and len(measure.atoms) <= 2
    if method == "closed" and not closed_ok:
        raise DomainError("closed-form chi needs at most two atoms and no density")
    if y == 0.0:
        return TransformSample(y, 0.0, "principal:origin")
    if y <= _psi_lower_limit(measure):
        raise DomainError(
            f"y = {y} is at or below the lower limit {_psi_lower_limit(measure)} of psi"
        )
    if method == "closed" or (method == "auto" and closed_ok):
        return TransformSample(y, _chi_closed(measure, y), "principal:closed-form")
    return TransformSample(y, _chi_numeric(measure, y), "principal:bisection-newton")


def chi_vector(measure: ScalarMeasure, ys: np.ndarray) -> np.ndarray:
    """Vectorized numeric chi for strictly negative arguments on the branch.

    Pure bisection run to float spacing; used by the radial recipe where
    thousands of inversions are needed at once.
    """
    ys = np.asarray(ys, dtype=float)
    if np.any(ys >= 0.0) or np.any(ys <= _psi_lower_limit(measure)):
        raise DomainError("chi_vector expects arguments strictly inside (lower limit, 0)")
    lo = -np.ones_like(ys)
    hi = np.zeros_like(ys)
    for _ in range(240):
        mask = _psi_raw(measure, lo) > ys
        if not mask.any():
            break
        lo[mask] *= 2.0
    else:
        raise DomainError("failed to bracket some arguments in chi_vector")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (mid == lo) | (mid == hi)
        if done.all():
            break
        below = _psi_raw(measure, mid) < ys
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# -- S-transform ----------------------------------------------------------


def s_transform(measure: ScalarMeasure, w: float, method: str = "auto") -> float:
    """S(w) = chi(w) (1 + w) / w on (mu({0}) - 1, 0), with S(0) = 1/mean.

    Strictly decreasing on its domain for every non-Dirac measure.
    """
    w = float(w)
    if w == 0.0:
        mean = moment(measure, 1)
        if mean <= 0.0:
            raise DomainError("S(0) = 1/mean needs a measure with positive mean")
        return 1.0 / mean
    lower = _psi_lower_limit(measure)
    if not lower < w < 0.0:
        raise DomainError(f"S-transform argument {w} outside ({lower}, 0]")
    z = chi_inverse(measure, w, method)
    return z * (1.0 + w) / w
