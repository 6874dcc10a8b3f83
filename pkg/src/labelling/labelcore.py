"""Candidate labels from the least right singular vector, and the label check."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .noise import Interval, MassEstimate, PushforwardSampler

UNIT_TOL = 1e-12
DEGENERACY_TOL = 1e-10


def canonical_direction(ell, offset=0.0):
    """Normalize ``ell`` to unit length with its first nonzero entry positive.

    The offset is rescaled along with ``ell`` so the zero set is unchanged.
    """
    ell = np.asarray(ell, dtype=float)
    norm = np.linalg.norm(ell)
    if norm == 0:
        raise ValueError("a label functional must be nonzero")
    ell = ell / norm
    offset = offset / norm
    nz = np.flatnonzero(np.abs(ell) > UNIT_TOL)
    if len(nz) and ell[nz[0]] < 0:
        ell, offset = -ell, -offset
    return ell, float(offset)


@dataclass(frozen=True, eq=False)
class PotentialLabel:
    """f(x) = <ell, Phi(x)> - offset with ||ell|| = 1."""

    ell: np.ndarray
    offset: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        ell = np.array(self.ell, dtype=float)
        if abs(np.linalg.norm(ell) - 1.0) > UNIT_TOL:
            raise ValueError("ell must be a unit vector; use PotentialLabel.from_vector")
        ell.setflags(write=False)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_vector(cls, ell, offset=0.0, degenerate=False):
        ell, offset = canonical_direction(ell, offset)
        return cls(ell, offset, degenerate)

    def __call__(self, features):
        return np.asarray(features) @ self.ell - self.offset

    def evaluate(self, fmap, points):
        return self(fmap.evaluate(points))

    def __neg__(self):
        # bypasses canonicalization on purpose: -f is a distinct functional
        return PotentialLabel(-self.ell, -self.offset, self.degenerate)

    def shifted(self, c):
        """The label f - c."""
        return replace(self, offset=self.offset + c)

    def to_dict(self, map_ref=None):
        return {"ell": self.ell.tolist(), "offset": self.offset,
                "degenerate": self.degenerate, "map_ref": map_ref}

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["ell"], float), data["offset"],
                   bool(data.get("degenerate", False)))


@dataclass(frozen=True, eq=False)
class LabelCheck:
    accepted: bool
    interval: Interval
    mass: MassEstimate
    shifted_by: float = 0.0
    label: PotentialLabel | None = field(default=None, repr=False)

    def to_dict(self):
        return {"accepted": self.accepted,
                "interval": [self.interval.lo, self.interval.hi],
                "mass": self.mass.value, "std_error": self.mass.std_error,
                "samples": self.mass.samples, "shifted_by": self.shifted_by}


def _rows(fmap, points):
    return fmap.evaluate(np.atleast_2d(np.asarray(points, float)))


def same_map(a, b):
    if a is b:
        return True
    if (a.input_dim, a.degree) != (b.input_dim, b.degree):
        return False
    if a.transform is None or b.transform is None:
        return a.transform is None and b.transform is None
    return np.array_equal(a.transform, b.transform)


def candidate_from_rows(rows):
    """Least right singular vector of the |C| x D feature matrix."""
    rows = np.asarray(rows, dtype=float)
    n, dim = rows.shape
    if n < dim:
        raise ValueError(f"need at least D={dim} points for a candidate, got {n}")
    _, s, vt = np.linalg.svd(rows, full_matrices=False)
    degenerate = dim > 1 and (s[-2] - s[-1]) <= DEGENERACY_TOL * max(s[0], np.finfo(float).tiny)
    return PotentialLabel.from_vector(vt[-1], 0.0, bool(degenerate))


def candidate_label(points, fmap):
    return candidate_from_rows(_rows(fmap, points))


def tight_interval(f, fmap, points):
    """Smallest closed interval containing f(points)."""
    values = f.evaluate(fmap, np.atleast_2d(points))
    if len(values) == 0:
        raise ValueError("need at least one point")
    return Interval(float(values.min()), float(values.max()))


def check_rows(f, rows, sampler, delta, has_constants=True, early_exit=False):
    """Label check on precomputed feature rows; see :func:`check_label`.

    With ``early_exit`` a rejection may carry only a lower bound on the mass;
    the accept/reject verdict is identical either way.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    values = f(rows)
    interval = Interval(float(values.min()), float(values.max()))
    if early_exit:
        mass = sampler.mass_below(f, interval, delta)
    else:
        mass = sampler.mass(f, interval)
    if not mass.value < delta:
        return LabelCheck(False, interval, mass, 0.0, f)
    if 0.0 in interval:
        return LabelCheck(True, interval, mass, 0.0, f)
    if has_constants:
        c = interval.midpoint
        return LabelCheck(True, interval.shift(c), mass, c, f.shifted(c))
    return LabelCheck(False, interval, mass, 0.0, f)


def check_label(f, fmap, points, noise_or_sampler, delta, samples=None, seed=0):
    """Decide whether ``f`` labels ``points`` at threshold ``delta``.

    The witnessing interval is the tight interval of f over the points. If
    it misses 0 and the potential labels contain constants, the label is
    shifted by the interval midpoint so that the translated interval
    contains 0 (the mass is unchanged by the translation).
    """
    sampler = _as_sampler(fmap, noise_or_sampler, samples, seed)
    return check_rows(f, _rows(fmap, points), sampler, delta, fmap.has_constants)


def is_label(f, fmap, points, noise_or_sampler, delta, samples=None, seed=0):
    """Direct (mu, delta)-label test without shifting.

    Uses the smallest interval containing both 0 and f(points); since the
    mass is monotone in the interval, f is a label iff this one qualifies.
    """
    sampler = _as_sampler(fmap, noise_or_sampler, samples, seed)
    values = f.evaluate(fmap, np.atleast_2d(points))
    interval = Interval(min(0.0, float(values.min())), max(0.0, float(values.max())))
    return sampler.mass(f, interval).value < delta


def fit_rows(rows, sampler, delta, has_constants=True, early_exit=False):
    """Candidate plus check on feature rows; returns the :class:`LabelCheck`."""
    return check_rows(candidate_from_rows(rows), rows, sampler, delta, has_constants,
                      early_exit)


def estimate_label_set(points, fmap, noise_or_sampler, delta, samples=None, seed=0):
    """Return ``[label]`` when the candidate for ``points`` is accepted, else ``[]``."""
    sampler = _as_sampler(fmap, noise_or_sampler, samples, seed)
    check = fit_rows(_rows(fmap, points), sampler, delta, fmap.has_constants)
    return [check.label] if check.accepted else []


def _as_sampler(fmap, noise_or_sampler, samples, seed):
    if isinstance(noise_or_sampler, PushforwardSampler):
        if not same_map(noise_or_sampler.fmap, fmap):
            raise ValueError("sampler was built for a different feature map")
        return noise_or_sampler
    kwargs = {} if samples is None else {"samples": samples}
    return PushforwardSampler(fmap, noise_or_sampler, seed=seed, **kwargs)


def base_coefficients(f, fmap):
    """Coefficients of f on the plain monomial basis, offset folded into the
    constant monomial (the zero multi-index, always coordinate 0)."""
    coeffs = fmap.to_base_coefficients(f.ell)
    coeffs[0] -= f.offset
    return coeffs


def label_from_coefficients(coeffs, fmap):
    """Unit-norm label on ``fmap`` representing the monomial polynomial ``coeffs``."""
    return PotentialLabel.from_vector(fmap.from_base_coefficients(coeffs), 0.0)
