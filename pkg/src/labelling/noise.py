"""Background noise measures and Monte Carlo pushforward masses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import stream

DEFAULT_MC_SAMPLES = 20_000
MIN_MC_SAMPLES = 1000


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, "sample")


@dataclass(frozen=True, eq=False)
class BackgroundNoise:
    """A sampleable probability measure on R^d.

    Build instances with :func:`uniform_box`, :func:`gaussian` or
    :func:`empirical` rather than calling the constructor directly.
    """

    kind: str
    params: dict

    def __post_init__(self):
        p = self.params
        if self.kind == "uniform_box":
            lo, hi = np.asarray(p["lower"], float), np.asarray(p["upper"], float)
            if lo.shape != hi.shape or lo.ndim != 1 or not np.all(lo < hi):
                raise ValueError("uniform_box needs lower < upper componentwise")
        elif self.kind == "gaussian":
            mean = np.asarray(p["mean"], float)
            cov = np.asarray(p["cov"], float)
            if cov.shape != (len(mean), len(mean)):
                raise ValueError("gaussian covariance shape does not match mean")
            if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov)[0] <= 0:
                raise ValueError("gaussian covariance must be symmetric positive definite")
        elif self.kind == "empirical":
            pts = np.asarray(p["points"], float)
            if pts.ndim != 2 or len(pts) == 0:
                raise ValueError("empirical noise needs at least one point")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @property
    def dim(self):
        if self.kind == "uniform_box":
            return len(self.params["lower"])
        if self.kind == "gaussian":
            return len(self.params["mean"])
        return np.asarray(self.params["points"]).shape[1]

    def sample(self, n, seed=0):
        """Draw ``n`` i.i.d. points; ``seed`` is an int or a numpy Generator."""
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = _rng(seed)
        p = self.params
        if self.kind == "uniform_box":
            lo, hi = np.asarray(p["lower"], float), np.asarray(p["upper"], float)
            return lo + (hi - lo) * rng.random((n, len(lo)))
        if self.kind == "gaussian":
            mean = np.asarray(p["mean"], float)
            chol = np.linalg.cholesky(np.asarray(p["cov"], float))
            return mean + rng.standard_normal((n, len(mean))) @ chol.T
        pts = np.asarray(p["points"], float)
        return pts[rng.integers(0, len(pts), size=n)]

    def to_dict(self):
        params = {k: np.asarray(v, float).tolist() for k, v in self.params.items()}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], {k: np.asarray(v, float) for k, v in data["params"].items()})


def uniform_box(lower, upper):
    return BackgroundNoise("uniform_box", {"lower": np.atleast_1d(np.asarray(lower, float)),
                                           "upper": np.atleast_1d(np.asarray(upper, float))})


def gaussian(mean, cov=None):
    mean = np.atleast_1d(np.asarray(mean, float))
    cov = np.eye(len(mean)) if cov is None else np.asarray(cov, float)
    return BackgroundNoise("gaussian", {"mean": mean, "cov": cov})


def empirical(points):
    return BackgroundNoise("empirical", {"points": np.atleast_2d(np.asarray(points, float))})


def sample(noise, n, seed=0):
    return noise.sample(n, seed)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    def __contains__(self, value):
        return self.lo <= value <= self.hi

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def shift(self, c):
        return Interval(self.lo - c, self.hi - c)

    def hull(self, other):
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


@dataclass(frozen=True)
class MassEstimate:
    """Monte Carlo mass; ``lower_bound`` marks an early-exit partial count."""

    value: float
    samples: int
    lower_bound: bool = False

    @property
    def std_error(self):
        return math.sqrt(self.value * (1.0 - self.value) / self.samples)


class PushforwardSampler:
    """Cached feature samples Phi(X_i), X_i ~ noise, shared by many mass queries.

    Every mass evaluated through one sampler uses the same draws, so
    comparisons between intervals or labels are free of Monte Carlo jitter.
    """

    def __init__(self, fmap, noise, samples=DEFAULT_MC_SAMPLES, seed=0):
        if samples < MIN_MC_SAMPLES:
            raise ValueError(f"need at least {MIN_MC_SAMPLES} Monte Carlo samples")
        if noise.dim != fmap.input_dim:
            raise ValueError("noise dimension does not match feature map input dimension")
        self.fmap = fmap
        self.noise = noise
        self.samples = samples
        self.seed = seed
        self._features = None

    @property
    def features(self):
        if self._features is None:
            pts = self.noise.sample(self.samples, stream(self.seed, "pushforward"))
            feats = self.fmap.evaluate(pts)
            feats.setflags(write=False)
            self._features = feats
        return self._features

    def values(self, label):
        """f(X_i) for every cached draw."""
        return self.features @ label.ell - label.offset

    def mass(self, label, interval):
        v = self.values(label)
        count = np.count_nonzero((v >= interval.lo) & (v <= interval.hi))
        return MassEstimate(count / self.samples, self.samples)

    def mass_below(self, label, interval, delta, chunk=2048):
        """Like :meth:`mass` but may stop early once the mass provably reaches ``delta``.

        The count over a prefix of the draws never exceeds the full count, so
        once a running prefix count reaches ``delta * samples`` the verdict is
        final; the returned estimate is then a lower bound.
        """
        feats = self.features
        limit = delta * self.samples
        count = 0
        for start in range(0, self.samples, chunk):
            v = feats[start:start + chunk] @ label.ell - label.offset
            count += np.count_nonzero((v >= interval.lo) & (v <= interval.hi))
            if count >= limit and start + chunk < self.samples:
                return MassEstimate(count / self.samples, self.samples, True)
        return MassEstimate(count / self.samples, self.samples)

    def masses(self, label, intervals):
        v = self.values(label)
        return [MassEstimate(np.count_nonzero((v >= i.lo) & (v <= i.hi)) / self.samples,
                             self.samples) for i in intervals]


def pushforward_mass(f, fmap, interval, noise, samples=DEFAULT_MC_SAMPLES, seed=0):
    """Estimate (f_* noise)(interval) from ``samples`` draws."""
    return PushforwardSampler(fmap, noise, samples, seed).mass(f, interval)
