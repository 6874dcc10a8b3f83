"""Least-singular-value concentration and the false-discovery threshold delta_f."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import stream
from .data import ConicSpec, generate_conics
from .noise import DEFAULT_MC_SAMPLES, PushforwardSampler


def smin_ratio_points(fmap, points):
    """s_min of the N x D feature matrix divided by sqrt(N)."""
    rows = fmap.evaluate(np.atleast_2d(points))
    n, dim = rows.shape
    if n < dim:
        raise ValueError(f"need N >= D, got N={n}, D={dim}")
    return float(np.linalg.svd(rows, compute_uv=False)[-1] / math.sqrt(n))


def smin_ratio(fmap, noise, n, seed=0):
    """smin ratio of N background samples pushed through a (whitened) map.

    Under isotropy this concentrates around 1 at rate N^(gamma - 1/2).
    """
    points = noise.sample(n, stream(seed, "smin", n))
    return smin_ratio_points(fmap, points)


def smin_ratio_table(fmap, noise, sizes, seeds):
    """Rows (N, seed, ratio) over a grid; plot-ready."""
    return [(int(n), int(s), smin_ratio(fmap, noise, n, s)) for n in sizes for s in seeds]


DEFAULT_SIGNAL_SIGMAS = (0.02, 0.1)
SIGNAL_RADIUS = 0.6


def signal_smin_table(fmap, sigmas, sizes, seeds, radius=SIGNAL_RADIUS):
    """Rows (sigma, N, seed, ratio) for N jittered points on a centred circle,
    the structured counterpart of :func:`smin_ratio_table`."""
    rows = []
    for sigma in sigmas:
        for n in sizes:
            for s in seeds:
                spec = ConicSpec.circle((0.0, 0.0), radius, int(n), float(sigma))
                pts, _ = generate_conics([spec], seed=s)
                rows.append((float(sigma), int(n), int(s), smin_ratio_points(fmap, pts)))
    return rows


def concentration_band(n, t=0.7, gamma=0.3):
    """Half-width t N^(gamma - 1/2) of the ratio band around 1."""
    return t * n ** (gamma - 0.5)


@dataclass(frozen=True)
class ConcentrationParams:
    """Inputs of the concentration bound. Orlicz norms are supplied, not estimated."""

    t: float = 0.7
    gamma: float = 0.3
    alpha: float = 2.0
    psi_norm: float = 1.0
    rho: float = 1.0
    lambda_norm: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("t must be positive")
        if self.gamma > 0.5:
            raise ValueError("gamma must be at most 1/2")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        if self.psi_norm <= 0 or self.rho <= 0 or self.lambda_norm < 0:
            raise ValueError("psi_norm and rho must be positive, lambda_norm nonnegative")


@dataclass(frozen=True)
class ConcentrationExponent:
    A: float
    B: float
    beta: float
    p_dn: float
    p: float
    c: float = 1.0

    @property
    def failure_exponent(self):
        """c p; the failure probability is bounded by exp(-c p)."""
        return self.c * self.p

    def to_dict(self):
        return {"A": self.A, "B": self.B, "beta": self.beta, "p_DN": self.p_dn, "p": self.p,
                "c": self.c, "failure_exponent": self.failure_exponent}


def concentration_probability_exponent(dim, n, params=ConcentrationParams()):
    """A, B, beta and the exponent p for a D-dimensional map and N samples.

    At N = 1 (or D = 1) the log factor vanishes and A = 0.
    """
    if dim < 1 or n < 1:
        raise ValueError("D and N must be at least 1")
    pr = params
    a = pr.psi_norm * math.sqrt(math.log(dim)) * math.log(n) ** (1 / pr.alpha) / math.sqrt(n)
    b = pr.rho ** 2 / math.sqrt(n) + math.sqrt(pr.lambda_norm) * a
    beta = 1 / (1 + 2 / pr.alpha)
    p_dn = (1 / max(b, a * a)) ** beta
    p = pr.t ** beta * n ** (beta * (pr.gamma - 0.5)) * p_dn
    return ConcentrationExponent(a, b, beta, p_dn, p, pr.c)


@dataclass(frozen=True)
class DeltaF:
    """Largest delta at which f is certified not to label N background samples."""

    value: float
    n: int
    t: float
    gamma: float
    samples: int
    endpoint: float
    upper_mass: float = 0.0
    lower_mass: float = 0.0

    @property
    def std_error(self):
        v = self.value
        return math.sqrt(max(v * (1 - v), 1.0 / self.samples) / self.samples)

    def to_dict(self):
        return {"value": self.value, "N": self.n, "t": self.t, "gamma": self.gamma,
                "samples": self.samples, "endpoint": self.endpoint,
                "upper_mass": self.upper_mass, "lower_mass": self.lower_mass,
                "std_error": self.std_error}


def _delta_f_values(values, n, t, gamma, samples):
    end = 1.0 - concentration_band(n, t, gamma)
    if end <= 0:
        return DeltaF(0.0, n, t, gamma, samples, end)
    upper = float(np.count_nonzero((values >= 0) & (values <= end)) / len(values))
    lower = float(np.count_nonzero((values >= -end) & (values <= 0)) / len(values))
    return DeltaF(min(upper, lower), n, t, gamma, samples, end, upper, lower)


def delta_f(f, fmap, noise, n, t=0.7, gamma=0.3, samples=DEFAULT_MC_SAMPLES, seed=0,
            sampler=None):
    """Smaller of the masses of f in [0, 1 - tN^(gamma-1/2)] and its mirror.

    ``f`` must be a unit functional on a whitened map; its offset is folded in.
    When the endpoint is not positive the intervals are empty and delta_f = 0.
    """
    sampler = sampler or PushforwardSampler(fmap, noise, samples, seed)
    return _delta_f_values(sampler.values(f), int(n), t, gamma, sampler.samples)


def delta_f_curve(f, fmap, noise, sizes, t=0.7, gamma=0.3, samples=DEFAULT_MC_SAMPLES,
                  seed=0):
    """delta_f over several N on one shared Monte Carlo stream."""
    sampler = PushforwardSampler(fmap, noise, samples, seed)
    values = sampler.values(f)
    return [_delta_f_values(values, int(n), t, gamma, sampler.samples) for n in sizes]


def recommend_delta(f, fmap, noise, n, t=0.7, gamma=0.3, safety=0.5,
                    samples=DEFAULT_MC_SAMPLES, seed=0):
    """safety * delta_f: a per-label guard, not a bound uniform over all labels."""
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    return safety * delta_f(f, fmap, noise, n, t, gamma, samples, seed).value
