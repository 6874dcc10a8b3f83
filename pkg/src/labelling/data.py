"""Synthetic datasets: noisy conics and phase-space pendulums."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._random import stream
from .noise import uniform_box

DEFAULT_BOX = ((-1.0, -1.0), (1.0, 1.0))
# ellipse cross-term tolerance when reading a label as a pendulum
CROSS_TERM_TOL = 0.05


def conic_to_monomial(coeffs):
    """(a, b, c, d, e, g) of a x^2 + b xy + c y^2 + d x + e y + g  ->  graded-lex
    coordinates (1, x, y, x^2, xy, y^2) of the degree-2 monomial map."""
    a, b, c, d, e, g = np.asarray(coeffs, float)
    return np.array([g, d, e, a, b, c])


def monomial_to_conic(coords):
    g, d, e, a, b, c = np.asarray(coords, float)
    return np.array([a, b, c, d, e, g])


def conic_value(coeffs, points):
    a, b, c, d, e, g = np.asarray(coeffs, float)
    x, y = np.asarray(points, float).T
    return a * x * x + b * x * y + c * y * y + d * x + e * y + g


def conic_gradient(coeffs, points):
    a, b, c, d, e, _ = np.asarray(coeffs, float)
    x, y = np.asarray(points, float).T
    return np.stack([2 * a * x + b * y + d, b * x + 2 * c * y + e], axis=1)


@dataclass(frozen=True)
class ConicSpec:
    """a x1^2 + b x1 x2 + c x2^2 + d x1 + e x2 + g = 0, sampled n times with
    isotropic Gaussian jitter of standard deviation ``sigma``."""

    coefficients: tuple
    n: int
    sigma: float = 0.0

    def __post_init__(self):
        coeffs = tuple(float(v) for v in self.coefficients)
        if len(coeffs) != 6 or not any(coeffs):
            raise ValueError("conic needs six coefficients, not all zero")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def circle(cls, centre, radius, n, sigma=0.0):
        cx, cy = centre
        return cls((1.0, 0.0, 1.0, -2 * cx, -2 * cy, cx * cx + cy * cy - radius * radius),
                   n, sigma)

    @classmethod
    def ellipse(cls, centre, axes, n, sigma=0.0, angle=0.0):
        """Ellipse with semi-axes ``axes`` rotated by ``angle`` radians."""
        cx, cy = centre
        p, q = axes
        cs, sn = np.cos(angle), np.sin(angle)
        a = cs * cs / p**2 + sn * sn / q**2
        b = 2 * cs * sn * (1 / p**2 - 1 / q**2)
        c = sn * sn / p**2 + cs * cs / q**2
        d = -2 * a * cx - b * cy
        e = -b * cx - 2 * c * cy
        g = a * cx * cx + b * cx * cy + c * cy * cy - 1
        return cls((a, b, c, d, e, g), n, sigma)

    @property
    def monomial_coefficients(self):
        return conic_to_monomial(self.coefficients)

    @property
    def is_ellipse(self):
        a, b, c = self.coefficients[:3]
        return b * b - 4 * a * c < 0

    def to_dict(self):
        return {"coefficients": list(self.coefficients), "n": self.n, "sigma": self.sigma}


def _ellipse_frame(coeffs):
    a, b, c, d, e, g = coeffs
    quad = np.array([[a, b / 2], [b / 2, c]])
    centre = np.linalg.solve(quad, [-d / 2, -e / 2])
    k = -(g + 0.5 * (d * centre[0] + e * centre[1]))
    vals, vecs = np.linalg.eigh(quad / k) if k != 0 else (np.array([-1.0, -1.0]), None)
    if k == 0 or np.any(vals <= 0):
        return None
    return centre, vecs, 1 / np.sqrt(vals)


def _in_box(points, box):
    lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    return np.all((points >= lo) & (points <= hi), axis=1)


def sample_conic(spec, rng, box=DEFAULT_BOX, max_rounds=200):
    """Noise-free points on the conic's locus inside ``box``."""
    frame = _ellipse_frame(spec.coefficients) if spec.is_ellipse else None
    out = np.empty((0, 2))
    for _ in range(max_rounds):
        need = spec.n - len(out)
        if need <= 0:
            break
        if frame is not None:
            centre, axes_vecs, radii = frame
            t = rng.uniform(0.0, 2 * np.pi, 4 * need)
            local = np.stack([radii[0] * np.cos(t), radii[1] * np.sin(t)], axis=1)
            cand = centre + local @ axes_vecs.T
        else:
            cand = _project_to_conic(spec.coefficients,
                                     rng.uniform(box[0], box[1], (8 * need, 2)))
        cand = cand[_in_box(cand, box)]
        out = np.vstack([out, cand[:need]])
    if len(out) < spec.n:
        raise ValueError(f"conic locus {spec.coefficients} does not meet the sampling box")
    return out


def _project_to_conic(coeffs, points, steps=30):
    x = np.array(points, float)
    for _ in range(steps):
        f = conic_value(coeffs, x)
        grad = conic_gradient(coeffs, x)
        norm2 = np.einsum("ij,ij->i", grad, grad)
        ok = norm2 > 1e-12
        x[ok] -= (f[ok] / norm2[ok])[:, None] * grad[ok]
    resid = np.abs(conic_value(coeffs, x))
    return x[np.isfinite(resid) & (resid < 1e-10)]


@dataclass
class GroundTruth:
    """Generator-side record of which point came from which structure.

    Kept apart from the bare point array handed to the search."""

    specs: list
    membership: np.ndarray
    kind: str = "conics"
    extra: dict = field(default_factory=dict)

    def members_of(self, k):
        return np.flatnonzero(self.membership == k)

    @property
    def noise_members(self):
        return np.flatnonzero(self.membership < 0)

    def to_dict(self):
        return {"kind": self.kind, "specs": [s.to_dict() for s in self.specs],
                "membership": self.membership.tolist(), **self.extra}


def generate_conics(specs, box=DEFAULT_BOX, noise_count=0, seed=0):
    """Jittered conic samples followed by ``noise_count`` uniform box points.

    Returns ``(points, truth)``; ``truth.membership[i]`` is the spec index of
    point i, or -1 for background points.
    """
    if not specs and noise_count <= 0:
        raise ValueError("nothing to generate")
    chunks, labels = [], []
    for k, spec in enumerate(specs):
        rng = stream(seed, "conic", k)
        pts = sample_conic(spec, rng, box)
        if spec.sigma > 0:
            pts = pts + rng.normal(0.0, spec.sigma, pts.shape)
        chunks.append(pts)
        labels.append(np.full(len(pts), k))
    if noise_count > 0:
        chunks.append(uniform_box(*box).sample(noise_count, stream(seed, "background")))
        labels.append(np.full(noise_count, -1))
    return np.vstack(chunks), GroundTruth(list(specs), np.concatenate(labels))


@dataclass(frozen=True)
class PendulumSpec:
    """Unit-stiffness oscillator: x = c + A sin(t), v = A cos(t) / sqrt(m)."""

    centre: float
    amplitude: float
    mass: float
    n: int = 100

    def __post_init__(self):
        if self.amplitude <= 0 or self.mass <= 0:
            raise ValueError("amplitude and mass must be positive")

    @property
    def omega(self):
        return self.mass ** -0.5

    @property
    def monomial_coefficients(self):
        # (x - c)^2 + m v^2 - A^2 on (1, x, v, x^2, xv, v^2)
        c, a, m = self.centre, self.amplitude, self.mass
        return np.array([c * c - a * a, -2 * c, 0.0, 1.0, 0.0, m])

    def to_dict(self):
        return {"centre": self.centre, "amplitude": self.amplitude,
                "mass": self.mass, "n": self.n}


TABLE1_PENDULUMS = (
    PendulumSpec(0.1015, 0.6945, 3.6181),
    PendulumSpec(0.1703, 0.4131, 6.1357),
    PendulumSpec(-0.3155, 0.5519, 9.1091),
)


def pendulum_points(spec, rng):
    theta = rng.uniform(0.0, 2 * np.pi, spec.n)
    x = spec.centre + spec.amplitude * np.sin(theta)
    v = spec.amplitude * spec.omega * np.cos(theta)
    return np.stack([x, v], axis=1)


def generate_pendulums(specs, noise=None, noise_count=0, seed=0):
    """Phase-space samples (position, velocity) of each pendulum plus background."""
    if noise is None:
        noise = uniform_box(*DEFAULT_BOX)
    chunks, labels = [], []
    for k, spec in enumerate(specs):
        chunks.append(pendulum_points(spec, stream(seed, "pendulum", k)))
        labels.append(np.full(spec.n, k))
    if noise_count > 0:
        chunks.append(noise.sample(noise_count, stream(seed, "background")))
        labels.append(np.full(noise_count, -1))
    return np.vstack(chunks), GroundTruth(list(specs), np.concatenate(labels), "pendulums")


class NotAPendulumError(ValueError):
    pass


def pendulum_from_coefficients(coords, cross_tol=CROSS_TERM_TOL):
    """Read (centre, amplitude, mass) off monomial coefficients of an
    axis-aligned phase-space ellipse  a (x - c)^2 + b v^2 = r^2."""
    g, d, e, a, cross, b = np.asarray(coords, float)
    if a < 0:
        g, d, e, a, cross, b = -g, -d, -e, -a, -cross, -b
    if a <= 0 or b <= 0:
        raise NotAPendulumError("quadratic part is not definite")
    if abs(cross) > cross_tol * max(a, b):
        raise NotAPendulumError(f"cross term {cross:.3g} too large for an axis-aligned ellipse")
    centre = -d / (2 * a)
    v0 = -e / (2 * b)
    r2 = a * centre * centre + b * v0 * v0 - g
    if r2 <= 0:
        raise NotAPendulumError("ellipse has an empty real locus")
    return {"centre": float(centre), "amplitude": float(np.sqrt(r2 / a)),
            "mass": float(b / a)}


def pendulum_from_label(label, fmap, cross_tol=CROSS_TERM_TOL):
    from .labelcore import base_coefficients
    return pendulum_from_coefficients(base_coefficients(label, fmap), cross_tol)


def match_label_to_truth(coords, truth_coords):
    """|cosine| between two coefficient vectors on the same monomial basis."""
    u = np.asarray(coords, float)
    v = np.asarray(truth_coords, float)
    return float(abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)))
