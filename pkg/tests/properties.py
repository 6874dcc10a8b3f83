"""Randomized property checks shared by the hypothesis suites and the acceptance gate.

Each ``check_*`` takes an integer case seed, builds its own random instance and
raises AssertionError on a violation. Implication-style checks return whether
their premise held, so callers can make sure the suites are not vacuous.
"""

import numpy as np

from labelling.data import PendulumSpec, pendulum_from_label, pendulum_points
from labelling.feature import estimate_covariance, monomial_map, second_moment, whiten
from labelling.labelcore import PotentialLabel, candidate_from_rows, check_rows, is_label
from labelling.noise import PushforwardSampler, gaussian, uniform_box

BOX = uniform_box((-1, -1), (1, 1))
_CACHE = {}


def shared():
    """Whitened conic map and a shared Monte Carlo stream, built once."""
    if "w" not in _CACHE:
        base = monomial_map(2, 2)
        w = whiten(base, estimate_covariance(base, BOX, seed=123))
        _CACHE["w"] = w
        _CACHE["sampler"] = PushforwardSampler(w, BOX, 4000, seed=7)
    return _CACHE["w"], _CACHE["sampler"]


def _rng(case):
    return np.random.default_rng([case, 90210])


def _near_conic(rng, fmap, n, spread):
    """Random unit functional plus points whose values lie within ``spread`` of 0."""
    ell = rng.normal(size=fmap.output_dim)
    f = PotentialLabel.from_vector(ell)
    pts = rng.uniform(-1, 1, (4000, 2))
    vals = f(fmap.evaluate(pts))
    near = pts[np.abs(vals - rng.uniform(-spread, spread)) <= spread]
    if len(near) < n:
        near = pts[np.argsort(np.abs(vals))[:n]]
    return f, near[rng.permutation(len(near))[:n]]


def _mass_hull0(f, rows, sampler):
    v = f(rows)
    lo, hi = min(0.0, v.min()), max(0.0, v.max())
    s = sampler.values(f)
    return np.count_nonzero((s >= lo) & (s <= hi)) / sampler.samples


def check_union(case):
    """Labels of two sets at delta1, delta2 label the union at delta1 + delta2."""
    rng = _rng(case)
    fmap, sampler = shared()
    f, pts = _near_conic(rng, fmap, 24, rng.uniform(0.01, 0.2))
    split = rng.integers(1, len(pts))
    c1, c2 = pts[:split], pts[split:]
    r1, r2 = fmap.evaluate(c1), fmap.evaluate(c2)
    d1 = min(_mass_hull0(f, r1, sampler) + rng.uniform(1e-3, 0.05), 0.49)
    d2 = min(_mass_hull0(f, r2, sampler) + rng.uniform(1e-3, 0.05), 0.49)
    if is_label(f, fmap, c1, sampler, d1) and is_label(f, fmap, c2, sampler, d2):
        assert is_label(f, fmap, pts, sampler, d1 + d2)
        assert check_rows(f, fmap.evaluate(pts), sampler, d1 + d2).accepted
        return True
    return False


def check_shift(case):
    """An accepted shifted label re-checks with (essentially) no further shift."""
    rng = _rng(case)
    fmap, sampler = shared()
    f, pts = _near_conic(rng, fmap, 20, rng.uniform(0.01, 0.1))
    f = f.shifted(rng.uniform(-1, 1))
    rows = fmap.evaluate(pts)
    res = check_rows(f, rows, sampler, 0.999)
    if res.accepted:
        again = check_rows(res.label, rows, sampler, 0.999)
        assert again.accepted
        assert 0.0 in again.interval
        assert abs(again.shifted_by) <= 1e-12 * max(1.0, abs(res.shifted_by))
        # translation leaves the mass unchanged on a shared stream
        assert abs(again.mass.value - res.mass.value) <= 2.0 / sampler.samples
        return res.shifted_by != 0
    return False


def check_scale_sign(case):
    """f, -f and any rescaling agree on acceptance and mass."""
    rng = _rng(case)
    fmap, sampler = shared()
    f, pts = _near_conic(rng, fmap, 20, rng.uniform(0.005, 0.3))
    rows = fmap.evaluate(pts)
    delta = rng.uniform(0.01, 0.5)
    a = check_rows(f, rows, sampler, delta)
    b = check_rows(-f, rows, sampler, delta)
    assert a.accepted == b.accepted
    assert a.mass.value == b.mass.value
    lam = rng.choice([-1, 1]) * 10 ** rng.uniform(-3, 3)
    g = PotentialLabel.from_vector(lam * f.ell, lam * f.offset)
    assert np.allclose(abs(g.ell @ f.ell), 1.0, atol=1e-12)
    c = check_rows(g, rows, sampler, delta)
    assert abs(c.mass.value - a.mass.value) <= 2.0 / sampler.samples


def check_delta_monotone(case):
    rng = _rng(case)
    fmap, sampler = shared()
    f, pts = _near_conic(rng, fmap, 20, rng.uniform(0.005, 0.3))
    rows = fmap.evaluate(pts)
    d1 = rng.uniform(0.001, 0.6)
    d2 = rng.uniform(d1, 0.999)
    if check_rows(f, rows, sampler, d1).accepted:
        assert check_rows(f, rows, sampler, d2).accepted
        return True
    return False


def check_subset_monotone(case):
    rng = _rng(case)
    fmap, sampler = shared()
    f, pts = _near_conic(rng, fmap, 30, rng.uniform(0.005, 0.3))
    rows = fmap.evaluate(pts)
    delta = rng.uniform(0.01, 0.5)
    if check_rows(f, rows, sampler, delta).accepted:
        keep = rng.random(len(rows)) < 0.5
        keep[rng.integers(len(rows))] = True
        assert check_rows(f, rows[keep], sampler, delta).accepted
        return True
    return False


def check_candidate_optimal(case):
    """The candidate minimises ||R u|| over unit u (1000 random competitors)."""
    rng = _rng(case)
    fmap, _ = shared()
    n = rng.integers(fmap.output_dim, 60)
    pts = rng.uniform(-1, 1, (n, 2))
    if rng.random() < 0.5:
        f, pts = _near_conic(rng, fmap, n, 0.05)
    rows = fmap.evaluate(pts)
    ell = candidate_from_rows(rows).ell
    u = rng.normal(size=(1000, fmap.output_dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    best = np.linalg.norm(rows @ ell)
    others = np.linalg.norm(rows @ u.T, axis=0)
    assert best <= others.min() + 1e-12 * np.linalg.norm(rows)


def check_whitening(case):
    """Whitened features are isotropic: exactly on the fitting draws, approximately on fresh ones."""
    rng = _rng(case)
    if rng.random() < 0.5:
        lo = rng.uniform(-2, 0, 2)
        noise = uniform_box(lo, lo + rng.uniform(0.5, 3, 2))
    else:
        a = rng.normal(size=(2, 2))
        noise = gaussian(rng.normal(scale=0.5, size=2), a @ a.T + 0.3 * np.eye(2))
    base = monomial_map(2, 2)
    seed = int(rng.integers(1 << 30))
    cov = estimate_covariance(base, noise, samples=20000, seed=seed)
    w = whiten(base, cov)
    from labelling._random import stream
    same = noise.sample(20000, stream(seed, "covariance"))
    lam = second_moment(w.evaluate(same))
    assert np.linalg.norm(lam - np.eye(6), 2) <= 1e-6
    fresh = second_moment(w.evaluate(noise.sample(20000, seed + 1)))
    # heavy quartic tails under wide Gaussians make this the loosest bound
    assert np.linalg.norm(fresh - np.eye(6), 2) <= 0.5


def check_pendulum_roundtrip(case):
    """Noiseless phase-space ellipse -> candidate label -> (centre, amplitude, mass)."""
    rng = _rng(case)
    spec = PendulumSpec(rng.uniform(-0.5, 0.5), rng.uniform(0.2, 1.0), rng.uniform(1.0, 10.0), 40)
    pts = pendulum_points(spec, rng)
    fmap = monomial_map(2, 2) if case % 2 else shared()[0]
    label = candidate_from_rows(fmap.evaluate(pts))
    est = pendulum_from_label(label, fmap)
    for key, want in (("centre", spec.centre), ("amplitude", spec.amplitude), ("mass", spec.mass)):
        assert abs(est[key] - want) <= 1e-6 * max(1.0, abs(want)), (key, est[key], want)


PROPERTIES = {
    "union": check_union,
    "shift": check_shift,
    "scale_sign": check_scale_sign,
    "delta_monotone": check_delta_monotone,
    "subset_monotone": check_subset_monotone,
    "candidate_optimal": check_candidate_optimal,
    "whitening_isotropy": check_whitening,
    "pendulum_roundtrip": check_pendulum_roundtrip,
}
