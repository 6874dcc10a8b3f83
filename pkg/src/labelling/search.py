"""Randomized seeding plus greedy absorption over a point cloud."""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from ._random import stream
from .labelcore import LabelCheck, PotentialLabel, fit_rows
from .noise import DEFAULT_MC_SAMPLES, Interval, MassEstimate, PushforwardSampler

ABSORB_ORDERS = ("index", "random")
SEEDINGS = ("uniform", "local", "consensus")
# background draws used to calibrate the support band when scoring proposals
CALIBRATION_DRAWS = 4096


@dataclass(frozen=True)
class SearchConfig:
    n0: int
    iterations: int = 500
    delta: float = 0.05
    seed: int = 0
    absorb_order: str = "random"
    mc_samples: int = DEFAULT_MC_SAMPLES
    seeding: str = "uniform"
    pool_quantile: float = 1.0
    density_k: int = 8
    neighbourhood: int = 0
    proposals: int = 1

    def validate(self, n_points, dim):
        if not dim <= self.n0 <= n_points:
            raise ValueError(f"n0 must satisfy D={dim} <= n0 <= |A|={n_points}, got {self.n0}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.absorb_order not in ABSORB_ORDERS:
            raise ValueError(f"absorb_order must be one of {ABSORB_ORDERS}")
        if self.seeding not in SEEDINGS:
            raise ValueError(f"seeding must be one of {SEEDINGS}")
        if not 0 < self.pool_quantile <= 1:
            raise ValueError("pool_quantile must lie in (0, 1]")
        if self.neighbourhood and self.neighbourhood < dim - 2:
            raise ValueError(f"neighbourhood must be 0 or at least D-2={dim - 2}")
        if self.proposals < 1:
            raise ValueError("proposals must be >= 1")
        if self.proposals > 1 and self.seeding != "consensus":
            raise ValueError("proposals > 1 needs consensus seeding")

    def to_dict(self):
        return dict(self.__dict__)


def default_n0(dim):
    return 3 * dim


@dataclass(frozen=True, eq=False)
class LabelRecord:
    members: tuple
    label: PotentialLabel
    check: LabelCheck

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(set(int(m) for m in self.members))))

    def to_dict(self):
        return {"members": list(self.members), "label": self.label.to_dict(),
                "check": self.check.to_dict()}

    @classmethod
    def from_dict(cls, data):
        c = data["check"]
        label = PotentialLabel.from_dict(data["label"])
        check = LabelCheck(c["accepted"], Interval(*c["interval"]),
                           MassEstimate(c["mass"], c["samples"]), c["shifted_by"], label)
        return cls(tuple(data["members"]), label, check)


@dataclass(frozen=True, eq=False)
class LabelAtlas:
    records: list
    dataset_fingerprint: str
    config: SearchConfig | None = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def member_sets(self):
        return [set(r.members) for r in self.records]

    def to_dict(self):
        return {"dataset_fingerprint": self.dataset_fingerprint,
                "config": None if self.config is None else self.config.to_dict(),
                "records": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, data):
        cfg = data.get("config")
        return cls([LabelRecord.from_dict(r) for r in data["records"]],
                   data["dataset_fingerprint"],
                   None if cfg is None else SearchConfig(**cfg))


def fingerprint(points):
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    h = hashlib.sha256(str(pts.shape).encode())
    h.update(pts.tobytes())
    return h.hexdigest()


def seed_pool(points, quantile=1.0, k=8):
    """Indices eligible as seed members.

    With ``quantile < 1`` only the densest points are kept, density being
    measured by the distance to the k-th nearest neighbour. Points on a
    low-dimensional structure are denser than background noise, so the pool
    is enriched in structured points; absorption still visits every point.
    """
    n = len(points)
    if quantile >= 1:
        return np.arange(n)
    kk = min(k, n - 1)
    dist, _ = cKDTree(points).query(points, kk + 1)
    kth = dist[:, kk]
    return np.flatnonzero(kth <= np.quantile(kth, quantile))


def _minimal_sample(rng, points, pool, dim, neighbourhood):
    if neighbourhood:
        anchor = rng.choice(pool)
        dist = np.linalg.norm(points[pool] - points[anchor], axis=1)
        near = pool[np.argsort(dist, kind="stable")[1:neighbourhood + 1]]
        return np.concatenate([[anchor], rng.choice(near, size=dim - 2, replace=False)])
    return rng.choice(pool, size=dim - 1, replace=False)


def support(residual, ell, calibration, delta):
    """Points inside the band |f| <= w, where w is set so the background puts
    mass ``delta`` in the band (estimated on ``calibration`` feature rows)."""
    k = min(int(delta * len(calibration)), len(calibration) - 1)
    width = np.partition(np.abs(calibration @ ell), k)[k]
    return int(np.count_nonzero(residual <= width))


def draw_seed(rng, rows, points, pool, n0, seeding="uniform", neighbourhood=0,
              proposals=1, calibration=None, delta=0.05):
    """Indices of the initial subset of size ``n0``.

    ``uniform``: n0 distinct pool indices drawn uniformly.
    ``local``: a uniform pool anchor with its n0 - 1 nearest pool neighbours.
    ``consensus``: D - 1 pool points determine the functional that vanishes
    on them; the seed is the n0 points (from the whole cloud) on which that
    functional is smallest in absolute value. The D - 1 points are uniform
    over the pool, or with ``neighbourhood = k > 0`` a uniform anchor plus
    D - 2 points drawn from its k nearest pool neighbours. With
    ``proposals > 1`` several functionals are drawn and the one with the
    largest :func:`support` at ``delta`` is kept.
    """
    if seeding == "uniform":
        return rng.choice(pool, size=n0, replace=False)
    if seeding == "local":
        anchor = rng.choice(pool)
        dist = np.linalg.norm(points[pool] - points[anchor], axis=1)
        return pool[np.argsort(dist, kind="stable")[:n0]]
    dim = rows.shape[1]
    best, best_support = None, -1
    for _ in range(proposals):
        minimal = _minimal_sample(rng, points, pool, dim, neighbourhood)
        ell = np.linalg.svd(rows[minimal], full_matrices=True)[2][-1]
        residual = np.abs(rows @ ell)
        if proposals == 1:
            best = residual
            break
        score = support(residual, ell, calibration, delta)
        if score > best_support:
            best, best_support = residual, score
    return np.argsort(best, kind="stable")[:n0]


def run_iteration(rows, sampler, config, index, has_constants=True, points=None, pool=None):
    """One seeding + absorption pass. Returns ``(members, check)`` or ``None``."""
    rng = stream(config.seed, "search", index)
    n = len(rows)
    if pool is None:
        pool = np.arange(n)
    calibration = sampler.features[:CALIBRATION_DRAWS] if config.proposals > 1 else None
    chosen = draw_seed(rng, rows, points, pool, config.n0, config.seeding,
                       config.neighbourhood, config.proposals, calibration, config.delta)
    check = fit_rows(rows[chosen], sampler, config.delta, has_constants, early_exit=True)
    if not check.accepted:
        return None
    in_set = np.zeros(n, dtype=bool)
    in_set[chosen] = True
    rest = np.flatnonzero(~in_set)
    if config.absorb_order == "random":
        rest = rng.permutation(rest)
    members = [int(i) for i in chosen]
    for p in rest:
        trial = fit_rows(rows[members + [p]], sampler, config.delta, has_constants,
                         early_exit=True)
        if trial.accepted:
            members.append(int(p))
            check = trial
    return tuple(sorted(members)), check


def _run_chunk(args):
    pts, rows, pool, fmap, noise, mc_seed, config, indices = args
    sampler = PushforwardSampler(fmap, noise, config.mc_samples, mc_seed)
    return [run_iteration(rows, sampler, config, i, fmap.has_constants, pts, pool)
            for i in indices]


def label_search(points, fmap, noise, config, mc_seed=None, sampler=None, workers=1):
    """Estimate the labelled subsets of ``points``.

    Each iteration draws a seed subset of size ``n0``; if the fitted candidate
    label accepts it, the remaining points are visited in
    ``config.absorb_order`` and each is kept when the refitted label on the
    enlarged set is still accepted. Member sets already present in the atlas
    are not inserted twice.

    The result depends only on ``(points, fmap, noise, config)``: iteration
    ``i`` draws from its own stream and records are merged in index order.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rows = fmap.evaluate(pts)
    config.validate(len(pts), fmap.output_dim)
    if mc_seed is None:
        mc_seed = config.seed
    indices = list(range(config.iterations))
    pool = seed_pool(pts, config.pool_quantile, config.density_k)
    need = config.n0
    if config.seeding == "consensus":
        need = max(fmap.output_dim - 1, config.neighbourhood + 1)
    if len(pool) < need:
        raise ValueError(f"seed pool has {len(pool)} points, need {need}")
    if workers > 1 and sampler is None:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_run_chunk, [(pts, rows, pool, fmap, noise, mc_seed, config, c)
                                               for c in chunks]))
        results = [None] * len(indices)
        for chunk, part in zip(chunks, parts):
            for i, r in zip(chunk, part):
                results[i] = r
    else:
        if sampler is None:
            sampler = PushforwardSampler(fmap, noise, config.mc_samples, mc_seed)
        results = [run_iteration(rows, sampler, config, i, fmap.has_constants, pts, pool)
                   for i in indices]

    seen = {}
    for res in results:
        if res is None:
            continue
        members, check = res
        if members not in seen:
            seen[members] = LabelRecord(members, check.label, check)
    records = [seen[k] for k in sorted(seen)]
    return LabelAtlas(records, fingerprint(pts), config)


def jaccard(a, b):
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a or b else 1.0


def dedupe_similar(atlas, cosine_tol=0.01, min_jaccard=0.8):
    """Collapse records with nearly parallel labels and overlapping members."""
    if not 0 < cosine_tol < 1:
        raise ValueError("cosine_tol must lie in (0, 1)")
    order = sorted(atlas.records, key=lambda r: (-len(r.members), r.members))
    kept = []
    for rec in order:
        dup = False
        for other in kept:
            cos = abs(float(rec.label.ell @ other.label.ell))
            if cos >= 1 - cosine_tol and jaccard(rec.members, other.members) >= min_jaccard:
                dup = True
                break
        if not dup:
            kept.append(rec)
    kept.sort(key=lambda r: r.members)
    return replace(atlas, records=kept)


def membership(atlas, n_points):
    """Label ids (record indices) carried by each point."""
    out = [[] for _ in range(n_points)]
    for rid, rec in enumerate(atlas.records):
        for m in rec.members:
            out[m].append(rid)
    return out
