"""Unsupervised multi-label discovery: subsets of a point cloud that sit
unreasonably close to the zero set of a feature-space functional, measured
against a background noise distribution."""

from .data import (ConicSpec, GroundTruth, PendulumSpec, generate_conics, generate_pendulums,
                   match_label_to_truth, pendulum_from_label)
from .feature import FeatureMap, estimate_covariance, evaluate, monomial_map, whiten, \
    whitened_monomial_map
from .labelcore import (LabelCheck, PotentialLabel, base_coefficients, candidate_label,
                        check_label, estimate_label_set, is_label, label_from_coefficients,
                        tight_interval)
from .noise import BackgroundNoise, Interval, PushforwardSampler, gaussian, pushforward_mass, \
    uniform_box
from .rmt import (ConcentrationParams, concentration_probability_exponent, delta_f,
                  recommend_delta, smin_ratio)
from .search import LabelAtlas, LabelRecord, SearchConfig, label_search

__version__ = "0.1.0"
