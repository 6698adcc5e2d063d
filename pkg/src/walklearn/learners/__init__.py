from walklearn.learners.boosting import BoostConfig, BoostResult, MarginWeight, boost
from walklearn.learners.hypothesis import Hypothesis, constant_hypothesis, weak_hypothesis
from walklearn.learners.parity import ParityResult, low_noise_parity_learner, single_flip_probability
from walklearn.learners.pipelines import LearnResult, class_params, default_degree, default_theta, learn_top_crw, learn_ubox_ns
from walklearn.learners.search import (
    CRWSample, SearchResult, SieveConfig, bounded_sieve_ns, empirical_spectrum, km_search_crw, km_search_from_sample)

__all__ = [
    "BoostConfig", "BoostResult", "CRWSample", "Hypothesis", "LearnResult", "MarginWeight", "ParityResult",
    "SearchResult", "SieveConfig", "boost", "bounded_sieve_ns", "class_params", "constant_hypothesis", "default_degree",
    "default_theta", "empirical_spectrum", "km_search_crw", "km_search_from_sample", "learn_top_crw",
    "learn_ubox_ns", "low_noise_parity_learner", "single_flip_probability", "weak_hypothesis",
]
