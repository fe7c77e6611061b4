"""Wright-Fisher genealogies with a strong seed bank.

Monte Carlo samplers and exact urn-chain computations for a population
whose individuals pick their parent either one generation back or
``floor(N**beta)`` generations back.
"""
from .errors import DimensionError, DomainError, ResourceError, SingularSystemError
from .genealogy import (
    MergerEvent,
    PartitionTrace,
    RenewalLine,
    SampleSet,
    kingman_simulate,
    run_replicates,
    scale_time,
    simulate_ancestral_process,
    simulate_tmrca2_fast,
)
from .model import InitialDistribution, SeedBankParams, parse_gamma, sample_increment, validate
from .oracle import brute_force_tmrca2, exact_expected_tmrca2
from .stats import FitReport, Histogram, histogram, ks_exponential, summarize
from .urn import evolve_exact, geometric_time_tv, stationary, total_variation, tv_decay_curve

__version__ = "0.1.0"
