"""Support detection with random phase-rotated (RPR) measurements.

Submodules
----------
ensembles
    RPR, Bernoulli and Gaussian measurement matrices, sparse signals,
    measurements and exact mutual coherence.
omp
    Orthogonal matching pursuit run for exactly K iterations, with traces.
bounds
    Closed-form tail, coherence-CDF, detection-probability and
    measurement-count bounds, including the Lambert W_{-1} optimum of g.
montecarlo
    Seeded, schedule-independent Monte Carlo estimators and verifiers.
cli
    ``rprsd`` command line.
"""

from ._backend import BACKEND
from .bounds import (
    BoundInputs,
    bernstein_tail_bound,
    coherence_cdf_bound,
    g_opt,
    lambert_w_m1,
    required_m_gaussian,
    required_m_rip,
    required_m_rpr,
    ssd_prob_bound,
    tail_bound,
)
from .ensembles import (
    Ensemble,
    Measurement,
    MeasurementMatrix,
    SparseSignal,
    coherence,
    generate_matrix,
    generate_signal,
    measure,
)
from .omp import OmpConfig, OmpTrace, greedy_ratio, least_squares, omp_detect

__version__ = "0.1.0"
