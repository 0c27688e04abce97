"""Decayed MCMC filtering for partially observable Markov processes."""

from .decay import DecaySchedule, exponential, inverse_polynomial, parse_decay, quadratic, uniform, window
from .diagnostics import MixingReport, estimate_mixing_time, mixing_parameter, tv_distance
from .dmcmc import ChainConfig, ChainState, chain_from_evidence, estimate, gibbs_conditional, mcmc_step, new_chain, observe, run
from .exact import ImpossibleEvidenceError, brute_force_posterior, forward_filter, smooth
from .models import DiscreteHMM, canonical_model, load_model, make_random_hmm, save_model, simulate, validate
from .pfilter import ParticleCollapseError, pf_estimate, pf_filter, pf_init, pf_step
from .skf import (
    SKFChain,
    SKFConfig,
    SwitchingKF,
    skf_chain_from_evidence,
    skf_estimate,
    skf_mcmc_step,
    skf_observe,
    skf_run,
    skf_simulate,
)

__version__ = "0.1.0"
