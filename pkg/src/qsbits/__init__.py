"""Bit-comparison costs of Quicksort and BitsQuick: exact, asymptotic and simulated."""
from .bitkeys import BitKey, compare_with_cost, first_diff_index, sample_uniform_key
from .densities import DensitySpec, entropy_bits
from .errors import (DepthCapExceeded, ExperimentFailed, PoleArgument, QuadratureFailure,
                     ZeroMassInterval)
from .exact_means import exact_bit_mean, exact_bitsquick_mean, exact_key_mean
from .sorters import bitsquick, coupled_run, quicksort, radix_exchange

__version__ = "0.1.0"
