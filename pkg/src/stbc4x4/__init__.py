"""Rate-1 full-diversity 4x4 space-time block code with nonvanishing
determinants: encoding, conditional ML decoding, coding-gain certification,
PAPR and codeword-error-rate simulation."""

from .analysis import (det_closed_form, det_difference, min_det_sample,
                       min_det_search, papr, phi_sweep, verify_nvd_appendix)
from .channel import (ChannelRealization, EquivalentChannel,
                      equivalent_channel, sample_rayleigh, transmit)
from .code import (DEFAULT_PHI, Constellation, LinearDispersionCode,
                   assemble_codeword, hurwitz_radon_check, make_proposed_code,
                   qam_constellation, read_code, write_code)
from .detection import (DecodeResult, conditional_ml_decode,
                        exhaustive_ml_decode, pam_slice)
from .simulation import SimConfig, run_cer, snr_to_n0

__version__ = "0.1.0"
