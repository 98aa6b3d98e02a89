"""Fast-convolution filtered OFDM: filter banks, weight design, link models."""

from .complexity import ComplexityReport, fc_muls, split_radix_muls, td_filter_muls
from .fcfb import (FcAnalysisBank, FcConfig, FcConfigError, FcSynthesisBank, WeightMask,
                   afb_process, sfb_process)
from .linksim import LinkScenario, Subband, Transmitter, run_link
from .metrics import TmuxModel, evm_avg, evm_max, magnitude_response, sblr
from .ofdm import OfdmNumerology, table_numerology
from .optimizer import (DesignProblem, InfeasibleDesign, WeightDesigner, optimize_weights,
                        read_mask, write_mask)
from .rfmodels import PolyPa, RappPa, apply_ibo

__version__ = "0.1.0"

__all__ = [
    "ComplexityReport", "fc_muls", "split_radix_muls", "td_filter_muls",
    "FcAnalysisBank", "FcConfig", "FcConfigError", "FcSynthesisBank", "WeightMask",
    "afb_process", "sfb_process",
    "LinkScenario", "Subband", "Transmitter", "run_link",
    "TmuxModel", "evm_avg", "evm_max", "magnitude_response", "sblr",
    "OfdmNumerology", "table_numerology",
    "DesignProblem", "InfeasibleDesign", "WeightDesigner", "optimize_weights",
    "read_mask", "write_mask",
    "PolyPa", "RappPa", "apply_ibo",
]
