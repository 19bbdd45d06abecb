"""Robust peak-gain analysis and state-feedback synthesis for discrete-time
descriptor systems with norm-bounded parametric uncertainty."""

from .config import Config, DEFAULTS
from .errors import AlphaPathError, DesconError, PlantFormatError, SingularPencilError
from .model import (AdmissibilityReport, DescriptorPlant, SvdEquivalentForm,
                    UncertainPlant, check_admissibility, check_causal_controllability,
                    check_causality, check_regularity, numerical_rank,
                    spectral_radius, svd_equivalent_form, transfer_value)
from .lmi import (AffineMatrixInequality, VariableLayout, assemble_nominal_brl,
                  assemble_robust_brl, assemble_synthesis, assemble_synthesis_alpha,
                  check_nonconservative_ranks, petersen_absorb)
from .sdp import SdpProblem, SdpSolution, minimize_linear, solve_feasibility, verify_solution
from .synth import SynthesisResult, closed_loop, recover_gain, regularize_S, synthesize, synthesize_optimal
from .verify import (AlphaSweepCurve, RobustnessReport, alpha_sweep, hinf_norm,
                     robust_verify, sample_uncertainty)
from .examples import demo_plant

__version__ = "0.1.0"
