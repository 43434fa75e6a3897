"""SpaceSaving± sketches for bounded-deletion streams.

The counter kernels come from a compiled extension when it is available and
from a pure-Python mirror otherwise; ``sspm.kernels.BACKEND`` says which.
Set ``SSPM_PURE_PYTHON=1`` before import to force the Python kernels.
"""

from .baselines import CountMin, CountSketch, GridSketch
from .deletion import (
    DoubleSpaceSaving,
    IntegratedSpaceSaving,
    LegacySpaceSavingPM,
    dss_relative_size,
    dss_residual_sizes,
    dss_sizes,
    iss_relative_size,
    iss_residual_size,
    iss_size,
)
from .errors import SketchError
from .evaluation import (
    BoundReport,
    check_epsilon_bound,
    check_merge_bound,
    check_relative_bound,
    check_residual_bound,
    check_variance,
    compute_are,
    topk_f1,
)
from .kernels import BACKEND
from .spacesaving import SpaceSaving
from .stream import OpStream, StreamOp, dele, exact_frequencies, ins, validate_stream
from .workloads import WorkloadSpec, gen_adversarial, gen_interleaved, gen_zipf_suffix

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundReport",
    "CountMin",
    "CountSketch",
    "DoubleSpaceSaving",
    "GridSketch",
    "IntegratedSpaceSaving",
    "LegacySpaceSavingPM",
    "OpStream",
    "SketchError",
    "SpaceSaving",
    "StreamOp",
    "WorkloadSpec",
    "check_epsilon_bound",
    "check_merge_bound",
    "check_relative_bound",
    "check_residual_bound",
    "check_variance",
    "compute_are",
    "dele",
    "dss_relative_size",
    "dss_residual_sizes",
    "dss_sizes",
    "exact_frequencies",
    "gen_adversarial",
    "gen_interleaved",
    "gen_zipf_suffix",
    "ins",
    "iss_relative_size",
    "iss_residual_size",
    "iss_size",
    "topk_f1",
    "validate_stream",
]
