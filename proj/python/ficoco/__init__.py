"""Filter-correlate-compress token reduction.

    reduced, trace, summary = ficoco.run(synth={}, config={"keep_budget": 64})

Arrays must be float32; anything else raises DtypeError rather than being cast.
"""

from ._ficoco import (
    AbsentClsError,
    ConfigError,
    CountOverflowError,
    DtypeError,
    FicocoError,
    FormatError,
    IoError,
    ShapeError,
    StageError,
    __version__,
    pipeline_cost,
    plan_schedule,
    run,
)

__all__ = [
    "AbsentClsError",
    "ConfigError",
    "CountOverflowError",
    "DtypeError",
    "FicocoError",
    "FormatError",
    "IoError",
    "ShapeError",
    "StageError",
    "__version__",
    "pipeline_cost",
    "plan_schedule",
    "run",
]
