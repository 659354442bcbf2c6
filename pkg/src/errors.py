# ============================================================================
# FILE: errors.py
# ============================================================================

from typing import Optional


class ModError(Exception):
    """Base error; exit_code is what the CLI returns for it"""

    exit_code: int = 1


# ============================================================================
# INPUT ERRORS (exit 2)
# ============================================================================


class InputError(ModError):
    exit_code = 2


class LayoutError(InputError):
    """Grid/frame divisibility violated"""


class DimensionError(InputError):
    """Array shapes disagree with the layout or with each other"""


class PatternIndexError(InputError):
    """Pattern index outside its family's range"""


class DesignMatrixTooLarge(InputError):
    def __init__(self, required: int, cap: int):
        super().__init__(
            f"design matrix needs {required} bytes, cap is {cap} bytes "
            f"(raise MOD_MAX_DESIGN_BYTES to allow it)"
        )
        self.required = required
        self.cap = cap


class MatrixFormatError(InputError):
    def __init__(self, path: str, line: Optional[int], reason: str):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {reason}")
        self.path = path
        self.line = line


class ConfigError(InputError):
    """Malformed simulate config"""


# ============================================================================
# NUMERICAL ERRORS (exit 3)
# ============================================================================


class NumericalError(ModError):
    exit_code = 3


class SolverError(NumericalError):
    """Every solve path failed"""


class UndefinedMetricError(NumericalError):
    """Ratio metric with a zero-norm denominator"""


class AttentionError(NumericalError):
    """Softmax over a row with no passing entries"""


# ============================================================================
# SIMULATION
# ============================================================================


class SimulationError(ModError):
    """Failure inside the denoising loop, tagged with head and step"""

    def __init__(self, head: int, step: int, cause: Exception):
        super().__init__(f"head {head}, step {step}: {cause}")
        self.head = head
        self.step = step
        self.exit_code = getattr(cause, "exit_code", 1)
