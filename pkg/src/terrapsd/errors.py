"""Exception types raised by the roughness pipeline.

Every error carries a short ``code`` used as the reason code in run logs.
"""


class TerrainError(ValueError):
    code = "error"


class InsufficientDataError(TerrainError):
    code = "insufficient-data"


class DegeneratePatchError(TerrainError):
    code = "degenerate-patch"


class UnfittableSpectrumError(TerrainError):
    code = "unfittable-spectrum"


class ContractViolationError(TerrainError):
    code = "contract-violation"


class InvalidArgumentError(TerrainError):
    code = "invalid-argument"
