from typing import List, Sequence, Tuple


class WitnessError(Exception):
    exit_code = 1


class ArgumentError(WitnessError, ValueError):
    exit_code = 2


class RangeError(ArgumentError):
    pass


class GeometryError(ArgumentError):
    pass


class CoverageError(ArgumentError):
    pass


class ManifestError(ArgumentError):
    pass


class ExcludedPixelError(ArgumentError):
    def __init__(self, message: str, pixels: Sequence[Tuple[int, int]]):
        super().__init__(message)
        self.pixels: List[Tuple[int, int]] = list(pixels)


class NumericalError(WitnessError, RuntimeError):
    exit_code = 3


class AccuracyError(NumericalError):
    pass


class DegenerateEnvelopeError(NumericalError):
    pass


class HermiticityError(NumericalError):
    pass


class CapacityError(WitnessError, MemoryError):
    exit_code = 4


def exit_code(error: BaseException) -> int:
    if isinstance(error, WitnessError):
        return error.exit_code
    return 1
