import math
from typing import Any

import torch

try:
    from typing_extensions import Final  # noqa
except ImportError:
    from torch.jit import Final  # noqa

PLANCK: Final[float] = 6.62607015e-34
HBAR: Final[float] = PLANCK / (2 * math.pi)
BOLTZMANN: Final[float] = 1.380649e-23
ATOMIC_MASS: Final[float] = 1.66053906660e-27
RB87_MASS: Final[float] = 86.909180527 * ATOMIC_MASS

# Resonant cross section for circularly polarized light on the Rb-87 D2 line.
RB87_CROSS_SECTION: Final[float] = 2.907e-13

DEFAULT_WAVELENGTH: Final[float] = 830.3e-9
DEFAULT_TAU: Final[float] = 1.8e3
DEFAULT_TOF_TIME: Final[float] = 21e-3

# Absolute tolerance, in particles, below which a witness value counts as
# nonnegative.
WITNESS_TOL: Final[float] = 1e-9


def as_double(x: Any, device=None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(dtype=torch.double, device=device)
    return torch.as_tensor(x, dtype=torch.double, device=device)


def as_complex(x: Any, device=None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        if x.is_complex():
            return x.to(dtype=torch.cdouble, device=device)
        return x.to(dtype=torch.double, device=device).to(torch.cdouble)
    return torch.as_tensor(x, dtype=torch.cdouble, device=device)


def pairwise_sum(x: torch.Tensor) -> torch.Tensor:
    """Sums the leading dimension of :obj:`x` by pairwise (tree) reduction,
    so that the result does not depend on how frames were batched."""
    if x.size(0) == 0:
        return x.new_zeros(x.size()[1:])
    while x.size(0) > 1:
        if x.size(0) % 2 == 1:
            x = torch.cat([x, torch.zeros_like(x[:1])], dim=0)
        x = x[0::2] + x[1::2]
    return x[0]
