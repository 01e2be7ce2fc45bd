import math
from dataclasses import dataclass

from torch_witness.errors import ArgumentError
from torch_witness.utils import (HBAR, PLANCK, RB87_MASS, DEFAULT_WAVELENGTH,
                                 Final)

MAX_DEPTH: Final[float] = 60.0

# Rb-87 s-wave scattering length, used only by the deep-lattice estimates.
RB87_SCATTERING_LENGTH: Final[float] = 5.31e-9


@dataclass(frozen=True)
class LatticeParams:
    """Sinusoidal lattice :math:`V(x) = s E_R \\sin^2(\\pi x / a)` per axis.

    Args:
        depth_s (float): Lattice depth in units of the recoil energy.
        wavelength (float, optional): Lattice laser wavelength in meters.
            (default: :obj:`830.3e-9`)
        mass (float, optional): Particle mass in kilograms.
            (default: Rb-87)
    """
    depth_s: float
    wavelength: float = DEFAULT_WAVELENGTH
    mass: float = RB87_MASS

    def __post_init__(self):
        if not (0.0 <= self.depth_s <= MAX_DEPTH):
            raise ArgumentError(f'depth_s must lie in [0, {MAX_DEPTH:g}] '
                                f'(got {self.depth_s})')
        if not self.wavelength > 0:
            raise ArgumentError(f'wavelength must be positive '
                                f'(got {self.wavelength})')
        if not self.mass > 0:
            raise ArgumentError(f'mass must be positive (got {self.mass})')

    @property
    def spacing_a(self) -> float:
        return self.wavelength / 2

    @property
    def recoil_energy(self) -> float:
        return PLANCK**2 / (2 * self.mass * self.wavelength**2)

    def with_depth(self, depth_s: float) -> 'LatticeParams':
        return LatticeParams(depth_s, self.wavelength, self.mass)

    # Unit conversions ########################################################

    def tau_from_time(self, time: float) -> float:
        """Dimensionless expansion time :math:`2\\pi^2\\hbar t / (m a^2)`."""
        return 2 * math.pi**2 * HBAR * time / (self.mass * self.spacing_a**2)

    def time_from_tau(self, tau: float) -> float:
        return tau * self.mass * self.spacing_a**2 / (2 * math.pi**2 * HBAR)

    def position_from_momentum(self, k, time: float):
        """Far-field position :math:`\\hbar t k / m` of wavevector :obj:`k`
        (SI units in and out)."""
        return HBAR * time * k / self.mass

    def momentum_from_position(self, x, time: float):
        return self.mass * x / (HBAR * time)

    def fourier_argument(self, k):
        """Argument :math:`a k / 2\\pi` at which :math:`\\tilde{w}` is read
        for a wavevector :obj:`k` in 1/m."""
        return self.spacing_a * k / (2 * math.pi)


def hopping_estimate(depth_s: float) -> float:
    """Deep-lattice tunneling :math:`J/E_R \\approx (4/\\sqrt{\\pi})
    s^{3/4} e^{-2\\sqrt{s}}`."""
    return 4 / math.sqrt(math.pi) * depth_s**0.75 * math.exp(
        -2 * math.sqrt(depth_s))


def interaction_estimate(depth_s: float,
                         params: LatticeParams = None) -> float:
    """Deep-lattice on-site interaction :math:`U/E_R \\approx \\sqrt{8/\\pi}
    k_L a_s s^{3/4}` for a cubic lattice."""
    wavelength = DEFAULT_WAVELENGTH if params is None else params.wavelength
    k_l = 2 * math.pi / wavelength
    return math.sqrt(8 / math.pi) * k_l * RB87_SCATTERING_LENGTH * \
        depth_s**0.75


def hubbard_ratio_from_depth(depth_s: float,
                             params: LatticeParams = None) -> float:
    """Estimated :math:`U/J` at lattice depth :obj:`depth_s`."""
    if depth_s <= 0:
        raise ArgumentError('U/J estimate requires a positive depth')
    return interaction_estimate(depth_s, params) / hopping_estimate(depth_s)
