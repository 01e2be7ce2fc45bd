import logging
import math
from dataclasses import dataclass

import torch

from torch_witness.bands import BlochSpectrum
from torch_witness.errors import (AccuracyError, ArgumentError,
                                  DegenerateEnvelopeError, NumericalError,
                                  RangeError)
from torch_witness.io import write_columns
from torch_witness.lattice import LatticeParams

logger = logging.getLogger(__name__)

ENVELOPE_FLOOR = 1e-12


@dataclass(frozen=True)
class WannierTable:
    """Sampled lowest-band Wannier function :math:`w_0` centred at zero and
    its Fourier transform

    .. math::
        \\tilde{w}(\\phi) = \\frac{1}{\\sqrt{2\\pi}} \\int dr\\, w_0(r)
        e^{-2\\pi i \\phi r},

    with lengths in units of :math:`a` and :math:`\\int |w_0|^2 dx = 1`.

    :obj:`modes` and :obj:`mode_weights` hold the gauge-fixed plane-wave
    representation :math:`w_0(x) = \\sum_\\kappa W_\\kappa \\cos(\\kappa x)`,
    which evaluates :math:`w_0` exactly off the stored grid.
    """
    real_grid: torch.Tensor
    w0_samples: torch.Tensor
    fourier_grid: torch.Tensor
    wtilde_samples: torch.Tensor
    modes: torch.Tensor
    mode_weights: torch.Tensor
    depth_s: float

    @property
    def real_step(self) -> float:
        return float(self.real_grid[1] - self.real_grid[0])

    @property
    def fourier_step(self) -> float:
        return float(self.fourier_grid[1] - self.fourier_grid[0])

    @property
    def fourier_extent(self) -> float:
        return float(self.fourier_grid[-1])

    def evaluate(self, x: torch.Tensor, chunk: int = 512) -> torch.Tensor:
        """Evaluates :math:`w_0(x)` exactly from the plane-wave
        representation."""
        x = torch.as_tensor(x, dtype=torch.double,
                            device=self.modes.device)
        flat = x.reshape(-1)
        out = torch.empty_like(flat)
        for start in range(0, flat.numel(), chunk):
            part = flat[start:start + chunk]
            out[start:start + chunk] = torch.cos(
                part.view(-1, 1) * self.modes.view(1, -1)) @ self.mode_weights
        return out.view(x.size())

    def transform(self, phi: torch.Tensor,
                  derivative: bool = False) -> torch.Tensor:
        """Evaluates :math:`\\tilde{w}(\\phi)` (or its derivative) by
        trapezoidal quadrature over the real grid."""
        phi = torch.as_tensor(phi, dtype=torch.double,
                              device=self.real_grid.device)
        flat = phi.reshape(-1, 1)
        r = self.real_grid.view(1, -1)
        kernel = torch.exp(-2j * math.pi * flat * r)
        integrand = self.w0_samples.view(1, -1) * kernel
        if derivative:
            integrand = integrand * (-2j * math.pi * r)
        out = torch.trapezoid(integrand, self.real_grid, dim=-1)
        return (out / math.sqrt(2 * math.pi)).view(phi.size())

    def interpolate(self, phi: torch.Tensor) -> torch.Tensor:
        """Linearly interpolates the stored :math:`\\tilde{w}` samples."""
        phi = torch.as_tensor(phi, dtype=torch.double,
                              device=self.fourier_grid.device)
        extent = self.fourier_extent
        if (phi.abs() > extent * (1 + 1e-12)).any():
            raise RangeError(f'Fourier argument outside the stored grid '
                             f'|a k / 2 pi| <= {extent:g}')
        pos = (phi - self.fourier_grid[0]) / self.fourier_step
        pos = pos.clamp(0, self.fourier_grid.numel() - 1)
        lo = pos.floor().long().clamp(max=self.fourier_grid.numel() - 2)
        frac = (pos - lo).to(self.wtilde_samples.dtype)
        return (1 - frac) * self.wtilde_samples[lo] + \
            frac * self.wtilde_samples[lo + 1]


def gauge_fixed_coefficients(spectrum: BlochSpectrum) -> torch.Tensor:
    """Lowest-band Bloch coefficients with the Bloch function real and
    positive at the site centre :math:`x = 0`."""
    coefficients = spectrum.bloch_coefficients[:, 0, :]
    center = coefficients.sum(dim=-1)
    if (center.abs() < 1e-12).any():
        raise NumericalError('lowest-band Bloch function vanishes at the '
                             'site centre; gauge is undefined')
    return coefficients * torch.sign(center).view(-1, 1)


def compute_wannier(spectrum: BlochSpectrum, real_extent: float = 10.0,
                    resolution: int = 64, fourier_extent: float = 4.0,
                    fourier_resolution: int = 128,
                    tol: float = 1e-6) -> WannierTable:
    """Builds the lowest-band Wannier function in the symmetric gauge.

    Args:
        spectrum (:class:`BlochSpectrum`): Band structure on a symmetric
            quasimomentum grid.
        real_extent (float, optional): Half-width of the real grid in units
            of :math:`a`. (default: :obj:`10.0`)
        resolution (int, optional): Grid points per lattice spacing.
            (default: :obj:`64`)
        fourier_extent (float, optional): Half-width of the stored
            :math:`\\tilde{w}` grid in :math:`a k / 2\\pi`.
            (default: :obj:`4.0`)
        fourier_resolution (int, optional): Samples of :math:`\\tilde{w}`
            per unit of :math:`a k / 2\\pi`. (default: :obj:`128`)
        tol (float, optional): Largest tolerated normalization deficit of
            the truncated grid. (default: :obj:`1e-6`)

    :rtype: :class:`WannierTable`
    """
    if spectrum.num_bands < 1:
        raise ArgumentError('spectrum holds no band')
    if real_extent < 6:
        raise ArgumentError(f'real_extent must be at least 6 lattice '
                            f'spacings (got {real_extent})')
    if resolution < 4 or fourier_resolution < 4:
        raise ArgumentError('grid resolutions must be at least 4')

    n_q = spectrum.quasimomenta.numel()
    coefficients = gauge_fixed_coefficients(spectrum)
    modes = spectrum.quasimomenta.view(-1, 1) + \
        2 * math.pi * spectrum.orders.view(1, -1).to(torch.double)
    modes, weights = modes.reshape(-1), coefficients.reshape(-1) / n_q

    num = int(round(2 * real_extent * resolution)) + 1
    x = torch.linspace(-real_extent, real_extent, num, dtype=torch.double,
                       device=modes.device)

    table = WannierTable(x, x, x, x, modes, weights, spectrum.depth_s)
    w0 = table.evaluate(x)
    w0 = 0.5 * (w0 + w0.flip(0))

    norm = torch.trapezoid(w0 * w0, x)
    deficit = abs(1.0 - float(norm))
    logger.debug('Wannier normalization deficit %.3e at s=%g', deficit,
                 spectrum.depth_s)
    if deficit > tol:
        raise AccuracyError(f'Wannier normalization deficit {deficit:.3e} '
                            f'exceeds {tol:g}; enlarge real_extent or the '
                            f'quasimomentum grid')
    scale = 1.0 / math.sqrt(float(norm))
    w0, weights = w0 * scale, weights * scale

    num = int(round(2 * fourier_extent * fourier_resolution)) + 1
    phi = torch.linspace(-fourier_extent, fourier_extent, num,
                         dtype=torch.double, device=modes.device)
    table = WannierTable(x, w0, phi, phi, modes, weights, spectrum.depth_s)
    wtilde = table.transform(phi)

    return WannierTable(x, w0, phi, wtilde, modes, weights, spectrum.depth_s)


def envelope_lattice(wannier: WannierTable, tau: float, k: torch.Tensor,
                     check_floor: bool = True) -> torch.Tensor:
    """Far-field envelope in lattice units: :math:`(2\\pi^2/\\tau)^2
    |\\tilde{w}(k_x/2\\pi)|^2 |\\tilde{w}(k_y/2\\pi)|^2` per :math:`a^2`, for
    wavevectors :obj:`k` of shape :obj:`[..., 2]` in units of :math:`1/a`.

    Raises :class:`DegenerateEnvelopeError` where either factor drops below
    the floor, unless :obj:`check_floor` is :obj:`False`.
    """
    if not tau > 0:
        raise ArgumentError(f'tau must be positive (got {tau})')
    k = torch.as_tensor(k, dtype=torch.double,
                        device=wannier.fourier_grid.device)
    assert k.size(-1) == 2
    wx = wannier.interpolate(k[..., 0] / (2 * math.pi))
    wy = wannier.interpolate(k[..., 1] / (2 * math.pi))

    floor = ENVELOPE_FLOOR * float(wannier.wtilde_samples.abs().max())
    low = (wx.abs() <= floor) | (wy.abs() <= floor)
    if check_floor and low.any():
        raise DegenerateEnvelopeError(
            f'{int(low.sum())} wavevector(s) fall below the envelope floor; '
            f'exclude them from the bound')

    return (2 * math.pi**2 / tau)**2 * wx.abs()**2 * wy.abs()**2


def envelope_f(wannier: WannierTable, params: LatticeParams,
               tof_time: float, k: torch.Tensor) -> torch.Tensor:
    """Far-field envelope :math:`f(\\vec{k}) = \\frac{m^2 a^4}{\\hbar^2 t^2}
    |\\tilde{w}(a k_x / 2\\pi)|^2 |\\tilde{w}(a k_y / 2\\pi)|^2` in SI units.

    Args:
        wannier (:class:`WannierTable`): Wannier table in lattice units.
        params (:class:`LatticeParams`): Lattice parameters.
        tof_time (float): Expansion time in seconds.
        k (:class:`Tensor`): Wavevectors in 1/m, shape :obj:`[..., 2]`.

    :rtype: :class:`Tensor` (atoms per square meter per atom)
    """
    if not tof_time > 0:
        raise ArgumentError(f'tof_time must be positive (got {tof_time})')
    a = params.spacing_a
    tau = params.tau_from_time(tof_time)
    k = torch.as_tensor(k, dtype=torch.double)
    return envelope_lattice(wannier, tau, k * a) / a**2


def wannier_to_csv(wannier: WannierTable, path) -> None:
    write_columns(path, ['x', 'w0'], [wannier.real_grid, wannier.w0_samples])


def envelope_to_csv(wannier: WannierTable, path) -> None:
    write_columns(path, ['phi', 'wtilde_re', 'wtilde_im', 'wtilde_abs2'], [
        wannier.fourier_grid, wannier.wtilde_samples.real,
        wannier.wtilde_samples.imag,
        wannier.wtilde_samples.abs()**2
    ])
