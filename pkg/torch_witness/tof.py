import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Tuple

import torch
from scipy.special import roots_legendre

from torch_witness.errors import (AccuracyError, ArgumentError,
                                  CoverageError, HermiticityError)
from torch_witness.io import write_columns
from torch_witness.lattice import LatticeParams
from torch_witness.states import OneBodyDM
from torch_witness.utils import DEFAULT_WAVELENGTH
from torch_witness.wannier import WannierTable, envelope_lattice
from torch_witness.witness import interference_sum

logger = logging.getLogger(__name__)

APPROXIMATIONS = ('exact', 'stationary_phase', 'far_field')

STATIONARY_MIN_TAU = 10.0


@dataclass(frozen=True)
class TofParams:
    """Free expansion for :obj:`time` seconds, equivalently
    :math:`\\tau = 2\\pi^2\\hbar t / (m a^2)`, evaluated with one of the
    propagators :obj:`"exact"`, :obj:`"stationary_phase"` or
    :obj:`"far_field"`."""
    time: float
    tau: float
    approximation: str = 'exact'
    spacing_a: float = DEFAULT_WAVELENGTH / 2

    def __post_init__(self):
        if not self.tau > 0 or not self.time > 0:
            raise ArgumentError(f'time and tau must be positive '
                                f'(got time={self.time}, tau={self.tau})')
        if self.approximation not in APPROXIMATIONS:
            raise ArgumentError(f'approximation must be one of '
                                f'{APPROXIMATIONS} '
                                f'(got {self.approximation!r})')
        if not self.spacing_a > 0:
            raise ArgumentError(f'spacing_a must be positive '
                                f'(got {self.spacing_a})')

    @classmethod
    def from_lattice(cls, params: LatticeParams, time: float,
                     approximation: str = 'exact') -> 'TofParams':
        if not time > 0:
            raise ArgumentError(f'time must be positive (got {time})')
        return cls(time, params.tau_from_time(time), approximation,
                   params.spacing_a)

    @classmethod
    def from_tau(cls, params: LatticeParams, tau: float,
                 approximation: str = 'exact') -> 'TofParams':
        if not tau > 0:
            raise ArgumentError(f'tau must be positive (got {tau})')
        return cls(params.time_from_tau(tau), tau, approximation,
                   params.spacing_a)

    def with_approximation(self, approximation: str) -> 'TofParams':
        return TofParams(self.time, self.tau, approximation, self.spacing_a)

    def consistent_with(self, params: LatticeParams,
                        rtol: float = 1e-9) -> bool:
        tau = params.tau_from_time(self.time)
        return abs(tau - self.tau) <= rtol * tau and \
            abs(params.spacing_a - self.spacing_a) <= rtol * self.spacing_a


@dataclass(frozen=True)
class DensityField:
    """Column density on the grid spanned by :obj:`x` and :obj:`y` (meters);
    :obj:`values` has shape :obj:`[len(y), len(x)]` in atoms per square
    meter."""
    x: torch.Tensor
    y: torch.Tensor
    values: torch.Tensor

    def __post_init__(self):
        assert self.values.size() == (self.y.numel(), self.x.numel())

    def integral(self) -> float:
        inner = torch.trapezoid(self.values, self.x, dim=1)
        return float(torch.trapezoid(inner, self.y))

    def to_csv(self, path) -> None:
        Y, X = torch.meshgrid(self.y, self.x, indexing='ij')
        write_columns(path, ['x', 'y', 'n'], [X, Y, self.values])


def l1_distance(a: DensityField, b: DensityField) -> float:
    """:math:`\\int |n_a - n_b| \\, dx \\, dy` in atoms."""
    if not (torch.equal(a.x, b.x) and torch.equal(a.y, b.y)):
        raise ArgumentError('density fields live on different grids')
    diff = DensityField(a.x, a.y, (a.values - b.values).abs())
    return diff.integral()


def _panels(lo: float, hi: float, n_panels: int, nodes: int
            ) -> Tuple[torch.Tensor, torch.Tensor]:
    roots, weights = roots_legendre(nodes)
    roots = torch.from_numpy(roots)
    weights = torch.from_numpy(weights)
    edges = torch.linspace(lo, hi, n_panels + 1, dtype=torch.double)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = mid.view(-1, 1) + half.view(-1, 1) * roots.view(1, -1)
    w = half.view(-1, 1) * weights.view(1, -1)
    return y.reshape(-1), w.reshape(-1)


def _fresnel(wannier: WannierTable, x: torch.Tensor, tau: float,
             n_panels: int, nodes: int, chunk: int = 256) -> torch.Tensor:
    extent = float(wannier.real_grid[-1])
    y, w = _panels(-extent, extent, n_panels, nodes)
    w = (w * wannier.evaluate(y)).to(torch.cdouble)
    out = torch.empty(x.numel(), dtype=torch.cdouble)
    for start in range(0, x.numel(), chunk):
        part = x[start:start + chunk].view(-1, 1)
        kernel = torch.exp(1j * math.pi**2 * (part - y.view(1, -1))**2 / tau)
        out[start:start + chunk] = kernel @ w
    prefactor = math.sqrt(math.pi / tau) * complex(math.cos(-math.pi / 4),
                                                   math.sin(-math.pi / 4))
    return prefactor * out


def propagate(wannier: WannierTable, x: torch.Tensor, tau: float,
              rtol: float = 1e-6, nodes: int = 16,
              max_refinements: int = 8) -> torch.Tensor:
    """Freely expanded Wannier function :math:`\\psi(x) = \\sqrt{\\pi /
    (i\\tau)} \\int dy \\, e^{i\\pi^2 (x - y)^2 / \\tau} w_0(y)` (lengths in
    :math:`a`) by Gauss-Legendre panels, doubled until two successive
    results agree to :obj:`rtol` relative to their peak."""
    x = torch.as_tensor(x, dtype=torch.double).reshape(-1)
    extent = float(wannier.real_grid[-1])
    rate = 2 * math.pi**2 * (float(x.abs().max()) + extent) / tau
    width = min(0.5, 8.0 / max(rate, 1e-12))
    n_panels = max(1, math.ceil(2 * extent / width))

    previous = _fresnel(wannier, x, tau, n_panels, nodes)
    for step in range(max_refinements):
        n_panels *= 2
        current = _fresnel(wannier, x, tau, n_panels, nodes)
        peak = float(current.abs().max())
        change = float((current - previous).abs().max())
        logger.debug('Fresnel refinement %d: %d panels, change %.3e', step,
                     n_panels, change / max(peak, 1e-300))
        if change <= rtol * max(peak, 1e-300):
            return current
        previous = current
    raise AccuracyError(f'oscillatory integral unresolved after '
                        f'{max_refinements} refinements at tau={tau:g}')


def _tau(params) -> float:
    tau = params.tau if isinstance(params, TofParams) else float(params)
    if not tau > 0:
        raise ArgumentError(f'tau must be positive (got {tau})')
    return tau


def g_exact(wannier: WannierTable, site_index: int, x: torch.Tensor,
            params, rtol: float = 1e-6) -> torch.Tensor:
    """Exact expansion amplitude :math:`g_i(x) = \\psi(x - i)` of the
    Wannier function centred on site :math:`i`.

    Args:
        wannier (:class:`WannierTable`): Wannier table.
        site_index (int): Site coordinate along the axis.
        x (:class:`Tensor`): Positions in units of :math:`a`.
        params (:class:`TofParams` or float): Expansion parameters or
            :math:`\\tau`.
        rtol (float, optional): Relative refinement tolerance.
            (default: :obj:`1e-6`)

    :rtype: :class:`Tensor` (complex, amplitude per :math:`\\sqrt{a}`)
    """
    x = torch.as_tensor(x, dtype=torch.double)
    out = propagate(wannier, x - site_index, _tau(params), rtol)
    return out.view(x.size())


def g_stationary(wannier: WannierTable, site_index: int, x: torch.Tensor,
                 params) -> torch.Tensor:
    """Stationary-phase amplitude :math:`e^{i\\pi^2 (x - i)^2 / \\tau}
    (1 - i) \\frac{\\pi}{\\sqrt{\\tau}} \\tilde{w}(\\pi (x - i) / \\tau)`."""
    tau = _tau(params)
    if tau < STATIONARY_MIN_TAU:
        warnings.warn(f'stationary-phase amplitude used at tau={tau:g}, '
                      f'below its validity floor of {STATIONARY_MIN_TAU:g}')
    x = torch.as_tensor(x, dtype=torch.double) - site_index
    wtilde = wannier.transform(math.pi * x / tau)
    phase = torch.exp(1j * math.pi**2 * x**2 / tau)
    return phase * (1 - 1j) * math.pi / math.sqrt(tau) * wtilde


def density_grid(params: TofParams, n_points: int = 256,
                 phi_extent: float = 4.0) -> Tuple[torch.Tensor, torch.Tensor]:
    """Square grid (meters) whose far-field wavevectors cover
    :math:`|a k / 2\\pi| \\leq` :obj:`phi_extent`."""
    if n_points < 2:
        raise ArgumentError(f'n_points must be at least 2 (got {n_points})')
    half = phi_extent * params.tau / math.pi * params.spacing_a
    x = torch.linspace(-half, half, n_points, dtype=torch.double)
    return x, x.clone()


def _axis_weight(amplitude: torch.Tensor, x: torch.Tensor) -> float:
    return float(torch.trapezoid(amplitude.abs()**2, x))


def column_density(G: OneBodyDM, wannier: WannierTable,
                   grid: Tuple[torch.Tensor, torch.Tensor],
                   params: TofParams,
                   coverage_tol: float = 1e-3) -> DensityField:
    """Column density :math:`\\langle n(x, y, t) \\rangle = \\sum_{ij: i_z =
    j_z} G_{ij} \\, g^*_i g_j` after free expansion.

    Args:
        G (:class:`OneBodyDM`): One-body density matrix of the lattice
            state.
        wannier (:class:`WannierTable`): Wannier table.
        grid ((:class:`Tensor`, :class:`Tensor`)): Axes :math:`x, y` in
            meters.
        params (:class:`TofParams`): Expansion parameters; the approximation
            selects the propagator.
        coverage_tol (float, optional): Largest tolerated single-particle
            weight outside the grid. (default: :obj:`1e-3`)

    :rtype: :class:`DensityField`
    """
    x_m, y_m = (torch.as_tensor(v, dtype=torch.double).reshape(-1)
                for v in grid)
    a, tau = params.spacing_a, params.tau
    x, y = x_m / a, y_m / a

    if params.approximation == 'far_field':
        kx, ky = 2 * math.pi**2 * x / tau, 2 * math.pi**2 * y / tau
        KY, KX = torch.meshgrid(ky, kx, indexing='ij')
        k = torch.stack([KX, KY], dim=-1)
        envelope = envelope_lattice(wannier, tau, k, check_floor=False)
        values = envelope * interference_sum(G, k, tau)
        axis = (2 * math.pi**2 / tau) * \
            wannier.interpolate(math.pi * x / tau).abs()**2
        axis_y = (2 * math.pi**2 / tau) * \
            wannier.interpolate(math.pi * y / tau).abs()**2
        weight = float(torch.trapezoid(axis, x)) * \
            float(torch.trapezoid(axis_y, y))
    else:
        amplitude = g_exact if params.approximation == 'exact' else \
            g_stationary
        cache: Dict[Tuple[str, int], torch.Tensor] = {}

        def axis_amplitude(axis: str, coords: torch.Tensor, offset: int):
            key = (axis, offset)
            if key not in cache:
                cache[key] = amplitude(wannier, offset, coords, params)
            return cache[key]

        pos = G.positions.tolist()
        A = torch.stack([axis_amplitude('x', x, p[0]) for p in pos])
        B = torch.stack([axis_amplitude('y', y, p[1]) for p in pos])
        weight = min(
            _axis_weight(A[i], x) * _axis_weight(B[i], y)
            for i in range(len(pos)))

        same_z = G.positions[:, 2].view(-1, 1) == G.positions[:, 2].view(
            1, -1)
        P = B.view(B.size(0), -1, 1) * A.view(A.size(0), 1, -1)
        values = torch.einsum('iyx,ij,jyx->yx', P.conj(), G.matrix * same_z,
                              P)
        peak = max(float(values.abs().max()), 1e-300)
        residue = float(values.imag.abs().max())
        if residue > 1e-9 * peak:
            raise HermiticityError(f'imaginary residue {residue:.3e} in the '
                                   f'column density')
        values = values.real

    deficit = 1.0 - weight
    logger.debug('column density (%s): grid weight deficit %.3e',
                 params.approximation, deficit)
    if deficit > coverage_tol:
        raise CoverageError(f'density grid misses {deficit:.3e} of the '
                            f'single-particle weight (tolerance '
                            f'{coverage_tol:g})')

    return DensityField(x_m, y_m, values / a**2)


def far_field_momentum(params: TofParams, x: torch.Tensor) -> torch.Tensor:
    """Wavevector (units :math:`1/a`) imaged at position :obj:`x` (meters)
    in the far field, :math:`k = 2\\pi^2 x / (\\tau a)`."""
    return 2 * math.pi**2 * torch.as_tensor(x) / (params.tau *
                                                   params.spacing_a)
