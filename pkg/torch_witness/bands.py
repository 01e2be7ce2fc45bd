import logging
import math
from dataclasses import dataclass
from typing import Optional

import torch

from torch_witness.errors import ArgumentError, NumericalError
from torch_witness.lattice import LatticeParams
from torch_witness.io import write_columns

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlochSpectrum:
    """Plane-wave eigen-decomposition of the single-particle lattice
    Hamiltonian.

    Bloch functions read :math:`\\psi_{q,n}(x) = \\sum_p c_{q,n,p}
    e^{i(q + 2\\pi p)x}` with :math:`x` in units of :math:`a`.

    Attributes:
        quasimomenta (:class:`Tensor`): Quasimomenta :math:`q` in units of
            :math:`1/a`, shape :obj:`[n_q]`.
        band_energies (:class:`Tensor`): Energies in units of :math:`E_R`,
            shape :obj:`[n_q, n_bands]`.
        bloch_coefficients (:class:`Tensor`): Coefficients :math:`c`, shape
            :obj:`[n_q, n_bands, n_planewaves]`.
        orders (:class:`LongTensor`): Reciprocal orders :math:`p`.
        depth_s (float): Lattice depth the spectrum was solved for.
    """
    quasimomenta: torch.Tensor
    band_energies: torch.Tensor
    bloch_coefficients: torch.Tensor
    orders: torch.Tensor
    depth_s: float

    @property
    def num_bands(self) -> int:
        return self.band_energies.size(-1)

    @property
    def num_planewaves(self) -> int:
        return self.orders.numel()


def midpoint_quasimomenta(n_q: int, dtype=torch.double,
                          device=None) -> torch.Tensor:
    """Uniform grid on :math:`(-\\pi, \\pi)` avoiding the zone edge and
    symmetric under :math:`q \\to -q`."""
    n = torch.arange(n_q, dtype=dtype, device=device)
    return math.pi * (-1 + (2 * n + 1) / n_q)


def bloch_hamiltonian(depth_s: float, quasimomenta: torch.Tensor,
                      n_planewaves: int) -> torch.Tensor:
    """Returns the batched plane-wave Hamiltonian :math:`H(q)` in units of
    :math:`E_R`, shape :obj:`[n_q, n_planewaves, n_planewaves]`.

    The diagonal carries :math:`(2p + q/\\pi)^2`, neighbouring orders
    couple with :math:`-s/4`.
    """
    q_tilde = quasimomenta / math.pi
    order = (n_planewaves - 1) // 2
    p = torch.arange(-order, order + 1, dtype=q_tilde.dtype,
                     device=q_tilde.device)

    diag = (2 * p.view(1, -1) + q_tilde.view(-1, 1))**2
    H = torch.diag_embed(diag)
    off = torch.full((n_planewaves - 1, ), -depth_s / 4, dtype=q_tilde.dtype,
                     device=q_tilde.device)
    H = H + torch.diag(off, 1) + torch.diag(off, -1)
    return H


def solve_band_structure(params: LatticeParams, n_bands: int = 2,
                         n_q: int = 128, n_planewaves: int = 41,
                         quasimomenta: Optional[torch.Tensor] = None,
                         device=None) -> BlochSpectrum:
    """Solves the single-particle band structure of the sinusoidal lattice.

    Args:
        params (:class:`LatticeParams`): Lattice parameters.
        n_bands (int, optional): Number of bands to keep. (default: :obj:`2`)
        n_q (int, optional): Number of quasimomenta on the midpoint grid.
            (default: :obj:`128`)
        n_planewaves (int, optional): Odd plane-wave cutoff.
            (default: :obj:`41`)
        quasimomenta (:class:`Tensor`, optional): Explicit quasimomenta in
            units of :math:`1/a`, overriding :obj:`n_q`.

    :rtype: :class:`BlochSpectrum`
    """
    if n_bands < 1:
        raise ArgumentError(f'n_bands must be positive (got {n_bands})')
    if n_planewaves % 2 != 1 or n_planewaves < 2 * n_bands + 5:
        raise ArgumentError(f'n_planewaves must be odd and at least '
                            f'{2 * n_bands + 5} (got {n_planewaves})')
    if quasimomenta is None:
        if n_q < 1:
            raise ArgumentError(f'n_q must be positive (got {n_q})')
        quasimomenta = midpoint_quasimomenta(n_q, device=device)
    else:
        quasimomenta = torch.as_tensor(quasimomenta, dtype=torch.double,
                                       device=device).view(-1)
        if quasimomenta.numel() == 0:
            raise ArgumentError('quasimomenta must be nonempty')

    H = bloch_hamiltonian(params.depth_s, quasimomenta, n_planewaves)
    try:
        energies, vectors = torch.linalg.eigh(H)
    except RuntimeError as e:
        raise NumericalError(f'band eigen-solve failed: {e}') from e
    if not torch.isfinite(energies).all():
        raise NumericalError('band eigen-solve returned non-finite energies')

    energies = energies[:, :n_bands]
    coefficients = vectors[:, :, :n_bands].transpose(1, 2).contiguous()

    order = (n_planewaves - 1) // 2
    orders = torch.arange(-order, order + 1, device=quasimomenta.device)

    logger.debug('solved %d bands at s=%g on %d quasimomenta', n_bands,
                 params.depth_s, quasimomenta.numel())

    return BlochSpectrum(quasimomenta, energies, coefficients, orders,
                         params.depth_s)


def bands_to_csv(spectrum: BlochSpectrum, path) -> None:
    names = ['q'] + [f'band_{n}' for n in range(spectrum.num_bands)]
    columns = [spectrum.quasimomenta] + [
        spectrum.band_energies[:, n] for n in range(spectrum.num_bands)
    ]
    write_columns(path, names, columns)
