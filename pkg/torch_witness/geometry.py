import math
from typing import List, Tuple

import torch

from torch_witness.errors import ArgumentError


def chain_positions(L: int, device=None) -> torch.Tensor:
    """Integer 3D coordinates of an :math:`L`-site chain along :math:`x`,
    centred on the origin (shape :obj:`[L, 3]`)."""
    if L < 1:
        raise ArgumentError(f'L must be positive (got {L})')
    pos = torch.zeros(L, 3, dtype=torch.long, device=device)
    pos[:, 0] = torch.arange(L, device=device) - (L - 1) // 2
    return pos


def chain_bonds(L: int, periodic: bool = True) -> List[Tuple[int, int]]:
    """Nearest-neighbour bonds; a periodic chain of :math:`L > 2` sites
    closes into a ring."""
    bonds = [(i, i + 1) for i in range(L - 1)]
    if periodic and L > 2:
        bonds.append((L - 1, 0))
    return bonds


def corner_momentum(L: int, periodic: bool = True) -> Tuple[float, float]:
    """Wavevector (units :math:`1/a`) playing the role of the zone corner
    :math:`(\\pi/a, \\pi/a)` on a finite chain.

    On a ring of :math:`L > 2` sites the :math:`x` component is the allowed
    ring momentum :math:`2\\pi\\lfloor L/2 \\rfloor / L` closest to
    :math:`\\pi`, which equals :math:`\\pi` for even :math:`L`.
    """
    if L < 1:
        raise ArgumentError(f'L must be positive (got {L})')
    kx = 2 * math.pi * (L // 2) / L if periodic and L > 2 else math.pi
    return kx, math.pi


def as_positions(positions, L: int, device=None) -> torch.Tensor:
    if positions is None:
        return chain_positions(L, device=device)
    positions = torch.as_tensor(positions, dtype=torch.long, device=device)
    if positions.dim() != 2 or positions.size(0) != L or \
            positions.size(1) not in (1, 2, 3):
        raise ArgumentError(f'expected {L} site positions with up to three '
                            f'integer coordinates (got shape '
                            f'{tuple(positions.size())})')
    if positions.size(1) < 3:
        pad = positions.new_zeros(L, 3 - positions.size(1))
        positions = torch.cat([positions, pad], dim=1)
    return positions
