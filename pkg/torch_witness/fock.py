import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch

from torch_witness.coalesce import coalesce
from torch_witness.errors import ArgumentError, CapacityError
from torch_witness.utils import Final

logger = logging.getLogger(__name__)

MAX_DIMENSION: Final[int] = 200000
MAX_KEY: Final[int] = 2**62


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis of :obj:`n_sites` bosonic modes.

    Either the fixed-:math:`N` sector (:obj:`n_particles` set) or the
    truncated product space with at most :obj:`n_max` bosons per site.
    Rows of :obj:`occupations` are listed in lexicographic order, first site
    most significant, and :obj:`keys` holds their base-:obj:`base` encoding
    in ascending order.
    """
    n_sites: int
    n_particles: Optional[int]
    n_max: int
    occupations: torch.Tensor
    keys: torch.Tensor

    @property
    def dim(self) -> int:
        return self.occupations.size(0)

    @property
    def base(self) -> int:
        return self.n_max + 1

    @property
    def is_fixed_n(self) -> bool:
        return self.n_particles is not None

    @property
    def device(self):
        return self.occupations.device

    def encode(self, occupations: torch.Tensor) -> torch.Tensor:
        weights = self.base**torch.arange(self.n_sites - 1, -1, -1,
                                          device=occupations.device)
        return (occupations * weights).sum(dim=-1)

    def lookup(self, occupations: torch.Tensor
               ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Returns the basis indices of the rows of :obj:`occupations` and a
        mask telling which rows belong to the basis at all."""
        occupations = torch.as_tensor(occupations, dtype=torch.long,
                                      device=self.device)
        inside = ((occupations >= 0) & (occupations <= self.n_max)).all(-1)
        if self.is_fixed_n:
            inside &= occupations.sum(dim=-1) == self.n_particles
        key = self.encode(occupations.clamp(0, self.n_max))
        idx = torch.searchsorted(self.keys, key).clamp(max=self.dim - 1)
        found = inside & (self.keys[idx] == key)
        return idx, found

    def index(self, occupation: Sequence[int]) -> int:
        idx, found = self.lookup(torch.tensor([list(occupation)]))
        if not bool(found[0]):
            raise ArgumentError(f'{tuple(occupation)} is not a basis state')
        return int(idx[0])

    def state(self, index: int) -> Tuple[int, ...]:
        return tuple(self.occupations[index].tolist())

    def total_numbers(self) -> torch.Tensor:
        return self.occupations.sum(dim=-1)


def _check_capacity(dim: int, base: int, n_sites: int, cap: int) -> None:
    if dim > cap:
        raise CapacityError(f'Hilbert-space dimension {dim} exceeds the cap '
                            f'of {cap}')
    if base**n_sites > MAX_KEY:
        raise CapacityError(f'occupation keys for {n_sites} sites with base '
                            f'{base} overflow 64-bit integers')


def fixed_n_dimension(n_sites: int, n_particles: int) -> int:
    return math.comb(n_particles + n_sites - 1, n_sites - 1)


def make_fock_basis(L: int, N: int, cap: int = MAX_DIMENSION,
                    device=None) -> FockBasis:
    """Lexicographic enumeration of the :math:`N`-boson sector on
    :math:`L` sites, of dimension :math:`\\binom{N + L - 1}{L - 1}`.

    Args:
        L (int): Number of sites.
        N (int): Number of bosons.
        cap (int, optional): Largest admissible dimension.
            (default: :obj:`200000`)

    :rtype: :class:`FockBasis`
    """
    if L < 1 or N < 0:
        raise ArgumentError(f'need L >= 1 and N >= 0 (got L={L}, N={N})')
    _check_capacity(fixed_n_dimension(L, N), N + 1, L, cap)

    occupations = torch.zeros(1, 0, dtype=torch.long, device=device)
    remaining = torch.full((1, ), N, dtype=torch.long, device=device)
    for _ in range(L - 1):
        counts = remaining + 1
        start = torch.cumsum(counts, 0) - counts
        parent = torch.repeat_interleave(
            torch.arange(counts.numel(), device=device), counts)
        n = torch.arange(parent.numel(), device=device) - start[parent]
        n = remaining[parent] - n
        occupations = torch.cat([occupations[parent], n.view(-1, 1)], dim=1)
        remaining = remaining[parent] - n
    occupations = torch.cat([occupations, remaining.view(-1, 1)], dim=1)
    # Rows come out in descending key order.
    occupations = occupations.flip(0)

    basis = FockBasis(L, N, N, occupations, occupations.new_empty(0))
    keys = basis.encode(occupations)
    assert bool((keys[1:] > keys[:-1]).all())
    logger.debug('fixed-N basis L=%d N=%d: dimension %d', L, N, keys.numel())
    return FockBasis(L, N, N, occupations, keys)


def make_product_basis(L: int, n_max: int, cap: int = MAX_DIMENSION,
                       device=None) -> FockBasis:
    """Truncated product basis with :math:`0 \\leq n_i \\leq n_{max}`,
    ordered as :math:`\\mathcal{H}_1 \\otimes \\cdots \\otimes
    \\mathcal{H}_L`."""
    if L < 1 or n_max < 0:
        raise ArgumentError(f'need L >= 1 and n_max >= 0 '
                            f'(got L={L}, n_max={n_max})')
    base = n_max + 1
    _check_capacity(base**L, base, L, cap)

    keys = torch.arange(base**L, dtype=torch.long, device=device)
    power = base**torch.arange(L - 1, -1, -1, device=device)
    occupations = (keys.view(-1, 1) // power.view(1, -1)) % base
    return FockBasis(L, None, n_max, occupations, keys)


def hopping(basis: FockBasis, i: int, j: int):
    """Sparse matrix of :math:`b^\\dagger_i b_j` in :obj:`basis`. Transitions
    leaving a truncated product basis are dropped.

    :rtype: (:class:`LongTensor`, :class:`Tensor`)
    """
    assert 0 <= i < basis.n_sites and 0 <= j < basis.n_sites
    if i == j:
        return number(basis, i)

    occ = basis.occupations
    src = (occ[:, j] > 0).nonzero().view(-1)
    target = occ[src].clone()
    value = target[:, j].to(torch.double).sqrt()
    target[:, j] -= 1
    value = value * (target[:, i] + 1).to(torch.double).sqrt()
    target[:, i] += 1

    dst, found = basis.lookup(target)
    index = torch.stack([dst[found], src[found]], dim=0)
    return index, value[found]


def diagonal(value: torch.Tensor):
    """Sparse diagonal operator with entries :obj:`value`."""
    row = torch.arange(value.numel(), dtype=torch.long, device=value.device)
    return torch.stack([row, row], dim=0), value


def number(basis: FockBasis, i: int):
    return diagonal(basis.occupations[:, i].to(torch.double))


def total_number(basis: FockBasis):
    return diagonal(basis.total_numbers().to(torch.double))


def interaction(basis: FockBasis):
    """Sparse diagonal :math:`\\frac{1}{2}\\sum_i n_i (n_i - 1)`."""
    n = basis.occupations.to(torch.double)
    return diagonal(0.5 * (n * (n - 1)).sum(dim=-1))


def add(operators, m: int, n: int, coefficients=None):
    """Linear combination of sparse operators of equal size."""
    if coefficients is None:
        coefficients = [1.0] * len(operators)
    index = torch.cat([op[0] for op in operators], dim=1)
    value = torch.cat([c * op[1] for c, op in zip(coefficients, operators)])
    return coalesce(index, value, m, n)


def expectation(operator, state: torch.Tensor) -> torch.Tensor:
    """Returns :math:`\\langle\\psi|A|\\psi\\rangle` for an amplitude vector or
    :math:`\\mathrm{tr}[A\\varrho]` for a density matrix.

    Args:
        operator ((:class:`LongTensor`, :class:`Tensor`)): Sparse matrix.
        state (:class:`Tensor`): Vector :obj:`[D]` or matrix :obj:`[D, D]`.

    :rtype: :class:`Tensor` (complex scalar)
    """
    (row, col), value = operator
    state = state.to(torch.cdouble)
    value = value.to(torch.cdouble)
    if state.dim() == 1:
        return (state[row].conj() * value * state[col]).sum()
    assert state.dim() == 2 and state.size(0) == state.size(1)
    return (value * state[col, row]).sum()
