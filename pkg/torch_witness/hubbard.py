import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import scipy.sparse.linalg
import torch

from torch_witness.convert import to_dense, to_scipy
from torch_witness.errors import ArgumentError, CapacityError, NumericalError
from torch_witness.fock import (MAX_DIMENSION, FockBasis, add, hopping,
                                interaction, make_fock_basis)
from torch_witness.geometry import as_positions, chain_bonds
from torch_witness.spmm import spmm
from torch_witness.transpose import adjoint
from torch_witness.states import DensityOperator, OneBodyDM, StateVector
from torch_witness.utils import Final

logger = logging.getLogger(__name__)

DENSE_LIMIT: Final[int] = 2000
THERMAL_LIMIT: Final[int] = 5000


@dataclass(frozen=True)
class BoseHubbardParams:
    """Bose-Hubbard model :math:`H = -J \\sum_{\\langle ij \\rangle}
    (b^\\dagger_i b_j + \\mathrm{h.c.}) + \\frac{U}{2} \\sum_i n_i (n_i - 1)`.

    Args:
        J (float): Tunneling energy.
        U (float): On-site interaction energy.
        L (int): Number of sites.
        N (int): Number of bosons.
        periodic (bool, optional): Close the chain into a ring for
            :math:`L > 2`. Ignored when :obj:`bonds` is given.
            (default: :obj:`True`)
        positions (:class:`LongTensor`, optional): Integer site coordinates.
        bonds (list, optional): Explicit list of bonded site pairs.
        temperature (float, optional): Temperature in energy units, used by
            the Gibbs-state constructors when none is passed explicitly.
    """
    J: float
    U: float
    L: int
    N: int
    periodic: bool = True
    positions: Optional[torch.Tensor] = None
    bonds: Optional[List[Tuple[int, int]]] = None
    temperature: Optional[float] = None
    site_positions: torch.Tensor = field(init=False, repr=False)
    site_bonds: List[Tuple[int, int]] = field(init=False, repr=False)

    def __post_init__(self):
        if self.J < 0 or self.U < 0:
            raise ArgumentError(f'J and U must be nonnegative '
                                f'(got J={self.J}, U={self.U})')
        if self.L < 1 or self.N < 0:
            raise ArgumentError(f'need L >= 1 and N >= 0 '
                                f'(got L={self.L}, N={self.N})')
        bonds = chain_bonds(self.L, self.periodic) if self.bonds is None \
            else [(int(i), int(j)) for i, j in self.bonds]
        for i, j in bonds:
            if not (0 <= i < self.L and 0 <= j < self.L) or i == j:
                raise ArgumentError(f'invalid bond ({i}, {j}) for '
                                    f'{self.L} sites')
        object.__setattr__(self, 'site_bonds', bonds)
        object.__setattr__(self, 'site_positions',
                           as_positions(self.positions, self.L))


def hubbard_hamiltonian(basis: FockBasis, p: BoseHubbardParams):
    """Sparse Bose-Hubbard Hamiltonian on :obj:`basis`.

    :rtype: (:class:`LongTensor`, :class:`Tensor`)
    """
    operators, coefficients = [interaction(basis)], [p.U]
    for i, j in p.site_bonds:
        forward = hopping(basis, i, j)
        operators += [forward, adjoint(*forward, basis.dim, basis.dim)]
        coefficients += [-p.J, -p.J]
    return add(operators, basis.dim, basis.dim, coefficients)


def _fix_sign(vector: torch.Tensor) -> torch.Tensor:
    nonzero = (vector.abs() > 1e-12).nonzero()
    if nonzero.numel() > 0 and vector[nonzero[0, 0]] < 0:
        vector = -vector
    return vector


def bose_hubbard_ground_state(p: BoseHubbardParams,
                              cap: int = MAX_DIMENSION,
                              dense_limit: int = DENSE_LIMIT,
                              return_energy: bool = False):
    """Ground state of the Bose-Hubbard model in the fixed-:math:`N` sector.

    Small sectors are diagonalized densely and the lowest-index eigenvector
    is taken; larger sectors go through ARPACK. The first nonzero amplitude
    is made positive.

    Args:
        p (:class:`BoseHubbardParams`): Model parameters.
        cap (int, optional): Largest admissible sector dimension.
            (default: :obj:`200000`)
        dense_limit (int, optional): Largest dimension solved densely.
            (default: :obj:`2000`)
        return_energy (bool, optional): If set to :obj:`True`, also return
            the ground energy. (default: :obj:`False`)

    :rtype: :class:`StateVector` or (:class:`StateVector`, float)
    """
    basis = make_fock_basis(p.L, p.N, cap=cap)
    index, value = hubbard_hamiltonian(basis, p)
    D = basis.dim

    if D <= dense_limit:
        H = to_dense(index, value, D, D)
        try:
            energies, vectors = torch.linalg.eigh(H)
        except RuntimeError as e:
            raise NumericalError(f'ground-state eigen-solve failed: {e}') \
                from e
        energy, vector = float(energies[0]), vectors[:, 0]
    else:
        H = to_scipy(index, value, D, D)
        try:
            energies, vectors = scipy.sparse.linalg.eigsh(H, k=1, which='SA',
                                                          tol=1e-12)
        except scipy.sparse.linalg.ArpackNoConvergence as e:
            raise NumericalError(f'ARPACK did not converge: {e}') from e
        energy = float(energies[0])
        vector = torch.from_numpy(vectors[:, 0]).to(torch.double)

    if not torch.isfinite(vector).all():
        raise NumericalError('ground-state eigen-solve returned non-finite '
                             'amplitudes')
    vector = _fix_sign(vector / vector.norm())
    logger.debug('ground state L=%d N=%d U/J=%s: E0=%.12g (dim %d)', p.L,
                 p.N, p.U / p.J if p.J > 0 else 'inf', energy, D)

    state = StateVector(basis, vector.to(torch.cdouble))
    return (state, energy) if return_energy else state


def _spectrum(p: BoseHubbardParams, max_dim: int):
    basis = make_fock_basis(p.L, p.N)
    if basis.dim > max_dim:
        raise CapacityError(f'full diagonalization of dimension {basis.dim} '
                            f'exceeds the limit of {max_dim}')
    index, value = hubbard_hamiltonian(basis, p)
    H = to_dense(index, value, basis.dim, basis.dim)
    try:
        energies, vectors = torch.linalg.eigh(H)
    except RuntimeError as e:
        raise NumericalError(f'spectrum eigen-solve failed: {e}') from e
    return basis, energies, vectors


def gibbs_weights(energies: torch.Tensor, T: float) -> torch.Tensor:
    """Canonical weights :math:`e^{-E_n/T} / Z`; :math:`T \\leq 0` selects
    the lowest eigenvector."""
    if T <= 0:
        weights = torch.zeros_like(energies)
        weights[0] = 1
        return weights
    weights = torch.exp(-(energies - energies[0]) / T)
    return weights / weights.sum()


def _temperature(p: BoseHubbardParams, T: Optional[float]) -> float:
    T = p.temperature if T is None else T
    if T is None:
        raise ArgumentError('no temperature given')
    return float(T)


def thermal_state(p: BoseHubbardParams, T: Optional[float] = None,
                  max_dim: int = THERMAL_LIMIT) -> DensityOperator:
    """Canonical Gibbs state :math:`\\varrho \\propto e^{-H/T}` in the
    fixed-:math:`N` sector."""
    basis, energies, vectors = _spectrum(p, max_dim)
    weights = gibbs_weights(energies, _temperature(p, T))
    rho = (vectors * weights.view(1, -1)) @ vectors.t()
    rho = 0.5 * (rho + rho.t())
    return DensityOperator(basis, rho.to(torch.cdouble))


def thermal_one_body_dm(p: BoseHubbardParams, T: Optional[float] = None,
                        max_dim: int = THERMAL_LIMIT) -> OneBodyDM:
    """One-body density matrix of the canonical Gibbs state, accumulated
    eigenstate by eigenstate from the exact spectrum.

    Args:
        p (:class:`BoseHubbardParams`): Model parameters.
        T (float, optional): Temperature in the energy units of :obj:`J` and
            :obj:`U`; falls back to :obj:`p.temperature`.
        max_dim (int, optional): Largest sector dimension diagonalized in
            full. (default: :obj:`5000`)

    :rtype: :class:`OneBodyDM`
    """
    basis, energies, vectors = _spectrum(p, max_dim)
    weights = gibbs_weights(energies, _temperature(p, T))
    keep = weights > 1e-300
    vectors, weights = vectors[:, keep], weights[keep]

    G = torch.zeros(p.L, p.L, dtype=torch.cdouble)
    for i in range(p.L):
        for j in range(i, p.L):
            index, value = hopping(basis, i, j)
            Av = spmm(index, value, basis.dim, basis.dim, vectors)
            per_state = (vectors * Av).sum(dim=0)
            value = complex((weights * per_state).sum())
            if i == j:
                G[i, i] = value.real
            else:
                G[i, j] = value
                G[j, i] = value.conjugate()
    return OneBodyDM(G, p.site_positions)
