import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import torch

from torch_witness.errors import (AccuracyError, ArgumentError,
                                  HermiticityError)
from torch_witness.fock import (FockBasis, expectation, hopping,
                                make_fock_basis, make_product_basis)
from torch_witness.geometry import as_positions
from torch_witness.io import write_matrix

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    """Pure state :math:`\\sum c_{n_1 \\ldots n_L} |n_1 \\cdots n_L\\rangle`
    with unit norm."""
    basis: FockBasis
    amplitudes: torch.Tensor

    def __post_init__(self):
        assert self.amplitudes.size() == (self.basis.dim, )
        norm = float(self.amplitudes.abs().pow(2).sum())
        if abs(norm - 1.0) > STATE_TOL:
            raise ArgumentError(f'state norm deviates from one by '
                                f'{abs(norm - 1.0):.3e}')

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def amplitude(self, occupation: Sequence[int]) -> complex:
        idx, found = self.basis.lookup(torch.tensor([list(occupation)]))
        return complex(self.amplitudes[idx[0]]) if bool(found[0]) else 0j

    def to_density(self) -> 'DensityOperator':
        psi = self.amplitudes
        return DensityOperator(self.basis, torch.outer(psi, psi.conj()))

    def to_csv(self, path) -> None:
        """Amplitudes as a single column in the :obj:`row, col, re, im` form,
        rows in basis order."""
        write_matrix(path, self.amplitudes.view(-1, 1))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace operator on
    :obj:`basis`."""
    basis: FockBasis
    matrix: torch.Tensor

    def __post_init__(self):
        D = self.basis.dim
        assert self.matrix.size() == (D, D)
        trace = complex(self.matrix.diagonal().sum())
        if abs(trace - 1.0) > STATE_TOL:
            raise ArgumentError(f'density operator trace is {trace}')
        residue = float((self.matrix - self.matrix.mH).abs().max()) \
            if D > 0 else 0.0
        if residue > STATE_TOL:
            raise HermiticityError(f'density operator is not Hermitian '
                                   f'(residue {residue:.3e})')

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def min_eigenvalue(self) -> float:
        return float(torch.linalg.eigvalsh(self.matrix).min())

    def is_valid(self, tol: float = STATE_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    def to_csv(self, path) -> None:
        write_matrix(path, self.matrix)


State = Union[StateVector, DensityOperator]


@dataclass(frozen=True)
class OneBodyDM:
    """One-body density matrix :math:`G_{ij} = \\langle b^\\dagger_i b_j
    \\rangle` together with the integer 3D coordinates of the sites."""
    matrix: torch.Tensor
    positions: torch.Tensor

    def __post_init__(self):
        L = self.matrix.size(0)
        assert self.matrix.size() == (L, L)
        assert self.positions.size() == (L, 3)
        scale = max(1.0, abs(float(self.matrix.diagonal().real.sum())))
        residue = float((self.matrix - self.matrix.mH).abs().max())
        if residue > STATE_TOL * scale:
            raise HermiticityError(f'one-body density matrix is not '
                                   f'Hermitian (residue {residue:.3e})')

    @property
    def n_sites(self) -> int:
        return self.matrix.size(0)

    @property
    def n_total(self) -> float:
        return float(self.matrix.diagonal().real.sum())

    def to_csv(self, path) -> None:
        write_matrix(path, self.matrix)


def _normalized(basis: FockBasis, amplitudes: torch.Tensor) -> StateVector:
    amplitudes = amplitudes.to(torch.cdouble)
    return StateVector(basis, amplitudes / amplitudes.norm())


def fock_state(basis: FockBasis, occupation: Sequence[int]) -> StateVector:
    amplitudes = torch.zeros(basis.dim, dtype=torch.cdouble,
                             device=basis.device)
    amplitudes[basis.index(occupation)] = 1
    return StateVector(basis, amplitudes)


def build_two_mode_psi(N: int) -> StateVector:
    """Uniform superposition :math:`(N + 1)^{-1/2} \\sum_n |n, N - n\\rangle`
    of two modes."""
    if N < 0:
        raise ArgumentError(f'N must be nonnegative (got {N})')
    basis = make_fock_basis(2, N)
    amplitudes = torch.full((basis.dim, ), 1 / math.sqrt(N + 1),
                            dtype=torch.cdouble)
    return StateVector(basis, amplitudes)


def build_symmetric_state(L: int, N: int) -> StateVector:
    """State :math:`(\\sum_i b^\\dagger_i)^N |\\mathrm{vac}\\rangle`,
    normalized, with :math:`c = \\sqrt{\\binom{N}{n_1 \\ldots n_L} / L^N}`."""
    basis = make_fock_basis(L, N)
    occ = basis.occupations.to(torch.double)
    log_c = torch.lgamma(torch.tensor(N + 1.0, dtype=torch.double)) - \
        torch.lgamma(occ + 1).sum(dim=-1) - N * math.log(L)
    return StateVector(basis, (0.5 * log_c).exp().to(torch.cdouble))


def coherent_amplitudes(alpha: complex, n_max: int) -> torch.Tensor:
    """Truncated coherent-state amplitudes :math:`e^{-|\\alpha|^2/2}
    \\alpha^n / \\sqrt{n!}` for :math:`n \\leq n_{max}`."""
    alpha = complex(alpha)
    n = torch.arange(n_max + 1, dtype=torch.double)
    log_mag = -0.5 * abs(alpha)**2 - 0.5 * torch.lgamma(n + 1)
    if alpha != 0:
        log_mag = log_mag + n * math.log(abs(alpha))
    else:
        log_mag = torch.where(n == 0, log_mag,
                              torch.full_like(log_mag, -math.inf))
    phase = torch.exp(1j * n * math.atan2(alpha.imag, alpha.real))
    return log_mag.exp() * phase


def coherent_cutoff(alpha: complex, tol: float = 1e-6,
                    limit: int = 200) -> int:
    """Smallest :math:`n_{max}` whose truncated two-mode weight is at least
    :math:`1 - \\mathrm{tol}`."""
    for n_max in range(limit + 1):
        weight = float(coherent_amplitudes(alpha, n_max).abs().pow(2).sum())
        if weight**2 >= 1 - tol:
            return n_max
    raise AccuracyError(f'no truncation up to {limit} reaches weight '
                        f'1 - {tol:g} for alpha={alpha}')


def coherent_product_state(alpha: complex, n_max: int) -> StateVector:
    """Truncated and renormalized product :math:`|z\\rangle_A
    |z\\rangle_B`, which lies outside the separable set."""
    c = coherent_amplitudes(alpha, n_max)
    basis = make_product_basis(2, n_max)
    return _normalized(basis, torch.outer(c, c).reshape(-1))


def build_coherent_mixture(alpha: complex, n_max: Optional[int] = None,
                           tol: float = 1e-6) -> DensityOperator:
    """Phase average of :math:`|z\\rangle\\langle z| \\otimes
    |z\\rangle\\langle z|`, realized as the projection of the truncated
    product projector onto blocks of fixed total particle number.

    Args:
        alpha (complex): Coherent amplitude :math:`z`.
        n_max (int, optional): Per-site truncation. Chosen from :obj:`tol`
            if omitted.
        tol (float, optional): Largest tolerated weight outside the
            truncation. (default: :obj:`1e-6`)

    :rtype: :class:`DensityOperator`
    """
    if n_max is None:
        n_max = coherent_cutoff(alpha, tol)
    c = coherent_amplitudes(alpha, n_max)
    weight = float(c.abs().pow(2).sum())**2
    if weight < 1 - tol:
        raise AccuracyError(f'coherent truncation at n_max={n_max} keeps '
                            f'weight {weight:.9f} < 1 - {tol:g}')

    basis = make_product_basis(2, n_max)
    psi = torch.outer(c, c).reshape(-1)
    rho = torch.outer(psi, psi.conj())
    total = basis.total_numbers()
    rho = rho * (total.view(-1, 1) == total.view(1, -1))
    rho = rho / rho.diagonal().sum()
    return DensityOperator(basis, rho)


def product_diagonal_state(basis: FockBasis,
                           local: torch.Tensor) -> torch.Tensor:
    """Diagonal of :math:`\\bigotimes_i \\sum_n p_i(n) |n\\rangle\\langle n|`
    for per-site distributions :obj:`local` of shape
    :obj:`[L, n_max + 1]`."""
    occ = basis.occupations
    probs = local.gather(1, occ.t())
    return probs.prod(dim=0)


def _uniform_simplex(size, generator) -> torch.Tensor:
    u = torch.rand(size, dtype=torch.double, generator=generator)
    e = -torch.log1p(-u)
    return e / e.sum(dim=-1, keepdim=True)


def sample_separable_ssr_state(L: int, n_max: int, n_terms: int,
                               seed: Optional[int] = None,
                               generator: Optional[torch.Generator] = None
                               ) -> DensityOperator:
    """Draws :math:`\\varrho = \\sum_n p_n \\bigotimes_i \\varrho_i^{(n)}`
    where every local state is diagonal in the local number basis.

    Weights :math:`p` and each local occupation distribution are drawn
    uniformly on their simplices.

    Args:
        L (int): Number of sites.
        n_max (int): Largest local occupation.
        n_terms (int): Number of product terms.
        seed (int, optional): Seed of a fresh generator.
        generator (:class:`torch.Generator`, optional): Generator to draw
            from; takes precedence over :obj:`seed`.

    :rtype: :class:`DensityOperator`
    """
    if n_terms < 1:
        raise ArgumentError(f'n_terms must be positive (got {n_terms})')
    if generator is None:
        generator = torch.Generator()
        generator.manual_seed(0 if seed is None else seed)

    basis = make_product_basis(L, n_max)
    weights = _uniform_simplex((n_terms, ), generator)
    local = _uniform_simplex((n_terms, L, n_max + 1), generator)
    diag = sum(w * product_diagonal_state(basis, p)
               for w, p in zip(weights, local))
    diag = diag / diag.sum()
    return DensityOperator(basis, torch.diag(diag).to(torch.cdouble))


def mix(states: Sequence[DensityOperator],
        weights: Sequence[float]) -> DensityOperator:
    assert len(states) == len(weights) and len(states) > 0
    basis = states[0].basis
    assert all(torch.equal(s.basis.keys, basis.keys) for s in states)
    total = float(sum(weights))
    matrix = sum(w / total * s.matrix for w, s in zip(weights, states))
    return DensityOperator(basis, matrix)


def one_body_dm(state: State, positions=None) -> OneBodyDM:
    """Exact :math:`G_{ij} = \\langle b^\\dagger_i b_j\\rangle` by ladder
    action in the Fock basis.

    Args:
        state (:class:`StateVector` or :class:`DensityOperator`): State.
        positions (:class:`LongTensor`, optional): Integer coordinates of
            the sites, shape :obj:`[L, 3]`. Defaults to a chain along
            :math:`x`.

    :rtype: :class:`OneBodyDM`
    """
    basis = state.basis
    L = basis.n_sites
    positions = as_positions(positions, L, device=basis.device)
    payload = state.amplitudes if isinstance(state, StateVector) \
        else state.matrix

    G = torch.zeros(L, L, dtype=torch.cdouble, device=basis.device)
    for i in range(L):
        G[i, i] = float(expectation(hopping(basis, i, i), payload).real)
        for j in range(i + 1, L):
            value = complex(expectation(hopping(basis, i, j), payload))
            G[i, j] = value
            G[j, i] = value.conjugate()
    return OneBodyDM(G, positions)


def data_hiding_success(state: StateVector) -> float:
    """Success probability :math:`p = \\frac{1}{4} \\sum_{n=1}^N
    |c_{n, N-n} + c_{n-1, N-n+1}|^2` of the data-hiding protocol fuelled by
    a two-site state of definite total particle number."""
    basis = state.basis
    if basis.n_sites != 2:
        raise ArgumentError('data hiding needs a two-site state')
    weight = state.amplitudes.abs().pow(2)
    totals = basis.total_numbers()[weight > STATE_TOL]
    if totals.numel() == 0 or bool((totals != totals[0]).any()):
        raise ArgumentError('state has no definite total particle number')
    N = int(totals[0])

    c = torch.stack([
        torch.tensor(state.amplitude((n, N - n)), dtype=torch.cdouble)
        for n in range(N + 1)
    ])
    return 0.25 * float((c[1:] + c[:-1]).abs().pow(2).sum())

