import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import torch

from torch_witness.errors import ArgumentError
from torch_witness.fock import FockBasis, hopping
from torch_witness.convert import to_dense
from torch_witness.geometry import chain_positions, corner_momentum
from torch_witness.states import (DensityOperator, State, StateVector,
                                  sample_separable_ssr_state)
from torch_witness.utils import DEFAULT_TAU, WITNESS_TOL
from torch_witness.witness import WitnessReport, phase_matrix

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-12

Channel = Tuple[int, Sequence[torch.Tensor]]


def identity_kraus(n_max: int) -> List[torch.Tensor]:
    return [torch.eye(n_max + 1, dtype=torch.cdouble)]


def dephasing_kraus(n_max: int) -> List[torch.Tensor]:
    """Projectors :math:`|n\\rangle\\langle n|` onto the local number
    states."""
    out = []
    for n in range(n_max + 1):
        P = torch.zeros(n_max + 1, n_max + 1, dtype=torch.cdouble)
        P[n, n] = 1
        out.append(P)
    return out


def sample_local_kraus(n_max: int, generator: torch.Generator
                       ) -> List[torch.Tensor]:
    """Random two-outcome local instrument commuting with the local number
    operator: :math:`K_1 = \\mathrm{diag}(d)` and :math:`K_2 =
    \\mathrm{diag}(\\sqrt{1 - |d|^2} e^{i\\theta})` with
    :math:`|d_n| \\leq 1`."""
    size = (n_max + 1, )
    mag = torch.rand(size, dtype=torch.double, generator=generator)
    phase = 2 * math.pi * torch.rand(size, dtype=torch.double,
                                     generator=generator)
    theta = 2 * math.pi * torch.rand(size, dtype=torch.double,
                                     generator=generator)
    d = mag * torch.exp(1j * phase)
    K1 = torch.diag(d)
    K2 = torch.diag((1 - mag**2).clamp(min=0).sqrt() * torch.exp(1j * theta))
    return [K1, K2]


def is_trace_preserving(kraus: Sequence[torch.Tensor],
                        tol: float = 1e-12) -> bool:
    total = sum(K.mH @ K for K in kraus)
    eye = torch.eye(total.size(0), dtype=total.dtype)
    return float((total - eye).abs().max()) <= tol


def embed_local(basis: FockBasis, site: int,
                operator: torch.Tensor) -> torch.Tensor:
    """Lifts a single-site operator to the truncated product space."""
    if basis.is_fixed_n:
        raise ArgumentError('local channels act on a product basis')
    if not 0 <= site < basis.n_sites:
        raise ArgumentError(f'site {site} out of range')
    assert operator.size(0) == basis.base
    out = torch.ones(1, 1, dtype=torch.cdouble)
    eye = torch.eye(basis.base, dtype=torch.cdouble)
    for s in range(basis.n_sites):
        out = torch.kron(out, operator if s == site else eye)
    return out


def apply_local_channel(rho: DensityOperator, site: int,
                        kraus: Sequence[torch.Tensor],
                        min_probability: float = 1e-14
                        ) -> List[Tuple[float, DensityOperator]]:
    """Applies a local instrument to :obj:`site` and returns the normalized
    post-measurement states with their probabilities, as a classically
    communicated LOCC round would see them.

    :rtype: list of (float, :class:`DensityOperator`)
    """
    if not is_trace_preserving(kraus):
        raise ArgumentError('Kraus operators are not trace preserving')
    branches = []
    for K in kraus:
        K = embed_local(rho.basis, site, K)
        out = K @ rho.matrix @ K.mH
        p = float(out.diagonal().real.sum())
        if p > min_probability:
            out = 0.5 * (out + out.mH) / p
            branches.append((p, DensityOperator(rho.basis, out)))
    return branches


def local_number_commutator(rho: DensityOperator, site: int) -> float:
    """Largest entry of :math:`[\\varrho, n_i]`."""
    n = rho.basis.occupations[:, site].to(torch.double)
    comm = rho.matrix * (n.view(1, -1) - n.view(-1, 1))
    return float(comm.abs().max())


def is_separable_ssr(rho: DensityOperator,
                     tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership in the separable set for single-site parties.

    A state commuting with every local number operator is diagonal in the
    occupation basis, and a nonnegative diagonal state is a mixture of
    product Fock states.
    """
    commutes = all(
        local_number_commutator(rho, i) <= tol
        for i in range(rho.basis.n_sites))
    return commutes and float(rho.matrix.diagonal().real.min()) >= -tol


def _witness_values(rhos: torch.Tensor, hops: torch.Tensor,
                    P: torch.Tensor) -> torch.Tensor:
    # tr[b_i^dag b_j rho] for a batch of states, then sum_ij G_ij P_ij - N.
    G = torch.einsum('ijab,sba->sij', hops, rhos)
    S = (G * P).sum(dim=(-2, -1)).real
    return S - G.diagonal(dim1=-2, dim2=-1).real.sum(dim=-1)


def sample_local_channels(L: int, n_max: int, n_channels: int,
                          generator: torch.Generator) -> List[Channel]:
    """Draws :obj:`n_channels` instruments from :meth:`sample_local_kraus`,
    each attached to a random site."""
    out = []
    for _ in range(n_channels):
        kraus = sample_local_kraus(n_max, generator)
        site = int(torch.randint(L, (1, ), generator=generator))
        out.append((site, kraus))
    return out


def check_monotone_under_local_channels(
        states: Union[State, Sequence[State]],
        channels: Optional[Iterable[Channel]] = None,
        k_hat: Optional[Tuple[float, float]] = None,
        seed: int = 0, n_channels: int = 200, tau: float = DEFAULT_TAU,
        tol: float = WITNESS_TOL) -> WitnessReport:
    """Applies number-conserving local instruments to separable states and
    checks that every branch stays separable and keeps a nonnegative witness
    expectation at :obj:`k_hat`.

    Args:
        states (:class:`DensityOperator` or :class:`StateVector` or list):
            States on a common product basis with :math:`L \\leq 2` and
            :math:`n_{\\max} \\leq 3`.
        channels (iterable, optional): :obj:`(site, kraus)` pairs. When
            omitted, :obj:`n_channels` instruments are sampled with
            :obj:`seed`.
        k_hat (tuple, optional): Wavevector of the witness. Defaults to the
            corner momentum of the chain.
        seed (int, optional): Channel sampler seed. (default: :obj:`0`)
        n_channels (int, optional): Number of sampled instruments.
            (default: :obj:`200`)

    :rtype: :class:`WitnessReport`
    """
    if isinstance(states, (StateVector, DensityOperator)):
        states = [states]
    states = [s.to_density() if isinstance(s, StateVector) else s
              for s in states]
    if len(states) == 0:
        raise ArgumentError('need at least one state')
    basis = states[0].basis
    if basis.is_fixed_n:
        raise ArgumentError('local channels act on a product basis')
    if not all(torch.equal(s.basis.keys, basis.keys) for s in states):
        raise ArgumentError('states must share one basis')
    L, n_max = basis.n_sites, basis.n_max
    if L > 2 or n_max > 3:
        raise ArgumentError(f'channel checks are limited to L <= 2 and '
                            f'n_max <= 3 (got L={L}, n_max={n_max})')
    if channels is None:
        generator = torch.Generator()
        generator.manual_seed(seed)
        channels = sample_local_channels(L, n_max, n_channels, generator)
    channels = list(channels)
    for site, kraus in channels:
        if not is_trace_preserving(kraus):
            raise ArgumentError('Kraus operators are not trace preserving')
    k_hat = corner_momentum(L) if k_hat is None else k_hat

    rhos = torch.stack([s.matrix for s in states]).to(torch.cdouble)
    hops = torch.stack([
        torch.stack([
            to_dense(*hopping(basis, i, j), basis.dim, basis.dim)
            for j in range(L)
        ]) for i in range(L)
    ]).to(torch.cdouble)
    P = phase_matrix(chain_positions(L), k_hat, tau)

    report = WitnessReport('monotone_local_channels',
                           len(states) * len(channels), 1, math.inf, tol,
                           notes={'membership_failures': 0})
    offdiag = ~torch.eye(basis.dim, dtype=torch.bool)
    for site, kraus in channels:
        for K in kraus:
            K = embed_local(basis, site, K)
            out = K @ rhos @ K.mH
            p = out.diagonal(dim1=-2, dim2=-1).real.sum(dim=-1)
            keep = p > 1e-14
            if not bool(keep.any()):
                continue
            out = out[keep] / p[keep].view(-1, 1, 1)

            off = out[:, offdiag].abs().amax(dim=-1) if basis.dim > 1 else \
                out.new_zeros(out.size(0)).real
            low = out.diagonal(dim1=-2, dim2=-1).real.amin(dim=-1)
            failed = (off > MEMBERSHIP_TOL) | (low < -MEMBERSHIP_TOL)
            report.notes['membership_failures'] += int(failed.sum())

            witness = _witness_values(out, hops, P)
            report.min_value = min(report.min_value, float(witness.min()))
            samples = keep.nonzero().view(-1)
            for s in (witness < -tol).nonzero().view(-1).tolist():
                report.violations.append(
                    (int(samples[s]), tuple(k_hat), float(witness[s])))

    logger.info('monotone check: %d branches, min witness %.3e',
                report.num_samples, report.min_value)
    return report


def sample_monotone_check(L: int = 2, n_max: int = 3, n_states: int = 100,
                          n_channels: int = 200,
                          k_hat: Optional[Tuple[float, float]] = None,
                          tau: float = DEFAULT_TAU, seed: int = 0,
                          n_terms: int = 3,
                          tol: float = WITNESS_TOL) -> WitnessReport:
    """Runs :meth:`check_monotone_under_local_channels` on
    :obj:`n_states` sampled separable states."""
    if L > 2 or n_max > 3:
        raise ArgumentError(f'channel checks are limited to L <= 2 and '
                            f'n_max <= 3 (got L={L}, n_max={n_max})')
    generator = torch.Generator()
    generator.manual_seed(seed)
    states = [
        sample_separable_ssr_state(L, n_max, n_terms, generator=generator)
        for _ in range(n_states)
    ]
    channels = sample_local_channels(L, n_max, n_channels, generator)
    return check_monotone_under_local_channels(states, channels, k_hat,
                                               seed=seed, tau=tau, tol=tol)
