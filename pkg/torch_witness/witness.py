import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

import torch

from torch_witness.errors import ArgumentError, HermiticityError
from torch_witness.io import write_columns
from torch_witness.states import (OneBodyDM, one_body_dm,
                                  sample_separable_ssr_state)
from torch_witness.utils import DEFAULT_TAU, WITNESS_TOL

logger = logging.getLogger(__name__)

RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class MomentumSpec:
    """Wavevector :math:`\\vec{k}` (units :math:`1/a`) at which the witness
    is read, and the dimensionless expansion time :math:`\\tau`.
    :obj:`tau=math.inf` gives the far-field limit."""
    k: Tuple[float, float]
    tau: float = DEFAULT_TAU
    include_quadratic_phase: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ArgumentError(f'tau must be positive (got {self.tau})')
        object.__setattr__(self, 'k', (float(self.k[0]), float(self.k[1])))


@dataclass(frozen=True)
class BoundValue:
    """Entanglement bound :math:`E(\\vec{k}) = \\max(0, -\\langle W \\rangle)`
    with :math:`\\langle W \\rangle = \\langle n(\\vec{k}) \\rangle / f(\\vec{k})
    - \\langle N \\rangle`, in particles."""
    e_of_k: float
    n_total: float
    witness_expectation: float


def interference_sum(G: OneBodyDM, k: torch.Tensor, tau: float = DEFAULT_TAU,
                     include_quadratic_phase: bool = True) -> torch.Tensor:
    """Evaluates :math:`\\sum_{i, j: i_z = j_z} G_{ij} e^{i \\vec{k} \\cdot
    (\\vec{i} - \\vec{j})} e^{i \\pi^2 (\\vec{j}^2 - \\vec{i}^2) / \\tau}` for a
    batch of wavevectors.

    Args:
        G (:class:`OneBodyDM`): One-body density matrix.
        k (:class:`Tensor`): Wavevectors in units of :math:`1/a`, shape
            :obj:`[..., 2]`.
        tau (float, optional): Dimensionless expansion time.
            (default: :obj:`1.8e3`)
        include_quadratic_phase (bool, optional): If set to :obj:`False`,
            drops the near-field phase. (default: :obj:`True`)

    :rtype: :class:`Tensor`
    """
    if not tau > 0:
        raise ArgumentError(f'tau must be positive (got {tau})')
    k = torch.as_tensor(k, dtype=torch.double, device=G.matrix.device)
    assert k.size(-1) == 2

    pos = G.positions.to(torch.double)
    same_z = G.positions[:, 2].view(-1, 1) == G.positions[:, 2].view(1, -1)
    M = G.matrix * same_z

    if include_quadratic_phase and math.isfinite(tau):
        r2 = (pos[:, :2]**2).sum(dim=-1)
        M = M * torch.exp(1j * math.pi**2 *
                          (r2.view(1, -1) - r2.view(-1, 1)) / tau)

    # Factorized: sum_ij conj(u_i) M_ij u_j with u_j = exp(-i k.r_j). The
    # diagonal carries no phase and is added exactly.
    diag = M.diagonal()
    u = torch.exp(-1j * (k @ pos[:, :2].t()))
    value = ((u.conj() @ (M - torch.diag(diag))) * u).sum(dim=-1)
    value = value + diag.sum()

    scale = max(G.n_total, 1.0)
    residue = float(value.imag.abs().max()) if value.numel() > 0 else 0.0
    if residue > RESIDUE_TOL * scale:
        raise HermiticityError(f'imaginary residue {residue:.3e} of the '
                               f'interference sum exceeds tolerance')
    return value.real


def phase_matrix(positions: torch.Tensor, k, tau: float = DEFAULT_TAU,
                 include_quadratic_phase: bool = True) -> torch.Tensor:
    """Matrix :math:`P_{ij}` with :math:`\\sum_{ij} G_{ij} P_{ij}` equal to
    the interference sum at a single wavevector :obj:`k`; entries with
    :math:`i_z \\neq j_z` vanish."""
    pos = positions.to(torch.double)
    k = torch.as_tensor(k, dtype=torch.double, device=pos.device)
    same_z = positions[:, 2].view(-1, 1) == positions[:, 2].view(1, -1)
    phase = pos[:, :2] @ k
    P = torch.exp(1j * (phase.view(-1, 1) - phase.view(1, -1))) * same_z
    if include_quadratic_phase and math.isfinite(tau):
        r2 = (pos[:, :2]**2).sum(dim=-1)
        P = P * torch.exp(1j * math.pi**2 *
                          (r2.view(1, -1) - r2.view(-1, 1)) / tau)
    return P


def momentum_density(G: OneBodyDM, spec: MomentumSpec) -> float:
    """Returns :math:`\\langle n(\\vec{k}) \\rangle / f(\\vec{k})`."""
    return float(
        interference_sum(G, torch.tensor(spec.k), spec.tau,
                         spec.include_quadratic_phase))


def entanglement_bound(G: OneBodyDM, spec: MomentumSpec) -> BoundValue:
    """Lower bound :math:`E(\\vec{k}) = \\max\\{0, \\langle N \\rangle -
    \\langle n(\\vec{k}) \\rangle / f(\\vec{k})\\}` on the spatial
    entanglement of the state behind :obj:`G`.

    :rtype: :class:`BoundValue`
    """
    n_total = G.n_total
    witness = momentum_density(G, spec) - n_total
    return BoundValue(max(0.0, -witness), n_total, witness)


def bound_map(G: OneBodyDM, kx: torch.Tensor, ky: torch.Tensor,
              tau: float = DEFAULT_TAU, include_quadratic_phase: bool = True
              ) -> Tuple[torch.Tensor, torch.Tensor]:
    """Evaluates :math:`E` and the witness expectation on the grid spanned
    by :obj:`kx` and :obj:`ky`; both outputs have shape
    :obj:`[len(ky), len(kx)]`.

    :rtype: (:class:`Tensor`, :class:`Tensor`)
    """
    kx = torch.as_tensor(kx, dtype=torch.double)
    ky = torch.as_tensor(ky, dtype=torch.double)
    KY, KX = torch.meshgrid(ky, kx, indexing='ij')
    k = torch.stack([KX, KY], dim=-1)
    witness = interference_sum(G, k, tau, include_quadratic_phase) - \
        G.n_total
    return witness.neg().clamp(min=0), witness


def best_bound(G: OneBodyDM, kx: torch.Tensor, ky: torch.Tensor,
               tau: float = DEFAULT_TAU, include_quadratic_phase: bool = True
               ) -> Tuple[float, Tuple[float, float]]:
    """Largest bound over the grid and the wavevector attaining it."""
    E, _ = bound_map(G, kx, ky, tau, include_quadratic_phase)
    idx = int(E.reshape(-1).argmax())
    iy, ix = divmod(idx, E.size(1))
    return float(E[iy, ix]), (float(kx[ix]), float(ky[iy]))


def bound_map_to_csv(path, kx: torch.Tensor, ky: torch.Tensor,
                     E: torch.Tensor, witness: torch.Tensor) -> None:
    KY, KX = torch.meshgrid(torch.as_tensor(ky), torch.as_tensor(kx),
                            indexing='ij')
    write_columns(path, ['k_x', 'k_y', 'E', 'witness_expectation'],
                  [KX, KY, E, witness])


def analytic_example_bound(case: str, param) -> float:
    """Closed-form :math:`E(\\pi/a, 0)` in the far field for the example
    states: :obj:`"two_mode_psi"` (:obj:`param=N`),
    :obj:`"coherent_mixture"` (:obj:`param=alpha`) and :obj:`"symmetric"`
    (:obj:`param=N`)."""
    if case == 'two_mode_psi':
        N = int(param)
        if N < 0:
            raise ArgumentError(f'N must be nonnegative (got {N})')
        n = torch.arange(N, dtype=torch.double)
        return float(2 / (N + 1) * ((n + 1).sqrt() * (N - n).sqrt()).sum())
    if case == 'coherent_mixture':
        return 2 * abs(complex(param))**2
    if case == 'symmetric':
        N = int(param)
        if N < 0:
            raise ArgumentError(f'N must be nonnegative (got {N})')
        return float(N)
    raise ArgumentError(f'unknown example case {case!r}')


def region_average_bound(bounds: Mapping[Hashable, object],
                         region: Iterable[Hashable]) -> float:
    """Arithmetic mean of :math:`E` over a pixel region. Every term is a
    lower bound, hence so is their mean."""
    region = list(region)
    if len(region) == 0:
        raise ArgumentError('region must not be empty')
    values = []
    for pixel in region:
        if pixel not in bounds:
            raise ArgumentError(f'pixel {pixel} has not been evaluated')
        value = bounds[pixel]
        values.append(value.e_of_k if isinstance(value, BoundValue) else
                      float(value))
    return math.fsum(values) / len(values)


@dataclass
class WitnessReport:
    """Outcome of a sampled property check. :obj:`violations` lists
    :obj:`(sample, k, value)` triples below :obj:`-tol`."""
    name: str
    num_samples: int
    num_points: int
    min_value: float
    tol: float = WITNESS_TOL
    violations: List[Tuple[int, Tuple[float, float], float]] = \
        field(default_factory=list)
    notes: Dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return len(self.violations) == 0 and all(
            v == 0 for v in self.notes.values())

    def to_text(self) -> str:
        lines = [
            f'check: {self.name}',
            f'samples: {self.num_samples}',
            f'points: {self.num_points}',
            f'min_value: {self.min_value:.6e}',
            f'tolerance: {self.tol:g}',
            f'violations: {len(self.violations)}',
        ]
        lines += [f'{key}: {value}' for key, value in sorted(
            self.notes.items())]
        lines += [
            f'  sample {s} k=({k[0]:.6f}, {k[1]:.6f}) value={v:.6e}'
            for s, k, v in self.violations
        ]
        lines.append('status: ' + ('PASS' if self.passed else 'FAIL'))
        return '\n'.join(lines) + '\n'


def default_k_grid(n: int = 4) -> torch.Tensor:
    """:math:`n \\times n` wavevectors covering the first Brillouin zone,
    shape :obj:`[n * n, 2]`."""
    k = -math.pi + 2 * math.pi * (torch.arange(n, dtype=torch.double) +
                                  0.5) / n
    KY, KX = torch.meshgrid(k, k, indexing='ij')
    return torch.stack([KX.reshape(-1), KY.reshape(-1)], dim=-1)


def verify_witness_nonnegativity(L: int = 2, n_max: int = 3,
                                 trials: int = 1000,
                                 k_grid: Optional[torch.Tensor] = None,
                                 seed: int = 0, n_terms: int = 3,
                                 tau: float = DEFAULT_TAU,
                                 tol: float = WITNESS_TOL) -> WitnessReport:
    """Evaluates the witness on sampled separable states commuting with
    every local number operator; all expectations must be nonnegative.

    Args:
        L (int, optional): Number of sites. (default: :obj:`2`)
        n_max (int, optional): Largest local occupation. (default: :obj:`3`)
        trials (int, optional): Number of sampled states.
            (default: :obj:`1000`)
        k_grid (:class:`Tensor`, optional): Wavevectors :obj:`[P, 2]`.
            (default: :obj:`4 x 4` zone grid)
        seed (int, optional): Sampler seed. (default: :obj:`0`)
        n_terms (int, optional): Product terms per sample.
            (default: :obj:`3`)

    :rtype: :class:`WitnessReport`
    """
    if L > 3 or n_max > 3:
        raise ArgumentError(f'sampled checks are limited to L <= 3 and '
                            f'n_max <= 3 (got L={L}, n_max={n_max})')
    k_grid = default_k_grid() if k_grid is None else \
        torch.as_tensor(k_grid, dtype=torch.double).view(-1, 2)

    generator = torch.Generator()
    generator.manual_seed(seed)
    report = WitnessReport('witness_nonnegativity', trials, k_grid.size(0),
                           math.inf, tol)
    for trial in range(trials):
        rho = sample_separable_ssr_state(L, n_max, n_terms,
                                         generator=generator)
        G = one_body_dm(rho)
        witness = interference_sum(G, k_grid, tau) - G.n_total
        report.min_value = min(report.min_value, float(witness.min()))
        for p in (witness < -tol).nonzero().view(-1).tolist():
            report.violations.append(
                (trial, tuple(k_grid[p].tolist()), float(witness[p])))

    logger.info('witness check: %d samples x %d points, min %.3e, %d '
                'violations', trials, k_grid.size(0), report.min_value,
                len(report.violations))
    return report
