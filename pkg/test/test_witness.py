import math

import pytest
import torch
from torch_witness import (ArgumentError, BoundValue, MomentumSpec, OneBodyDM,
                           analytic_example_bound, best_bound, bound_map,
                           build_coherent_mixture, build_symmetric_state,
                           build_two_mode_psi, bose_hubbard_ground_state,
                           BoseHubbardParams, corner_momentum,
                           entanglement_bound, momentum_density, one_body_dm,
                           region_average_bound, StateVector,
                           verify_witness_nonnegativity)
from torch_witness.io import read_columns
from torch_witness.states import coherent_product_state, fock_state
from torch_witness.witness import (bound_map_to_csv, default_k_grid,
                                   interference_sum, phase_matrix)

from .utils import brute_force_correlator, random_state

FAR = math.inf


def test_momentum_spec():
    spec = MomentumSpec((1, 2))
    assert spec.k == (1.0, 2.0)
    assert spec.tau == 1.8e3
    with pytest.raises(ArgumentError):
        MomentumSpec((0, 0), tau=0.0)


@pytest.mark.parametrize('L', [1, 2, 3])
def test_fock_state_has_no_bound(L):
    G = one_body_dm(bose_hubbard_ground_state(BoseHubbardParams(0.0, 1.0, L,
                                                                L)))
    for k in [(0.0, 0.0), (math.pi, math.pi), (0.3, -1.1)]:
        assert momentum_density(G, MomentumSpec(k)) == L
        bound = entanglement_bound(G, MomentumSpec(k))
        assert bound.e_of_k == 0
        assert bound.witness_expectation == 0


def test_symmetric_state_cancels():
    G = one_body_dm(build_symmetric_state(2, 1))
    spec = MomentumSpec((math.pi, 0), tau=FAR)
    assert momentum_density(G, spec) == pytest.approx(0, abs=1e-12)
    assert entanglement_bound(G, spec).e_of_k == pytest.approx(1)


@pytest.mark.parametrize('L', [2, 3])
def test_superfluid_at_corner(L):
    p = BoseHubbardParams(1.0, 0.0, L, L)
    G = one_body_dm(bose_hubbard_ground_state(p))
    bound = entanglement_bound(G, MomentumSpec(corner_momentum(L)))
    assert bound.e_of_k / L >= 0.999
    assert bound.e_of_k <= bound.n_total + 1e-9
    if L == 2:
        assert bound.e_of_k == pytest.approx(2, abs=2e-3)


def test_two_mode_bound():
    G = one_body_dm(build_two_mode_psi(2))
    bound = entanglement_bound(G, MomentumSpec((math.pi, 0), tau=FAR))
    assert bound.e_of_k == pytest.approx(4 * math.sqrt(2) / 3, abs=1e-12)
    assert bound.n_total == pytest.approx(2)
    assert bound.witness_expectation == pytest.approx(-bound.e_of_k)


def test_analytic_examples():
    assert analytic_example_bound('two_mode_psi', 1) == pytest.approx(1.0)
    assert analytic_example_bound('two_mode_psi', 0) == 0
    assert analytic_example_bound('coherent_mixture', 1.0) == 2.0
    assert analytic_example_bound('coherent_mixture', 0.5j) == 0.5
    assert analytic_example_bound('symmetric', 7) == 7.0
    with pytest.raises(ArgumentError):
        analytic_example_bound('unknown', 1)
    with pytest.raises(ArgumentError):
        analytic_example_bound('symmetric', -1)

    spec = MomentumSpec((math.pi, 0), tau=FAR)
    for N in range(1, 11):
        for case, state in [('two_mode_psi', build_two_mode_psi(N)),
                            ('symmetric', build_symmetric_state(2, N))]:
            bound = entanglement_bound(one_body_dm(state), spec)
            assert bound.e_of_k == pytest.approx(
                analytic_example_bound(case, N), abs=1e-9)
    for alpha in [0.5, 1.0, 2.0]:
        rho = build_coherent_mixture(alpha, tol=1e-9)
        bound = entanglement_bound(one_body_dm(rho), spec)
        assert bound.e_of_k == pytest.approx(
            analytic_example_bound('coherent_mixture', alpha), abs=1e-5)


def test_coherent_product_is_detected():
    alpha = 1.0
    G = one_body_dm(coherent_product_state(alpha, 14))
    bound = entanglement_bound(G, MomentumSpec((math.pi, 0), tau=FAR))
    assert bound.witness_expectation == pytest.approx(-2 * alpha**2,
                                                      abs=1e-5)


@pytest.mark.parametrize('seed', range(50))
def test_brute_force_equivalence(seed):
    L, N = 2 + seed % 2, 1 + seed % 3
    psi = random_state(L, N, seed)
    G = one_body_dm(psi)
    gen = torch.Generator().manual_seed(seed)
    for _ in range(3):
        k = tuple((2 * math.pi * torch.rand(2, generator=gen) -
                   math.pi).tolist())
        P = phase_matrix(G.positions, k)
        S = sum(
            complex(P[i, j]) *
            brute_force_correlator(psi.basis, psi.amplitudes, i, j)
            for i in range(L) for j in range(L))
        expected = max(0.0, N - S.real)
        assert abs(S.imag) < 1e-10
        assert entanglement_bound(G, MomentumSpec(k)).e_of_k == \
            pytest.approx(expected, abs=1e-10)


def test_invariances():
    psi = random_state(3, 2, 11)
    G = one_body_dm(psi)
    spec = MomentumSpec((0.7, 2.1))
    reference = entanglement_bound(G, spec).e_of_k

    phased = one_body_dm(StateVector(psi.basis, psi.amplitudes * 1j))
    assert entanglement_bound(phased, spec).e_of_k == \
        pytest.approx(reference, abs=1e-12)

    perm = torch.tensor([2, 0, 1])
    relabeled = OneBodyDM(G.matrix[perm][:, perm], G.positions[perm])
    assert entanglement_bound(relabeled, spec).e_of_k == \
        pytest.approx(reference, abs=1e-12)


def test_zero_momentum_sum():
    G = one_body_dm(random_state(3, 3, 4))
    spec = MomentumSpec((0, 0), tau=FAR)
    assert momentum_density(G, spec) == \
        pytest.approx(float(G.matrix.sum().real), abs=1e-12)


def test_layers_do_not_interfere():
    G = OneBodyDM(torch.ones(2, 2, dtype=torch.cdouble),
                  torch.tensor([[0, 0, 0], [0, 0, 1]]))
    spec = MomentumSpec((math.pi, 0), tau=FAR)
    assert momentum_density(G, spec) == 2
    assert entanglement_bound(G, spec).e_of_k == 0


def test_quadratic_phase_flag():
    G = one_body_dm(build_symmetric_state(2, 2))
    k = torch.tensor([math.pi, math.pi], dtype=torch.double)
    with_phase = interference_sum(G, k, tau=10.0)
    without = interference_sum(G, k, tau=10.0,
                               include_quadratic_phase=False)
    assert float(without) == pytest.approx(0, abs=1e-12)
    assert float(with_phase) == pytest.approx(2 - 2 * math.cos(math.pi**2 /
                                                               10), abs=1e-12)


def test_bound_map(tmp_path):
    G = one_body_dm(build_two_mode_psi(2))
    kx = torch.tensor([0, math.pi / 2, math.pi], dtype=torch.double)
    ky = torch.tensor([0, 1], dtype=torch.double)
    E, witness = bound_map(G, kx, ky, tau=FAR)
    assert E.size() == (2, 3)
    assert torch.equal(E, witness.neg().clamp(min=0))
    assert (E <= G.n_total + 1e-9).all()

    value, k = best_bound(G, kx, ky, tau=FAR)
    assert value == pytest.approx(4 * math.sqrt(2) / 3)
    assert k[0] == pytest.approx(math.pi)

    bound_map_to_csv(tmp_path / 'map.csv', kx, ky, E, witness)
    table = read_columns(tmp_path / 'map.csv')
    assert sorted(table) == ['E', 'k_x', 'k_y', 'witness_expectation']
    assert table['E'].numel() == 6


def test_region_average():
    bounds = {(0, 0): BoundValue(1.0, 2.0, -1.0), (0, 1): 3.0, (1, 1): 2.0}
    assert region_average_bound(bounds, [(0, 0)]) == 1.0
    assert region_average_bound(bounds, bounds.keys()) == pytest.approx(2.0)
    assert region_average_bound({p: 0.5 for p in bounds}, bounds) == 0.5
    assert region_average_bound(bounds, bounds) <= 3.0
    with pytest.raises(ArgumentError):
        region_average_bound(bounds, [])
    with pytest.raises(ArgumentError):
        region_average_bound(bounds, [(5, 5)])


def test_default_k_grid():
    k = default_k_grid()
    assert k.size() == (16, 2)
    assert (k.abs() < math.pi).all()


def test_verify_witness_nonnegativity():
    report = verify_witness_nonnegativity(L=2, n_max=3, trials=1000)
    assert report.num_samples == 1000
    assert report.num_points == 16
    assert report.passed
    assert report.min_value >= -1e-9
    assert 'status: PASS' in report.to_text()

    report = verify_witness_nonnegativity(L=3, n_max=2, trials=20, seed=3)
    assert report.passed

    with pytest.raises(ArgumentError):
        verify_witness_nonnegativity(L=4)


def test_product_fock_witness_is_zero():
    basis = build_symmetric_state(2, 2).basis
    G = one_body_dm(fock_state(basis, (2, 0)))
    for k in default_k_grid():
        bound = entanglement_bound(G, MomentumSpec(tuple(k.tolist())))
        assert bound.witness_expectation == 0
