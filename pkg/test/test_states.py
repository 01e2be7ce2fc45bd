import math

import pytest
import torch
from torch_witness import (AccuracyError, ArgumentError, DensityOperator,
                           HermiticityError, OneBodyDM, StateVector,
                           build_coherent_mixture, build_symmetric_state,
                           build_two_mode_psi, chain_positions,
                           data_hiding_success, make_fock_basis,
                           one_body_dm, sample_separable_ssr_state)
from torch_witness.io import read_matrix
from torch_witness.states import (coherent_product_state, fock_state, mix,
                                  product_diagonal_state)

from .utils import brute_force_correlator, random_state


def test_state_validation():
    basis = make_fock_basis(2, 1)
    with pytest.raises(ArgumentError):
        StateVector(basis, torch.ones(2, dtype=torch.cdouble))
    with pytest.raises(ArgumentError):
        DensityOperator(basis, torch.eye(2, dtype=torch.cdouble))
    with pytest.raises(HermiticityError):
        DensityOperator(basis, torch.tensor([[0.5, 1], [0, 0.5]],
                                            dtype=torch.cdouble))
    with pytest.raises(HermiticityError):
        OneBodyDM(torch.tensor([[1, 1j], [1j, 1]], dtype=torch.cdouble),
                  chain_positions(2))


@pytest.mark.parametrize('N', [0, 1, 3, 6])
def test_two_mode_psi(N):
    psi = build_two_mode_psi(N)
    assert psi.basis.dim == N + 1
    assert float(psi.amplitudes.norm()) == pytest.approx(1)
    assert torch.allclose(psi.amplitudes.abs(),
                          torch.full((N + 1, ), (N + 1)**-0.5,
                                     dtype=torch.double))
    if N == 3:
        assert psi.amplitude((1, 2)) == pytest.approx(0.5)

    G = one_body_dm(psi).matrix
    expected = sum(math.sqrt(n + 1) * math.sqrt(N - n)
                   for n in range(N)) / (N + 1)
    assert complex(G[0, 1]) == pytest.approx(expected, abs=1e-12)
    assert float(G.diagonal().real.sum()) == pytest.approx(N)


def test_symmetric_state():
    psi = build_symmetric_state(2, 1)
    assert torch.allclose(psi.amplitudes.real,
                          torch.full((2, ), 2**-0.5, dtype=torch.double))

    psi = build_symmetric_state(2, 4)
    for n in range(5):
        assert psi.amplitude((n, 4 - n)) == \
            pytest.approx(math.sqrt(math.comb(4, n) / 16))

    psi = build_symmetric_state(3, 3)
    assert psi.amplitude((1, 2, 0)) == pytest.approx(psi.amplitude((0, 1, 2)))
    assert psi.amplitude((3, 0, 0)) == pytest.approx(psi.amplitude((0, 0, 3)))
    G = one_body_dm(psi).matrix
    assert torch.allclose(G, torch.ones(3, 3, dtype=torch.cdouble),
                          atol=1e-12)


def test_fock_state():
    basis = make_fock_basis(2, 2)
    G = one_body_dm(fock_state(basis, (1, 1))).matrix
    assert torch.allclose(G, torch.eye(2, dtype=torch.cdouble))


def test_coherent_mixture():
    rho = build_coherent_mixture(0)
    assert rho.basis.dim == 1
    assert complex(rho.matrix[0, 0]) == 1

    rho = build_coherent_mixture(1.0, n_max=12)
    total = rho.basis.total_numbers().to(torch.double)
    mean = float((rho.matrix.diagonal().real * total).sum())
    assert mean == pytest.approx(2.0, abs=1e-5)
    N = torch.diag(total).to(torch.cdouble)
    assert torch.equal(rho.matrix @ N - N @ rho.matrix,
                       torch.zeros_like(rho.matrix))
    assert rho.is_valid()

    with pytest.raises(AccuracyError):
        build_coherent_mixture(2.0, n_max=3)


@pytest.mark.parametrize('L,N,seed', [(2, 2, 0), (3, 2, 1), (3, 3, 2),
                                      (2, 3, 3)])
def test_one_body_dm_brute_force(L, N, seed):
    psi = random_state(L, N, seed)
    G = one_body_dm(psi).matrix
    assert torch.equal(G, G.mH)
    assert torch.equal(G.diagonal().imag, torch.zeros(L, dtype=torch.double))
    for i in range(L):
        for j in range(L):
            expected = brute_force_correlator(psi.basis, psi.amplitudes, i,
                                              j)
            assert abs(complex(G[i, j]) - expected) < 1e-12

    from_rho = one_body_dm(psi.to_density()).matrix
    assert torch.allclose(from_rho, G, atol=1e-12)
    eigenvalues = torch.linalg.eigvalsh(G)
    assert float(eigenvalues.min()) > -1e-12


def test_separable_sampler():
    rho = sample_separable_ssr_state(2, 3, n_terms=3, seed=7)
    assert rho.basis.dim == 16
    assert torch.equal(rho.matrix, torch.diag(rho.matrix.diagonal()))
    assert rho.is_valid()
    assert complex(rho.matrix.trace()) == pytest.approx(1)

    occ = rho.basis.occupations.to(torch.cdouble)
    for i in range(2):
        n_i = torch.diag(occ[:, i])
        assert torch.equal(rho.matrix @ n_i, n_i @ rho.matrix)

    again = sample_separable_ssr_state(2, 3, n_terms=3, seed=7)
    assert torch.equal(rho.matrix, again.matrix)
    other = sample_separable_ssr_state(2, 3, n_terms=3, seed=8)
    assert not torch.equal(rho.matrix, other.matrix)

    mixed = mix([rho, other], [0.3, 0.7])
    assert mixed.is_valid()
    assert torch.equal(mixed.matrix, torch.diag(mixed.matrix.diagonal()))

    with pytest.raises(ArgumentError):
        sample_separable_ssr_state(2, 3, n_terms=0)


def test_product_diagonal_state():
    rho = sample_separable_ssr_state(2, 2, n_terms=1, seed=0)
    local = torch.zeros(2, 3, dtype=torch.double)
    local[0, 2] = local[1, 1] = 1
    diag = product_diagonal_state(rho.basis, local)
    assert diag.sum() == 1
    assert diag[rho.basis.index((2, 1))] == 1


def test_data_hiding():
    assert data_hiding_success(build_symmetric_state(2, 1)) == \
        pytest.approx(0.5)
    assert data_hiding_success(build_symmetric_state(2, 2)) == \
        pytest.approx(0.5 * (2**-0.5 + 0.5)**2)
    assert data_hiding_success(build_symmetric_state(2, 2)) == \
        pytest.approx(0.72855, abs=1e-5)

    p = [data_hiding_success(build_symmetric_state(2, N))
         for N in range(1, 41)]
    assert all(b > a for a, b in zip(p[:-1], p[1:]))
    assert 0.95 < p[-1] < 1

    with pytest.raises(ArgumentError):
        data_hiding_success(coherent_product_state(0.5, 4))
    with pytest.raises(ArgumentError):
        data_hiding_success(build_symmetric_state(3, 2))


def test_one_body_dm_to_csv(tmp_path):
    G = one_body_dm(build_two_mode_psi(3))
    G.to_csv(tmp_path / 'G.csv')
    assert torch.allclose(read_matrix(tmp_path / 'G.csv'), G.matrix,
                          atol=1e-15)


def test_states_to_csv(tmp_path):
    psi = random_state(3, 2, 5)
    psi.to_csv(tmp_path / 'psi.csv')
    out = read_matrix(tmp_path / 'psi.csv')
    assert out.size() == (psi.basis.dim, 1)
    assert torch.allclose(out.view(-1), psi.amplitudes, atol=1e-15)

    rho = build_coherent_mixture(1.0)
    rho.to_csv(tmp_path / 'rho.csv')
    assert torch.allclose(read_matrix(tmp_path / 'rho.csv'), rho.matrix,
                          atol=1e-15)
