import math

import pytest
import torch
from torch_witness import (ArgumentError, BoseHubbardParams, CapacityError,
                           bose_hubbard_ground_state, build_symmetric_state,
                           MomentumSpec, corner_momentum, entanglement_bound,
                           one_body_dm, thermal_one_body_dm, thermal_state)
from torch_witness.hubbard import gibbs_weights, hubbard_hamiltonian
from torch_witness import make_fock_basis, to_dense


def test_params():
    p = BoseHubbardParams(J=1.0, U=2.0, L=3, N=3)
    assert p.site_bonds == [(0, 1), (1, 2), (2, 0)]
    assert p.site_positions.size() == (3, 3)
    with pytest.raises(ArgumentError):
        BoseHubbardParams(J=-1.0, U=0.0, L=2, N=2)
    with pytest.raises(ArgumentError):
        BoseHubbardParams(J=1.0, U=0.0, L=2, N=2, bonds=[(0, 2)])


def test_hamiltonian():
    p = BoseHubbardParams(J=1.0, U=1.0, L=2, N=2)
    basis = make_fock_basis(2, 2)
    H = to_dense(*hubbard_hamiltonian(basis, p), basis.dim, basis.dim)
    s2 = math.sqrt(2)
    expected = torch.tensor([[1, -s2, 0], [-s2, 0, -s2], [0, -s2, 1]],
                            dtype=torch.double)
    assert torch.allclose(H, expected)


@pytest.mark.parametrize('U', [0.0, 1.0, 3.0])
def test_two_site_energy(U):
    p = BoseHubbardParams(J=1.0, U=U, L=2, N=2)
    state, energy = bose_hubbard_ground_state(p, return_energy=True)
    assert energy == pytest.approx((U - math.sqrt(U**2 + 16)) / 2, abs=1e-9)
    assert float(state.amplitudes.real[0]) > 0


@pytest.mark.parametrize('L,N', [(2, 2), (3, 3), (2, 5)])
def test_noninteracting_ground_state(L, N):
    state = bose_hubbard_ground_state(BoseHubbardParams(1.0, 0.0, L, N))
    symmetric = build_symmetric_state(L, N)
    overlap = (symmetric.amplitudes.conj() * state.amplitudes).sum()
    assert abs(complex(overlap)) == pytest.approx(1, abs=1e-8)


def test_atomic_limit():
    state = bose_hubbard_ground_state(BoseHubbardParams(0.0, 1.0, 3, 3))
    assert state.amplitude((1, 1, 1)) == pytest.approx(1)
    G = one_body_dm(state).matrix
    assert torch.allclose(G, torch.eye(3, dtype=torch.cdouble), atol=1e-12)


def test_sparse_solver():
    p = BoseHubbardParams(J=1.0, U=2.0, L=3, N=4)
    dense, e_dense = bose_hubbard_ground_state(p, return_energy=True)
    sparse, e_sparse = bose_hubbard_ground_state(p, dense_limit=1,
                                                 return_energy=True)
    assert e_sparse == pytest.approx(e_dense, abs=1e-9)
    assert torch.allclose(sparse.amplitudes, dense.amplitudes, atol=1e-6)

    # Variational: the Rayleigh quotient never undercuts the solver.
    basis = dense.basis
    H = to_dense(*hubbard_hamiltonian(basis, p), basis.dim, basis.dim)
    v = dense.amplitudes.real
    v = v - 1e-3 * (H @ v - e_dense * v)
    assert float(v @ H @ v / (v @ v)) >= e_dense - 1e-9


def test_capacity():
    with pytest.raises(CapacityError):
        bose_hubbard_ground_state(BoseHubbardParams(1.0, 1.0, 12, 12),
                                  cap=1000)
    with pytest.raises(CapacityError):
        thermal_state(BoseHubbardParams(1.0, 1.0, 8, 8), T=1.0)


def test_gibbs_weights():
    energies = torch.tensor([0.0, 1.0, 2.0], dtype=torch.double)
    assert gibbs_weights(energies, 0.0).tolist() == [1, 0, 0]
    weights = gibbs_weights(energies, 1.0)
    assert float(weights.sum()) == pytest.approx(1)
    assert float(weights[1] / weights[0]) == pytest.approx(math.exp(-1))


def test_thermal_limits():
    p = BoseHubbardParams(J=1.0, U=2.0, L=3, N=3)
    ground = one_body_dm(bose_hubbard_ground_state(p)).matrix
    assert torch.allclose(thermal_one_body_dm(p, 0.0).matrix, ground,
                          atol=1e-6)
    assert torch.allclose(thermal_one_body_dm(p, 1e-3).matrix, ground,
                          atol=1e-6)

    hot = thermal_one_body_dm(p, 1e5).matrix
    assert torch.equal(hot, hot.mH)
    off = hot - torch.diag(hot.diagonal())
    assert float(off.abs().max()) < 1e-3
    assert torch.allclose(hot.diagonal().real,
                          torch.ones(3, dtype=torch.double), atol=1e-3)

    rho = thermal_state(p, 1.0)
    assert torch.allclose(one_body_dm(rho).matrix,
                          thermal_one_body_dm(p, 1.0).matrix, atol=1e-10)


def test_thermal_coherence_decreases():
    p = BoseHubbardParams(J=1.0, U=2.0, L=3, N=3)
    temperatures = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
    coherence = [
        float(thermal_one_body_dm(p, T).matrix[0, 1].abs())
        for T in temperatures
    ]
    assert all(b <= a + 1e-12 for a, b in zip(coherence[:-1], coherence[1:]))

    with pytest.raises(ArgumentError):
        thermal_one_body_dm(p)
    assert torch.allclose(
        thermal_one_body_dm(BoseHubbardParams(1.0, 2.0, 3, 3,
                                              temperature=1.0)).matrix,
        thermal_one_body_dm(p, 1.0).matrix)


def _corner_bound(p, G):
    k_hat = corner_momentum(p.L, p.periodic)
    return entanglement_bound(G, MomentumSpec(k_hat)).e_of_k


def test_bound_falls_with_interaction():
    bounds = []
    for u in [0.0, 2.0, 5.0, 10.0, 20.0, 40.0]:
        p = BoseHubbardParams(J=1.0, U=u, L=3, N=3)
        bounds.append(_corner_bound(p, one_body_dm(
            bose_hubbard_ground_state(p))))
    assert all(b <= a + 1e-9 for a, b in zip(bounds[:-1], bounds[1:]))
    assert bounds[0] == pytest.approx(3, rel=1e-3)
    assert bounds[-1] < 0.5 * bounds[0]


def test_bound_falls_with_temperature():
    p = BoseHubbardParams(J=1.0, U=2.0, L=3, N=3)
    bounds = [
        _corner_bound(p, thermal_one_body_dm(p, T))
        for T in [0.1, 0.5, 1.0, 2.0, 5.0]
    ]
    assert all(b <= a + 1e-9 for a, b in zip(bounds[:-1], bounds[1:]))
    assert bounds[-1] < 0.5 * bounds[0]
