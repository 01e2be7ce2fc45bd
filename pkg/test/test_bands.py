import math

import pytest
import torch
from torch_witness import (ArgumentError, LatticeParams, bands_to_csv,
                           solve_band_structure)
from torch_witness.bands import bloch_hamiltonian, midpoint_quasimomenta
from torch_witness.io import read_columns


def test_midpoint_quasimomenta():
    q = midpoint_quasimomenta(8)
    assert q.numel() == 8
    assert (q.abs() < math.pi).all()
    assert torch.allclose(q, -q.flip(0))


def test_bloch_hamiltonian():
    H = bloch_hamiltonian(4.0, torch.tensor([0.0], dtype=torch.double), 5)
    assert H.size() == (1, 5, 5)
    assert torch.equal(H, H.transpose(1, 2))
    assert H[0].diagonal().tolist() == [16, 4, 0, 4, 16]
    assert H[0, 1, 2] == -1 and H[0, 0, 2] == 0


def test_free_particle():
    q = torch.tensor([0.0, 0.5, -math.pi / 2], dtype=torch.double)
    spectrum = solve_band_structure(LatticeParams(0.0), n_bands=2,
                                    quasimomenta=q)
    assert spectrum.band_energies[0, 0] == pytest.approx(0, abs=1e-12)
    assert torch.allclose(spectrum.band_energies[:, 0], (q / math.pi)**2,
                          atol=1e-12)
    assert torch.allclose(spectrum.band_energies[:, 1],
                          (2 - (q / math.pi).abs())**2, atol=1e-12)


def test_weak_lattice_shift():
    # Second order in s at q = 0: the ground level sinks by s^2 / 32.
    q = torch.tensor([0.0], dtype=torch.double)
    spectrum = solve_band_structure(LatticeParams(0.1), n_bands=1,
                                    quasimomenta=q)
    assert float(spectrum.band_energies[0, 0]) == pytest.approx(
        -0.1**2 / 32, rel=1e-2)


@pytest.mark.parametrize('depth', [0.0, 5.0, 15.0, 30.0])
def test_energies_sorted(depth):
    spectrum = solve_band_structure(LatticeParams(depth), n_bands=3, n_q=16)
    assert spectrum.num_bands == 3
    assert spectrum.num_planewaves == 41
    assert spectrum.bloch_coefficients.size() == (16, 3, 41)
    assert (spectrum.band_energies.diff(dim=-1) >= 0).all()


def test_deep_lattice_gap():
    q = torch.tensor([0.0], dtype=torch.double)
    spectrum = solve_band_structure(LatticeParams(30.0), n_bands=2,
                                    n_planewaves=61, quasimomenta=q)
    gap = float(spectrum.band_energies[0, 1] - spectrum.band_energies[0, 0])
    assert abs(gap - 2 * math.sqrt(30)) / (2 * math.sqrt(30)) < 0.1


def test_convergence():
    params = LatticeParams(30.0)
    coarse = solve_band_structure(params, n_bands=1, n_q=16)
    fine = solve_band_structure(params, n_bands=1, n_q=16, n_planewaves=81)
    assert torch.allclose(coarse.band_energies, fine.band_energies,
                          atol=1e-9, rtol=0)


def test_invalid_sizes():
    params = LatticeParams(9.0)
    with pytest.raises(ArgumentError):
        solve_band_structure(params, n_planewaves=40)
    with pytest.raises(ArgumentError):
        solve_band_structure(params, n_bands=20, n_planewaves=41)
    with pytest.raises(ArgumentError):
        solve_band_structure(params, n_bands=0)
    with pytest.raises(ArgumentError):
        solve_band_structure(params, n_q=0)


def test_bands_to_csv(tmp_path):
    spectrum = solve_band_structure(LatticeParams(9.0), n_bands=2, n_q=8)
    path = tmp_path / 'bands.csv'
    bands_to_csv(spectrum, path)
    table = read_columns(path)
    assert sorted(table) == ['band_0', 'band_1', 'q']
    assert torch.allclose(table['band_1'], spectrum.band_energies[:, 1])
