from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, \
    field_validator

from torch_witness.errors import ArgumentError
from torch_witness.io import read_json
from torch_witness.lattice import MAX_DEPTH
from torch_witness.utils import (DEFAULT_TAU, DEFAULT_TOF_TIME,
                                 DEFAULT_WAVELENGTH, RB87_CROSS_SECTION)

Config = TypeVar('Config', bound='RunConfig')


class RunConfig(BaseModel):
    """Fields shared by every command."""
    model_config = ConfigDict(extra='forbid')

    out: str = Field('out', description='Output directory.')
    seed: int = Field(0, ge=0, description='Seed of every sampler.')


class LatticeConfig(RunConfig):
    depth: float = Field(9.0, ge=0.0, le=MAX_DEPTH,
                         description='Lattice depth s in recoil energies.')
    wavelength: float = Field(DEFAULT_WAVELENGTH, gt=0.0,
                              description='Lattice wavelength in meters.')


class BandsConfig(LatticeConfig):
    n_bands: int = Field(2, ge=1)
    n_q: int = Field(128, ge=2)
    n_planewaves: int = Field(41, ge=3)
    real_extent: float = Field(10.0, gt=0.0)
    resolution: int = Field(64, ge=4)

    @field_validator('n_planewaves')
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 != 1:
            raise ValueError('must be odd')
        return value


class CalibrationConfig(LatticeConfig):
    alpha: float = Field(0.112, gt=0.0)
    sigma_alpha: float = Field(0.009, ge=0.0)
    cross_section: float = Field(RB87_CROSS_SECTION, gt=0.0)
    pixel_size: float = Field(2.78e-6, gt=0.0)
    sigma_s_rel: float = Field(0.10, ge=0.0)


class SimulateConfig(CalibrationConfig):
    sites: int = Field(2, ge=1)
    atoms: int = Field(2, ge=0)
    u_over_j: float = Field(0.0, ge=0.0)
    periodic: bool = True
    state: Literal['ground', 'thermal', 'fock'] = 'ground'
    temperature: float = Field(0.0, ge=0.0,
                               description='Temperature in units of J.')
    total_atoms: Optional[float] = Field(
        None, gt=0.0,
        description='Scale the one-body density matrix to this atom number, '
        'as for identical independent tubes.')
    frames: int = Field(40, ge=1)
    tof_time: float = Field(DEFAULT_TOF_TIME, gt=0.0)
    approximation: Literal['exact', 'stationary_phase', 'far_field'] = 'exact'
    grid_points: int = Field(512, ge=16)
    height: int = Field(401, ge=7)
    width: int = Field(401, ge=7)
    mu0: float = 0.05
    noise: float = Field(0.01, ge=0.0)
    format: Literal['olif', 'csv'] = 'olif'


class AnalyzeConfig(RunConfig):
    stack: str = Field(..., description='Stack directory or manifest.')
    region: Optional[List[Tuple[int, int]]] = None
    k_hat: Optional[Tuple[float, float]] = None
    box: int = Field(5, ge=1)
    symmetry: bool = True
    monte_carlo_draws: int = Field(0, ge=0)

    @field_validator('box')
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 != 1:
            raise ValueError('must be odd')
        return value


class ExamplesConfig(RunConfig):
    max_atoms: int = Field(10, ge=1, le=40)
    alphas: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    tol: float = Field(1e-9, gt=0.0)
    dump_states: bool = Field(
        False,
        description='Also write every example state as row, col, re, im '
        'CSV under states/.')


class ReproduceConfig(RunConfig):
    sites: int = Field(3, ge=2, le=8)
    atoms: int = Field(3, ge=1)
    periodic: bool = True
    tau: float = Field(DEFAULT_TAU, gt=0.0)
    u_over_j: List[float] = Field(
        default_factory=lambda: [0.0, 2.0, 5.0, 10.0, 20.0, 40.0])
    temperatures: List[float] = Field(
        default_factory=lambda: [0.1, 0.5, 1.0, 2.0, 5.0])
    thermal_u_over_j: float = Field(2.0, ge=0.0)

    @field_validator('u_over_j', 'temperatures')
    @classmethod
    def _nonnegative(cls, values: List[float]) -> List[float]:
        if any(v < 0 for v in values):
            raise ValueError('entries must be nonnegative')
        return values


class VerifyConfig(RunConfig):
    sites: int = Field(2, ge=1, le=3)
    n_max: int = Field(3, ge=1, le=3)
    trials: int = Field(1000, ge=1)
    n_states: int = Field(100, ge=1)
    n_channels: int = Field(200, ge=1)
    n_terms: int = Field(3, ge=1)
    tau: float = Field(DEFAULT_TAU, gt=0.0)


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        field = '.'.join(str(loc) for loc in item['loc'])
        parts.append(f'{field}: {item["msg"]}')
    return '; '.join(parts)


def load_config(model: Type[Config], path: Optional[str] = None,
                overrides: Optional[Dict[str, Any]] = None) -> Config:
    """Merges an optional JSON file with command-line overrides (which win)
    and validates the result.

    :rtype: :class:`RunConfig`
    """
    values: Dict[str, Any] = {}
    if path is not None:
        values = read_json(path)
        if not isinstance(values, dict):
            raise ArgumentError(f'{path}: configuration must be an object')
    values.update({k: v for k, v in (overrides or {}).items()})
    try:
        return model.model_validate(values)
    except ValidationError as e:
        raise ArgumentError(f'invalid configuration: {_describe(e)}') from e
