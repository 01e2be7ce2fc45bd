import json
import os
import os.path as osp
import struct
from typing import Dict, Sequence

import numpy as np
import torch

from torch_witness.errors import ManifestError

FRAME_MAGIC = b'OLIF'
FRAME_HEADER = struct.Struct('<4sIII')


def _makedirs(path) -> None:
    dirname = osp.dirname(osp.abspath(path))
    os.makedirs(dirname, exist_ok=True)


def _to_numpy(x) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().numpy()
    return np.asarray(x)


def write_columns(path, names: Sequence[str], columns: Sequence) -> None:
    """Writes equally long columns as a CSV file with a header row."""
    columns = [_to_numpy(c).reshape(-1) for c in columns]
    assert len(names) == len(columns)
    assert len(set(c.shape[0] for c in columns)) <= 1
    _makedirs(path)
    data = np.stack(columns, axis=1) if columns else np.zeros((0, 0))
    np.savetxt(path, data, delimiter=',', header=','.join(names),
               comments='', fmt='%.17g')


def read_columns(path) -> Dict[str, torch.Tensor]:
    with open(path, 'r') as f:
        names = f.readline().strip().split(',')
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return {
        name: torch.from_numpy(np.ascontiguousarray(data[:, i]))
        for i, name in enumerate(names)
    }


def write_matrix(path, matrix: torch.Tensor) -> None:
    """Writes a (complex) matrix in the sparse CSV form
    :obj:`row, col, re, im`, listing every entry."""
    matrix = matrix.detach().cpu().to(torch.cdouble)
    rows, cols = matrix.size()
    row = torch.arange(rows).repeat_interleave(cols)
    col = torch.arange(cols).repeat(rows)
    value = matrix.reshape(-1)
    write_columns(path, ['row', 'col', 're', 'im'],
                  [row, col, value.real, value.imag])


def read_matrix(path) -> torch.Tensor:
    table = read_columns(path)
    row, col = table['row'].long(), table['col'].long()
    out = torch.zeros(int(row.max()) + 1, int(col.max()) + 1,
                      dtype=torch.cdouble)
    out[row, col] = torch.complex(table['re'], table['im'])
    return out


def write_frame_raw(path, mu: torch.Tensor) -> None:
    """Writes a frame as the 16 byte header (:obj:`"OLIF"`, width, height,
    reserved) followed by little-endian float32 values in row-major order."""
    height, width = mu.size()
    _makedirs(path)
    with open(path, 'wb') as f:
        f.write(FRAME_HEADER.pack(FRAME_MAGIC, width, height, 0))
        f.write(_to_numpy(mu).astype('<f4').tobytes(order='C'))


def read_frame_raw(path) -> torch.Tensor:
    with open(path, 'rb') as f:
        header = f.read(FRAME_HEADER.size)
        if len(header) != FRAME_HEADER.size:
            raise ManifestError(f'{path}: truncated frame header')
        magic, width, height, _ = FRAME_HEADER.unpack(header)
        if magic != FRAME_MAGIC:
            raise ManifestError(f'{path}: bad magic {magic!r}')
        payload = f.read()
    if len(payload) != 4 * width * height:
        raise ManifestError(f'{path}: expected {width * height} values, '
                            f'found {len(payload) // 4}')
    data = np.frombuffer(payload, dtype='<f4').reshape(height, width)
    return torch.from_numpy(data.astype(np.float64))


def write_frame_csv(path, mu: torch.Tensor) -> None:
    _makedirs(path)
    np.savetxt(path, _to_numpy(mu).astype(np.float32), delimiter=',',
               fmt='%.9g')


def read_frame_csv(path) -> torch.Tensor:
    try:
        data = np.loadtxt(path, delimiter=',', ndmin=2)
    except ValueError as e:
        raise ManifestError(f'{path}: {e}') from e
    return torch.from_numpy(data.astype(np.float64))


def write_json(path, obj) -> None:
    _makedirs(path)
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path) -> Dict:
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f'{path}: {e}') from e
