"""Output files for traces, records, fields and reports.

Every CSV starts with '#' comment lines carrying the config hash and seed;
every JSON document starts with a "provenance" object holding the same.
Floats use 17 significant digits and nothing time-dependent is written.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from lib.fields import AnnulusGrid, VelocityField

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'

FIELD_COLUMNS = ('r', 'theta', 'ur', 'utheta')
TRACE_COLUMNS = ('t', 'alpha1', 'rhs')
RECORD_COLUMNS = ('t', 'alpha1', 'alpha2', 'alpha3', 'eta', 'rhs', 'residual')
DIAGNOSTIC_COLUMNS = ('t', 'rhs_raw', 'energy', 'max_interior_div', 'pressure_boundary_residual')


class Storage:
    """Handles writing and reading run outputs under one directory."""

    def __init__(self, output_dir: str, config_sha256: str = "", seed: int = 0):
        """Initialize storage.

        Args:
            output_dir: Directory for output files (created if missing)
            config_sha256: Hash of the resolved scenario, written into headers
            seed: Seed of the run, written into headers
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.config_sha256 = config_sha256
        self.seed = int(seed)

    @property
    def provenance(self) -> Dict[str, Any]:
        return {'config_sha256': self.config_sha256, 'seed': self.seed}

    def get_path(self, name: str) -> Path:
        """Get path for an output file.

        Args:
            name: File name relative to the output directory

        Returns:
            Path inside output_dir
        """
        return self.output_dir / name

    def write_csv(self, name: str, columns: Sequence[str], rows: np.ndarray) -> Path:
        """Write a numeric table with the provenance header.

        Args:
            name: File name
            columns: Column names for the header row
            rows: 2-D array, one row per record

        Returns:
            Path of the written file
        """
        rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
        header = "\n".join([
            f"# config_sha256: {self.config_sha256}",
            f"# seed: {self.seed}",
            ",".join(columns),
        ])
        path = self.get_path(name)
        np.savetxt(path, rows, fmt=FLOAT_FORMAT, delimiter=",", header=header, comments="")
        logger.debug("wrote %d rows to %s", len(rows), path)
        return path

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        """Write a JSON document with a leading provenance key.

        Args:
            name: File name
            data: Payload; a 'provenance' key in it is replaced

        Returns:
            Path of the written file
        """
        payload = {'provenance': self.provenance}
        payload.update({k: v for k, v in data.items() if k != 'provenance'})
        path = self.get_path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_jsonable(payload), f, indent=2, ensure_ascii=False)
            f.write("\n")
        return path

    def save_field(self, name: str, f: VelocityField, g: AnnulusGrid) -> Path:
        """Write a field as r,theta,ur,utheta rows (theta fastest) plus a JSON grid descriptor."""
        rr, tt = g.mesh()
        rows = np.column_stack([rr.ravel(), tt.ravel(), f.ur.ravel(), f.utheta.ravel()])
        path = self.write_csv(name, FIELD_COLUMNS, rows)
        self.write_json(Path(name).with_suffix('.json').name,
                        {'grid': g.to_dict(), 'wall': f.wall, 'lambda0': f.lambda0})
        return path


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for json.dump."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def read_csv(path: str) -> Tuple[Dict[str, str], Tuple[str, ...], np.ndarray]:
    """Read a file written by Storage.write_csv.

    Returns:
        (provenance comments, column names, 2-D float array)
    """
    meta: Dict[str, str] = {}
    with open(path, 'r', encoding='utf-8') as f:
        line = f.readline()
        while line.startswith('#'):
            key, _, value = line[1:].partition(':')
            meta[key.strip()] = value.strip()
            line = f.readline()
        columns = tuple(line.strip().split(','))
        rows = np.loadtxt(f, delimiter=',', ndmin=2)
    return meta, columns, rows.reshape(-1, len(columns))


def read_json(path: str) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def load_field(path: str, grid: Optional[AnnulusGrid] = None) -> Tuple[VelocityField, AnnulusGrid]:
    """Read a field CSV and its JSON descriptor back into arrays."""
    csv_path = Path(path)
    descriptor = read_json(str(csv_path.with_suffix('.json')))
    g = grid or AnnulusGrid.from_dict(descriptor['grid'])
    _, columns, rows = read_csv(str(csv_path))
    if columns != FIELD_COLUMNS:
        raise ValueError(f"{csv_path} is not a field file (columns {columns})")
    ur = rows[:, 2].reshape(g.shape)
    ut = rows[:, 3].reshape(g.shape)
    return VelocityField(ur, ut, descriptor.get('wall', 'none'), descriptor.get('lambda0', 0.0)), g
