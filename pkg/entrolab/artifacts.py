"""CSV and manifest output of a scenario run.

Floats are written with 17 significant digits so that identical runs give
byte-identical files and hashes.
"""
import csv
import json
import os

import numpy as np

from entrolab.exceptions import FileNotFoundException, ValidationException
from entrolab.fokker_planck import DensityTrajectory
from entrolab.logger import logger
from entrolab.model_core import GridDensity
from entrolab.quantum import write_operator_csv
from entrolab.utils import format_float, makedirs, sha256_file
from entrolab.version import __version__


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, 'w', encoding='UTF-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


class ArtifactWriter():
    """Writes the files of one run into ``directory`` and remembers them for the manifest."""

    def __init__(self, directory, prefix=''):
        self.directory = directory
        self.prefix = prefix
        self.files = []

    def path(self, name):
        return os.path.join(self.directory, f'{self.prefix}{name}')

    def _register(self, path):
        if path not in self.files:
            self.files.append(path)
        logger.debug('Wrote %s', path)
        return path

    def write_with(self, name, write):
        """Call ``write(path)`` for the named output and register the file."""
        makedirs(self.directory)
        path = self.path(name)
        write(path)
        return self._register(path)

    def write_csv(self, name, header, rows):
        return self.write_with(name, lambda path: write_csv(path, header, rows))

    def write_density(self, name, density):
        return self.write_with(name, density.to_csv)

    def write_operator(self, real_name, imag_name, matrix):
        """Real and imaginary parts of a matrix as a CSV pair."""
        makedirs(self.directory)
        real_path, imag_path = self.path(real_name), self.path(imag_name)
        write_operator_csv(matrix, real_path, imag_path)
        return self._register(real_path), self._register(imag_path)

    def write_manifest(self, config):
        manifest = {
            'scenario': config.name,
            'run': config.run,
            'seed': int(config.numerics.seed),
            'version': __version__,
            'files': [{'name': os.path.basename(path), 'sha256': sha256_file(path)}
                      for path in self.files],
        }
        makedirs(self.directory)
        path = self.path('manifest.json')
        with open(path, 'w', encoding='UTF-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write('\n')
        self._register(path)
        return manifest

    def cleanup(self):
        """Remove every file written so far."""
        for path in self.files:
            if os.path.exists(path):
                os.remove(path)
        if self.files:
            logger.warning('Removed %d partial output file(s) from %s',
                           len(self.files), self.directory)
        self.files = []


def read_trajectory_csv(path, grid):
    """Read the t, cell indices, density rows written by fp-run back into a trajectory."""
    if not os.path.exists(path):
        raise FileNotFoundException(f'Trajectory file "{path}" does not exist.')

    with open(path, 'r', encoding='UTF-8') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        expected = ['t'] + [f'cell_{axis}' for axis in range(grid.ndim)] + ['density']
        if header != expected:
            raise ValidationException(
                f'"{path}" is not a trajectory file, expected columns {",".join(expected)}')
        try:
            data = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as err:
            raise ValidationException(f'"{path}" holds non-numeric entries') from err

    if not len(data) or len(data) % grid.size:
        raise ValidationException(
            f'"{path}" holds {len(data)} rows, not a multiple of the {grid.size} grid cells')

    frames = data.reshape(-1, grid.size, data.shape[1])
    times = frames[:, 0, 0]
    densities = []
    for frame in frames:
        cells = frame[:, 1:-1].astype(int).T
        if np.any(cells < 0) or np.any(cells >= np.array(grid.shape)[:, np.newaxis]):
            raise ValidationException(f'"{path}" addresses cells outside the grid')
        values = np.zeros(grid.shape)
        values[tuple(cells)] = frame[:, -1]
        densities.append(GridDensity(grid, values))

    logger.debug('Read %d densities from %s', len(densities), path)
    return DensityTrajectory(times, tuple(densities))
