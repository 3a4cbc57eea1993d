"""Execute one scenario and write its artifacts.

Every run kind writes a set of CSV files plus ``manifest.json`` into the
configured output directory. A failing run leaves no partial files behind.
"""
import numpy as np

from entrolab.artifacts import ArtifactWriter, read_trajectory_csv
from entrolab.config.constants import Constants
from entrolab.control import (
    GaussMarkovState,
    evolve_modulated,
    feedback_control,
    gauss_markov_propagate,
    gauss_markov_rows,
)
from entrolab.entropy_production import DECOMPOSITION_HEADER, decompose_trajectory
from entrolab.exceptions import ValidationException
from entrolab.fokker_planck import DriftSpec, evolve
from entrolab.logger import logger
from entrolab.model_core import gibbs_density
from entrolab.path_kinematics import (
    STANDARD_TEST_FUNCTIONS,
    current_drift,
    drift_table,
    estimate_backward_drift,
    estimate_forward_drift,
    finite_energy_estimate,
    osmotic_residual,
    weak_continuity_check,
)
from entrolab.quantum import (
    HamiltonianOperator,
    commutator,
    evolve_closed,
    lindblad_evolve,
    purity,
    qrec_rate,
    qrecd_rate,
    quantum_relative_entropy,
    von_neumann_entropy,
)
from entrolab.sde_lab import (
    estimate_density,
    gaussian_sampler,
    kinetic_temperature,
    point_sampler,
    simulate_overdamped,
    simulate_polymer,
)


def fd_residuals(times, values, rates):
    """Finite difference of ``values`` minus ``rates``; central inside, one-sided at the ends."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    residuals = np.full(len(times), np.nan)
    if len(times) < 2:
        return residuals
    for k in range(len(times)):
        lo, hi = max(k - 1, 0), min(k + 1, len(times) - 1)
        slope = (values[hi] - values[lo]) / (times[hi] - times[lo])
        if np.isfinite(slope) and np.isfinite(rates[k]):
            residuals[k] = slope - rates[k]
    return residuals


def _evolve_density(config, ham, schedule=None):
    numerics = config.numerics
    grid = config.build_grid('numerics')
    rho0 = config.build_initial().on_grid(grid)
    if schedule is None:
        return evolve(DriftSpec.from_hamiltonian(ham), rho0, 0.0, numerics.t1, numerics.dt,
                      record_every=numerics.record_every,
                      courant_limit=numerics.courant_limit)
    return evolve_modulated(ham, schedule, rho0, numerics.t1, numerics.dt,
                            record_every=numerics.record_every,
                            courant_limit=numerics.courant_limit)


def _write_density_outputs(config, writer, trajectory, equilibrium, sigma2, control=None):
    outputs = config.outputs
    if outputs.wants('trajectory.csv'):
        writer.write_csv('trajectory.csv', trajectory.row_header(), trajectory.rows())
    if outputs.wants('summary.csv'):
        writer.write_csv('summary.csv', trajectory.summary_header(),
                         trajectory.summary(equilibrium))
    if outputs.wants('divergence.csv'):
        writer.write_csv('divergence.csv', DECOMPOSITION_HEADER,
                         decompose_trajectory(trajectory, equilibrium, sigma2, control))
    if outputs.wants('final_density.csv'):
        writer.write_density('final_density.csv', trajectory.final)


def _feedback(equilibrium, schedule):
    if schedule.is_constant and schedule.constant_value == 0:
        return None

    def control(t, rho):
        return feedback_control(rho, equilibrium, schedule(t))

    return control


def run_fp(config, writer):
    ham = config.build_hamiltonian()
    equilibrium = gibbs_density(ham, config.build_grid('numerics'))
    trajectory = _evolve_density(config, ham)
    _write_density_outputs(config, writer, trajectory, equilibrium, ham.sigma2)


def run_control(config, writer):
    ham = config.build_hamiltonian()
    schedule = config.build_gain_schedule()
    equilibrium = gibbs_density(ham, config.build_grid('numerics'))
    trajectory = _evolve_density(config, ham, schedule)
    _write_density_outputs(config, writer, trajectory, equilibrium, ham.sigma2,
                           _feedback(equilibrium, schedule))

    if ham.quadratic_form is not None and config.outputs.wants('gauss_markov.csv'):
        initial = config.build_initial()
        state0 = GaussMarkovState(initial.mean, initial.covariance, 0.0)
        states = gauss_markov_propagate(ham, schedule, state0, config.numerics.t1,
                                        config.numerics.dt * config.numerics.record_every)
        writer.write_csv('gauss_markov.csv', *gauss_markov_rows(states))


def run_decompose(config, writer, trajectory_path=None):
    ham = config.build_hamiltonian()
    grid = config.build_grid('numerics')
    schedule = config.build_gain_schedule()
    equilibrium = gibbs_density(ham, grid)
    control = _feedback(equilibrium, schedule)

    if trajectory_path:
        trajectory = read_trajectory_csv(config.resolve_path(trajectory_path), grid)
    else:
        trajectory = _evolve_density(config, ham, schedule if control else None)

    writer.write_csv('divergence.csv', DECOMPOSITION_HEADER,
                     decompose_trajectory(trajectory, equilibrium, ham.sigma2, control))


def _write_ensemble(config, writer, ensemble, masses=None, suffix=''):
    outputs = config.outputs
    if outputs.wants('summary.csv'):
        writer.write_csv(f'summary{suffix}.csv', ensemble.summary_header(masses),
                         ensemble.summary(masses))
    if outputs.wants('ensemble.csv'):
        writer.write_csv(f'ensemble{suffix}.csv', ensemble.row_header(), ensemble.rows())


def run_overdamped(config, writer):
    numerics = config.numerics
    ham = config.build_hamiltonian()
    schedule = config.build_gain_schedule()
    if not (schedule.is_constant and schedule.constant_value == 0):
        logger.warning('sde-run simulates the uncontrolled diffusion, the control gain is ignored')

    initial = config.build_initial()
    ensemble = simulate_overdamped(ham, None, gaussian_sampler(initial.mean, initial.covariance),
                                   int(numerics.n), numerics.dt, numerics.t1, int(numerics.seed),
                                   record_every=numerics.record_every,
                                   escape_radius=numerics.escape_radius)
    _write_ensemble(config, writer, ensemble)

    if config.outputs.wants('density.csv'):
        density = estimate_density(ensemble, ensemble.n_times - 1,
                                   config.build_grid('numerics'), config.paths.bandwidth)
        writer.write_density('density.csv', density)


def run_polymer(config, writer):
    numerics = config.numerics
    polymer = config.polymer
    gains = polymer.sweep if polymer.sweep else [polymer.alpha_c]
    window = tuple(polymer.window) if polymer.window else (0.5 * numerics.t1, numerics.t1)

    rows = []
    for index, gain in enumerate(gains):
        spec = config.build_polymer(gain)
        q0 = point_sampler(np.zeros(spec.size))
        if polymer.spring > 0:
            q0 = gaussian_sampler(np.zeros(spec.size),
                                  spec.temperature / polymer.spring * np.eye(spec.size))
        p0 = gaussian_sampler(np.zeros(spec.size), np.diag(spec.temperature * spec.mass_vector))
        ensemble = simulate_polymer(spec, int(numerics.n), numerics.dt, numerics.t1,
                                    int(numerics.seed), q0, p0,
                                    record_every=numerics.record_every,
                                    escape_radius=numerics.escape_radius)
        temperature = kinetic_temperature(ensemble, spec, window)
        logger.info('alpha_c=%g: kinetic temperature %.6f +- %.6f (thermostat %g)',
                    gain, temperature.value, temperature.standard_error, spec.temperature)
        rows.append([gain, temperature.value, temperature.standard_error,
                     *temperature.per_block])
        _write_ensemble(config, writer, ensemble, spec.mass_vector,
                        suffix='' if len(gains) == 1 else f'_{index}')

    header = (['alpha_c', 'kinetic_temperature', 'standard_error']
              + [f'block_{i}' for i in range(len(polymer.masses))])
    if config.outputs.wants('temperature.csv'):
        writer.write_csv('temperature.csv', header, rows)


def run_sde(config, writer):
    if config.sde.model == Constants.POLYMER:
        run_polymer(config, writer)
    else:
        run_overdamped(config, writer)


def _full_rank(*states):
    return all(state.eigenvalues().min() > Constants.full_rank_threshold for state in states)


def _quantum_times(config):
    numerics = config.numerics
    steps = int(round(numerics.t1 / numerics.dt))
    return numerics.dt * np.arange(0, steps + 1, numerics.record_every)


def run_quantum_closed(config, writer, ham, delta_h, rho0, target):
    """rho evolves under H, the reference under H + dH."""
    perturbed = ham + delta_h
    rows = []
    for t in _quantum_times(config):
        rho = evolve_closed(ham, rho0, t)
        rho_tilde = evolve_closed(perturbed, target, t)
        rate = qrec_rate(rho, delta_h, rho_tilde) if _full_rank(rho_tilde) else np.nan
        rows.append([t, quantum_relative_entropy(rho, rho_tilde), rate,
                     purity(rho), von_neumann_entropy(rho)])

    residuals = fd_residuals([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])
    header = ['t', 'D', 'rate', 'fd_check_residual', 'purity', 'entropy']
    writer.write_csv('quantum.csv', header,
                     [row[:3] + [residual] + row[3:] for row, residual in zip(rows, residuals)])
    return rho


def run_quantum_open(config, writer, spec, delta_h, rho0, target):
    """rho follows the Lindblad flow with H + dH towards the fixed target."""
    numerics = config.numerics
    flow = spec.perturbed(delta_h)
    trajectory = lindblad_evolve(flow, rho0, numerics.t1, numerics.dt,
                                 record_every=numerics.record_every)

    residue = float(np.linalg.norm(commutator(target.matrix, spec.hamiltonian.matrix)))
    with_rates = residue <= 1e-10
    if not with_rates:
        logger.warning('Target does not commute with the Hamiltonian (%.3e), '
                       'production rates are not reported', residue)

    rows = []
    for t, rho, projection in zip(trajectory.times, trajectory, trajectory.residues):
        if with_rates and _full_rank(rho, target):
            report = qrecd_rate(rho, delta_h, spec, target)
            rates = [report.total, report.hamiltonian_term, report.dissipative_term]
        else:
            rates = [np.nan] * 3
        rows.append([t, quantum_relative_entropy(rho, target), *rates,
                     purity(rho), von_neumann_entropy(rho), projection])

    residuals = fd_residuals(trajectory.times, [r[1] for r in rows], [r[2] for r in rows])
    header = ['t', 'D', 'total_rate', 'hamiltonian_term', 'dissipative_term',
              'fd_check_residual', 'purity', 'entropy', 'projection_residue']
    writer.write_csv('quantum.csv', header,
                     [row[:5] + [residual] + row[5:] for row, residual in zip(rows, residuals)])
    return trajectory.final


def run_quantum(config, writer):
    ham, delta_h, spec, rho0, target = config.build_quantum()
    if delta_h is None:
        delta_h = HamiltonianOperator(np.zeros_like(ham.matrix), ham.hbar)

    if spec.jump_operators:
        final = run_quantum_open(config, writer, spec, delta_h, rho0, target)
    else:
        final = run_quantum_closed(config, writer, ham, delta_h, rho0, target)

    if config.outputs.wants('final_state.csv'):
        writer.write_operator('final_state_real.csv', 'final_state_imag.csv', final.matrix)


def run_paths(config, writer):
    numerics = config.numerics
    paths = config.paths
    ham = config.build_hamiltonian()
    initial = config.build_initial()
    grid = config.build_grid('paths')

    ensemble = simulate_overdamped(ham, None, gaussian_sampler(initial.mean, initial.covariance),
                                   int(numerics.n), numerics.dt, numerics.t1, int(numerics.seed),
                                   record_every=numerics.record_every,
                                   escape_radius=numerics.escape_radius)
    if ensemble.n_times < 3:
        raise ValidationException('paths-run needs at least three recorded times, '
                                'lower numerics.record_every')

    indices = np.arange(1, ensemble.n_times - 1, paths.stride)
    beta = estimate_forward_drift(ensemble, indices, grid, paths.min_count)
    gamma = estimate_backward_drift(ensemble, indices, grid, paths.min_count)
    density = estimate_density(ensemble, indices, grid, paths.bandwidth)
    current = current_drift(beta, gamma)

    residual = osmotic_residual(beta, gamma, density, ham.sigma2)
    energy = finite_energy_estimate(ensemble, beta)
    middle = ensemble.n_times // 2
    continuity = weak_continuity_check(ensemble, current, middle, STANDARD_TEST_FUNCTIONS)

    populated = current.populated
    weights = current.counts[populated]
    speeds = np.sum(current.values ** 2, axis=0)[populated]
    current_rms = float(np.sqrt(np.sum(weights * speeds) / np.sum(weights))) \
        if np.any(populated) else np.nan

    rows = [
        ['osmotic_residual', residual, np.nan],
        ['current_drift_rms', current_rms, np.nan],
        ['finite_energy', energy.value, energy.standard_error],
    ]
    for result in continuity:
        rows.append([f'continuity[{result.name}].time_derivative', result.time_derivative,
                     result.standard_error])
        rows.append([f'continuity[{result.name}].transport', result.transport,
                     result.standard_error])
        if not result.passed:
            logger.warning('Weak continuity check failed for %s: %.6g vs %.6g (se %.3g)',
                           result.name, result.time_derivative, result.transport,
                           result.standard_error)

    if config.outputs.wants('drift.csv'):
        writer.write_csv('drift.csv', *drift_table(beta, gamma))
    if config.outputs.wants('kinematics.csv'):
        writer.write_csv('kinematics.csv', ['quantity', 'value', 'standard_error'], rows)
    if config.outputs.wants('density.csv'):
        writer.write_density('density.csv', density)
    _write_ensemble(config, writer, ensemble)


RUNNERS = {
    Constants.FP_RUN: run_fp,
    Constants.CONTROL_RUN: run_control,
    Constants.SDE_RUN: run_sde,
    Constants.QUANTUM_RUN: run_quantum,
    Constants.PATHS_RUN: run_paths,
}


def run_scenario(config, trajectory_path=None):
    """Run a validated scenario; returns the manifest written next to the artifacts."""
    writer = ArtifactWriter(config.outputs.directory, config.outputs.prefix)
    logger.info('Running %s (%s), writing to %s', config.name, config.run,
                config.outputs.directory)

    try:
        if config.run == Constants.DECOMPOSE:
            run_decompose(config, writer, trajectory_path)
        else:
            RUNNERS[config.run](config, writer)
        manifest = writer.write_manifest(config)
    except Exception:
        writer.cleanup()
        raise

    logger.info('Wrote %d file(s) to %s', len(manifest['files']) + 1, config.outputs.directory)
    return manifest
