"""Relative entropy production rates along (controlled) Fokker-Planck evolutions.

Rates are reported as d/dt D, the time derivative of the divergence. The
"entropy production" of the decomposition is its negative and is exposed as a
derived attribute only. Every integrand uses the shared discrete gradient from
model_core so cross-identities hold to rounding.
"""
from dataclasses import dataclass

import numpy as np

from entrolab.config.constants import Constants
from entrolab.exceptions import IdentityViolation
from entrolab.fokker_planck import BoundaryReport, check_assumption_a2
from entrolab.logger import logger
from entrolab.model_core import (
    VectorFieldGrid,
    check_same_grid,
    flux_and_force,
    gibbs_density,
    log_gradient,
    log_ratio_gradient,
    relative_entropy,
    require_positive_interior,
)


@dataclass(frozen=True)
class ProductionReport:
    """d/dt D split as total = -pepr + epur."""
    total_rate: float
    pepr: float
    epur: float
    certificate: BoundaryReport

    def __post_init__(self):
        scale = max(1.0, abs(self.pepr), abs(self.epur))
        if abs(self.total_rate - (self.epur - self.pepr)) > Constants.identity_tolerance * scale:
            raise IdentityViolation(
                f'Production report is inconsistent: total {self.total_rate!r} '
                f'!= -{self.pepr!r} + {self.epur!r}')

    @property
    def entropy_production(self):
        return -self.total_rate

    @property
    def boundary_suspect(self):
        return not self.certificate.passed


def _integrate(grid, integrand, weight):
    mask = weight >= Constants.density_floor
    return float(np.sum(integrand[mask] * weight[mask]) * grid.cell_volume)


def _certify(rho_tilde, f, rho, f_tilde, name):
    report = check_assumption_a2(rho_tilde, f, rho, f_tilde)
    if not report.passed:
        logger.warning('%s: boundary terms do not decay (flux %.3e, log-ratio %.3e), '
                       'the rate is boundary-suspect', name,
                       max(report.flux_term, report.tilde_flux_term), report.log_ratio_term)
    return report


def current_velocity(drift, rho, sigma2):
    """Continuity velocity f - (sigma2 / 2) grad log rho of a diffusion with drift ``drift``."""
    check_same_grid(drift, rho)
    require_positive_interior(rho)
    return VectorFieldGrid(rho.grid, drift.values - 0.5 * sigma2 * log_gradient(rho))


def fisher_divergence(rho, reference):
    """Integral of |grad log(rho / reference)|^2 rho."""
    require_positive_interior(rho, reference)
    gradient = log_ratio_gradient(rho, reference)
    return _integrate(rho.grid, np.sum(gradient ** 2, axis=0), rho.values)


def relative_entropy_rate(rho_tilde, rho, f_tilde, f, with_certificate=False):
    """d/dt D(rho~ || rho) for two continuity flows with velocities f~ and f."""
    grid = check_same_grid(rho_tilde, rho, f_tilde, f)
    require_positive_interior(rho_tilde, rho)

    gradient = log_ratio_gradient(rho_tilde, rho)
    integrand = np.sum(gradient * (f_tilde.values - f.values), axis=0)
    rate = _integrate(grid, integrand, rho_tilde.values)

    report = _certify(rho_tilde, f, rho, f_tilde, 'relative_entropy_rate')
    if with_certificate:
        return rate, report
    return rate


def entropy_rate(rho, f):
    """d/dt S(rho) = -integral of grad log rho . f rho."""
    grid = check_same_grid(rho, f)
    require_positive_interior(rho)
    integrand = np.sum(log_gradient(rho) * f.values, axis=0)
    return -_integrate(grid, integrand, rho.values)


def controlled_relative_entropy_rate(rho_u, rho_0, u, sigma2):
    """d/dt D(rho^u || rho^0) between a controlled flow and its uncontrolled reference."""
    grid = check_same_grid(rho_u, rho_0, u)
    require_positive_interior(rho_u, rho_0)

    gradient = log_ratio_gradient(rho_u, rho_0)
    pepr = 0.5 * sigma2 * _integrate(grid, np.sum(gradient ** 2, axis=0), rho_u.values)
    epur = _integrate(grid, np.sum(gradient * u.values, axis=0), rho_u.values)

    velocity_gap = VectorFieldGrid(grid, u.values - 0.5 * sigma2 * gradient)
    report = _certify(rho_u, u, rho_0, velocity_gap, 'controlled_relative_entropy_rate')
    return ProductionReport(total_rate=epur - pepr, pepr=pepr, epur=epur, certificate=report)


def production_decomposition(rho_u, equilibrium, u, sigma2):
    """Split d/dt D(rho^u || equilibrium) into the positive production and the pumping rate."""
    return controlled_relative_entropy_rate(rho_u, equilibrium, u, sigma2)


def free_energy_decay_rate(rho, ham):
    """d/dt F(rho), cross-checked against -integral of J . Phi."""
    equilibrium = gibbs_density(ham, rho.grid)
    rate = -0.5 * ham.sigma2 * ham.kT * fisher_divergence(rho, equilibrium)

    flux, force = flux_and_force(rho, ham)
    dissipation = -float(np.sum(flux.values * force.values) * rho.grid.cell_volume)

    if abs(rate - dissipation) > 1e-6 * max(abs(rate), abs(dissipation)) + 1e-12:
        raise IdentityViolation(
            f'FE identity violated: {rate!r} from the log-ratio form, '
            f'{dissipation!r} from fluxes and forces')
    return rate


def decompose_trajectory(trajectory, equilibrium, sigma2, control=None):
    """Rows t, D, total_rate, pepr, epur, fd_check_residual along a trajectory.

    ``control`` maps (t, density) to the control field u; None means u = 0.
    The last column compares total_rate with the finite difference of D
    (central inside, one-sided at the ends). Rates are skipped where D is infinite.
    """
    times = trajectory.times
    divergences = np.array([relative_entropy(rho, equilibrium) for rho in trajectory])
    rows = []

    for k, (t, rho) in enumerate(zip(times, trajectory)):
        if not np.isfinite(divergences[k]):
            rows.append([t, divergences[k], np.nan, np.nan, np.nan, np.nan])
            continue

        u = control(t, rho) if control is not None else VectorFieldGrid.zeros(rho.grid)
        report = production_decomposition(rho, equilibrium, u, sigma2)

        if len(times) < 2:
            residual = np.nan
        else:
            lo, hi = max(k - 1, 0), min(k + 1, len(times) - 1)
            slope = (divergences[hi] - divergences[lo]) / (times[hi] - times[lo])
            residual = slope - report.total_rate if np.isfinite(slope) else np.nan

        rows.append([t, divergences[k], report.total_rate, report.pepr, report.epur, residual])

    logger.debug('Decomposed %d trajectory states', len(rows))
    return rows


DECOMPOSITION_HEADER = ['t', 'D', 'total_rate', 'pepr', 'epur', 'fd_check_residual']
