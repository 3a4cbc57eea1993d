import os


class Constants():
    FP_RUN = 'fp-run'
    CONTROL_RUN = 'control-run'
    SDE_RUN = 'sde-run'
    QUANTUM_RUN = 'quantum-run'
    PATHS_RUN = 'paths-run'
    DECOMPOSE = 'decompose'

    run_kinds = [
        FP_RUN,
        CONTROL_RUN,
        SDE_RUN,
        QUANTUM_RUN,
        PATHS_RUN,
        DECOMPOSE,
    ]

    OVERDAMPED = 'overdamped'
    POLYMER = 'polymer'
    sde_models = [OVERDAMPED, POLYMER]

    builtin_scenarios = {
        'ou-relax': 'OU testbed relaxing from N(1,2) without control',
        'ou-modulated': 'OU testbed under the log-ratio feedback with constant gain 1',
        'polymer-cooling': 'Harmonic cantilever under velocity feedback equal to the friction',
        'qubit-qrec': 'Closed qubit perturbed by sigma_x, relative entropy production',
        'qubit-lindblad': 'Thermally damped qubit relaxing towards its Gibbs state',
        'paths-osmotic': 'Stationary OU ensemble, forward/backward drifts and osmotic relation',
    }

    # All floating output is written with this many significant digits
    float_digits = 17

    # Relative tolerance for identities that hold exactly in the discrete algebra
    identity_tolerance = 1e-12

    # Floor below which densities are excluded from log-ratio integrands
    density_floor = 1e-300

    boundary_decay_threshold = 1e-9
    boundary_mass_ratio = 1e-10
    mass_tolerance = 1e-8
    mass_warning_tolerance = 1e-6
    conservation_tolerance = 1e-7
    positivity_floor = -1e-12

    default_courant_limit = 5.0
    default_escape_factor = 50.0
    noise_block_size = 4096
    default_min_count = 30

    full_rank_threshold = 1e-12
    hermitian_tolerance = 1e-12
    lindblad_floor = -1e-10
    imaginary_tolerance = 1e-10

    host_home = os.path.expanduser('~')
    entrolab_dir = os.path.join(host_home, '.entrolab')
    entrolab_config_path = os.path.join(entrolab_dir, 'config.yaml')
    scenario_dir = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'scenarios')
