"""Spectral simulation and verification toolkit for the damped modal Duffing system

    u'' + u' + A^2 u - lam A u + |A^{1/2} u|^2 A u = f(t)

with ``A`` diagonal, ``lam1 < lam < lam2``.  Submodules:

``spectral``   operator, parameters, norms
``forcing``    forcing models
``dynamics``   right-hand side and fixed-step integrators
``energy``     energy functionals and their certification
``asymptotics`` tail sups, classification, proof constants, lemma oracles
``special``    periodic and bounded special solutions
``basin``      basin bisection, openness probes, heteroclinic runs
``cli``        command-line front end
"""
from .errors import DuffingFlowError
from .forcing import (
    ConstantForcing,
    DecayingForcing,
    PeriodicForcing,
    SampledForcing,
    ZeroForcing,
    constant_on_mode,
)
from .spectral import (
    ModelParams,
    PhaseState,
    SpectralOperator,
    apply_P,
    canonical_params,
    energy_norm,
    make_operator,
    make_params,
    norms,
)
from .dynamics import (
    Trajectory,
    integrate,
    integrate_many,
    integrate_mode,
    random_states,
    rhs,
    stationary_states,
    stroboscopic_iterates,
)
from .energy import (
    EnergyRecord,
    certify_dissipation,
    certify_energy_identity,
    classical_energy,
    corrected_energy,
    decompose_F,
    energy_ledger,
    s_energy_constant,
    well_energies,
)
from .asymptotics import (
    RegimeConstants,
    RegimeReport,
    asymptotic_distance,
    classify,
    ode_limsup_oracle,
    pde_limsup_oracle,
    regime_constants,
    tail_limsup,
    verify_ultimate_bound,
)
from .special import (
    dichotomy_green_apply,
    linearize,
    nonlinear_remainder,
    solve_bounded,
    solve_periodic,
)
from .basin import bisect_boundary, heteroclinic_demo, openness_probe

__version__ = "0.1.0"
