"""Certificates of positive quantum capacity for finite-dimensional channels."""
from .channels import (
    Channel,
    ChoiMatrix,
    ComplementaryPair,
    StinespringIsometry,
    adjoint_apply,
    apply,
    choi,
    complement,
    minimal_env_dim,
    minimal_out_dim,
    stinespring,
    tensor_power,
)
from .detector import (
    DetectionReport,
    ProbeResult,
    Rule,
    Verdict,
    default_probes,
    detect,
    dimension_rules,
    implications,
    nshot_probe,
    probe,
    search,
)
from .numerics import DEFAULT_TOL, ToleranceConfig, UnsupportedError, ValidationError
from .verifier import (
    PerturbationCheck,
    SweepResult,
    coherent_information,
    flanders_check,
    perturbation_slopes,
    stinespring_subspace,
    sweep,
)
from .zoo import FamilySpec, MadParams

__version__ = "0.1.0"
