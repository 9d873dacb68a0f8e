"""Centralized numerical tolerances.

Every threshold used by the library lives in :class:`Tolerances`. The active
set is held in a context variable so a caller (typically the CLI) can swap it
for a block of code without threading a parameter through every function::

    with override(rank_rtol=1e-8):
        structural_report(plant)
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # absolute margin: stable iff max Re(eig) < -stab
    stab: float = 1e-9
    # relative singular-value threshold for structural rank decisions
    rank_rtol: float = 1e-9
    # PSD acceptance, relative to the largest eigenvalue
    psd_rtol: float = 1e-10
    # Lyapunov residual acceptance, relative to 1 + ||X||_F
    lyap_residual: float = 1e-9
    # CARE residual acceptance, relative to 1 + ||P||_F
    care_residual: float = 1e-8
    # Hamiltonian eigenvalues closer than this to the imaginary axis are rejected
    hamiltonian_gap: float = 1e-8
    # rank threshold for certificate matrices (M(P), Z)
    cert_rank_rtol: float = 1e-7
    # LMI feasibility, relative to 1 + lambda_max(M)
    lmi_feas: float = 1e-9
    # complementary slackness, relative to 1 + ||Z|| ||M||
    slackness: float = 1e-7
    # duality gap, relative to 1 + p*
    duality_gap: float = 1e-7
    # X is treated as singular below this fraction of max(1, lambda_max(X))
    lift_singular: float = 1e-10
    # W = B1 B1' match in structural_report
    factor_match: float = 1e-9


_ACTIVE: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "lqr_landscape_tolerances", default=Tolerances()
)


def get_tolerances() -> Tolerances:
    return _ACTIVE.get()


@contextlib.contextmanager
def override(**changes):
    """Temporarily replace selected tolerance fields."""
    token = _ACTIVE.set(dataclasses.replace(_ACTIVE.get(), **changes))
    try:
        yield _ACTIVE.get()
    finally:
        _ACTIVE.reset(token)
