"""Tolerance defaults, overridable through the environment."""
import os

TOL_ENV_VAR = "MONADNAHM_TOL"

RANK_RTOL = 1e-9
RANK_GAP = 1e3
WITNESS_TOL = 1e-8


def default_tolerance() -> float:
    raw = os.environ.get(TOL_ENV_VAR)
    if raw is None:
        return 1e-12
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"{TOL_ENV_VAR} must be a float, got {raw!r}") from exc
    if not value > 0:
        raise ValueError(f"{TOL_ENV_VAR} must be positive, got {raw!r}")
    return value
