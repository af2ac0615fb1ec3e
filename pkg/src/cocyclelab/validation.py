"""Argument checks shared by the estimator wrappers and the command line."""

from __future__ import annotations

from numbers import Integral, Real

from .cocycle import Cocycle
from .dynamics import CirclePoint, Rotation, Subshift, SymbolicPoint, ToralAutomorphism, TorusPoint
from .exceptions import EmptySample, InvalidParameter
from .lyapunov import check_schedule, geometric_schedule


def check_cocycle(c) -> Cocycle:
    if not isinstance(c, Cocycle):
        raise InvalidParameter(f"expected a Cocycle, got {type(c).__name__}")
    return c


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral) or value < minimum:
        raise InvalidParameter(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_tolerance(value, name: str = "tol") -> float:
    if isinstance(value, bool) or not isinstance(value, Real) or not value > 0:
        raise InvalidParameter(f"{name} must be a positive number, got {value!r}")
    return float(value)


_POINT_TYPES = (
    (Subshift, SymbolicPoint),
    (Rotation, CirclePoint),
    (ToralAutomorphism, TorusPoint),
)


def check_sample(X, system=None) -> list:
    """Non-empty list of base points, of the type the system iterates."""
    if X is None:
        raise EmptySample("no sample points given")
    pts = list(X)
    if not pts:
        raise EmptySample("empty sample")
    if system is not None:
        for sys_type, pt_type in _POINT_TYPES:
            if isinstance(system, sys_type):
                bad = [p for p in pts if not isinstance(p, pt_type)]
                if bad:
                    raise InvalidParameter(
                        f"{type(system).__name__} needs {pt_type.__name__} points, got {type(bad[0]).__name__}"
                    )
    return pts


def resolve_schedule(schedule, horizon: int) -> list[int]:
    """Explicit schedule if given, otherwise powers of two up to ``horizon``."""
    if schedule is None:
        return geometric_schedule(check_positive_int(horizon, "horizon"))
    return check_schedule(schedule)
