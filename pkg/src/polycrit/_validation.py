"""Input validation helpers used by the functional API and the estimators."""

import math
import numbers
import re

import numpy as np

from .errors import DomainError

_ANGLE_RE = re.compile(
    r"^\s*(?P<num>[+-]?\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(?P<den>\d*\.?\d+(?:[eE][+-]?\d+)?))?\s*$"
)


def parse_angle(value):
    """Return an angle in radians.

    Numbers are taken as radians. Strings may be plain numbers or rational
    multiples of pi: ``"pi/2"``, ``"3pi/4"``, ``"2*pi/3"``, ``"pi"``.
    Degrees are never accepted. A decimal string that agrees with a small
    rational multiple of pi to within one unit in its last printed digit
    (``"1.5707963"``) is read as that multiple, so truncated decimals do not
    perturb closed-form exponents.
    """
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip().lower()
        try:
            out = _snap_to_pi(text, float(text))
        except ValueError:
            match = _ANGLE_RE.match(text)
            if match is None:
                raise DomainError(f"cannot parse angle {value!r}") from None
            num = match.group("num")
            coef = 1.0 if num in ("", "+") else (-1.0 if num == "-" else float(num))
            den = float(match.group("den")) if match.group("den") else 1.0
            if den == 0:
                raise DomainError(f"zero denominator in angle {value!r}")
            out = coef * math.pi / den
    else:
        raise DomainError(f"angle must be a number or string, got {type(value).__name__}")
    if not math.isfinite(out):
        raise DomainError(f"angle must be finite, got {value!r}")
    return out


_DECIMAL_RE = re.compile(r"^[+-]?\d*\.(?P<frac>\d+)$")


def _snap_to_pi(text, x, max_den=12, min_digits=4):
    match = _DECIMAL_RE.match(text)
    if match is None or len(match.group("frac")) < min_digits:
        return x
    ulp = 10.0 ** -len(match.group("frac"))
    for den in range(1, max_den + 1):
        num = round(x * den / math.pi)
        if num != 0 and abs(x - num * math.pi / den) < ulp:
            return num * math.pi / den
    return x


def check_int(value, name, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, numbers.Real) and float(value).is_integer():
            value = int(value)
        else:
            raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise DomainError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_real(value, name, *, low=None, high=None, low_open=False, high_open=False,
               allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if low is not None and (value < low or (low_open and value == low)):
        op = ">" if low_open else ">="
        raise DomainError(f"{name} must be {op} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        op = "<" if high_open else "<="
        raise DomainError(f"{name} must be {op} {high}, got {value}")
    return value


def check_exponent(q, name="q"):
    """Validate a nonlinearity exponent q > 1."""
    return check_real(q, name, low=1.0, low_open=True)


def check_mesh(mesh, minimum=16):
    return check_int(mesh, "mesh", minimum=minimum)


def as_float_array(values, name, ndim=1):
    """Convert to a finite float array of the given dimension."""
    arr = np.asarray(values, dtype=float)
    if ndim == 1 and arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must contain only finite values")
    return arr
