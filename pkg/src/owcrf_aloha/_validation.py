"""Argument checks shared by the configs and estimators.

They raise ``ValueError`` subclasses so callers can catch one type.
"""

import math
import numbers


class ConfigError(ValueError):
    """A configuration violates one or more invariants.

    ``violations`` holds one message per broken rule.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _is_real(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def check_positive(name, value, errors):
    if not _is_real(value) or not value > 0 or math.isnan(value):
        errors.append(f"{name} must be > 0 (got {value!r})")


def check_probability(name, value, errors):
    if not _is_real(value) or not 0.0 <= value <= 1.0:
        errors.append(f"{name} must be a probability in [0, 1] (got {value!r})")


def check_int(name, value, errors, minimum=None):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        errors.append(f"{name} must be an integer (got {value!r})")
        return
    if minimum is not None and value < minimum:
        errors.append(f"{name} must be >= {minimum} (got {value!r})")


def check_range(name, value, errors, low, high, low_open=False, high_open=False):
    if not _is_real(value) or math.isnan(value):
        errors.append(f"{name} must be a number (got {value!r})")
        return
    ok_low = value > low if low_open else value >= low
    ok_high = value < high if high_open else value <= high
    if not (ok_low and ok_high):
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        errors.append(f"{name} must lie in {lb}{low}, {high}{rb} (got {value!r})")


def raise_if(errors):
    if errors:
        raise ConfigError(errors)
