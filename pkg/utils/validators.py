"""
Fractal Lq Toolkit - Config Validators
Version: 1.0.0
"""

import math
from typing import Callable, Dict, Tuple

from config.settings import settings
from utils.errors import ArgumentError, ConfigError
from utils.exact import parse_real

Check = Callable[[object], Tuple[bool, str]]


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_real(value) -> Tuple[bool, str]:
    """A number or an expression such as "(sqrt(5)-1)/2" """
    if _is_number(value):
        return (True, "") if math.isfinite(value) else (False, "must be finite")
    if isinstance(value, str):
        try:
            parse_real(value)
        except ArgumentError as e:
            return False, str(e)
        return True, ""
    return False, "must be a number or an expression string"


def validate_lambda(value) -> Tuple[bool, str]:
    ok, message = validate_real(value)
    if not ok:
        return ok, message
    lam = parse_real(value).value
    if not 0 < abs(lam) < 1:
        return False, f"must satisfy 0 < |lambda| < 1 (got {lam})"
    return True, ""


def validate_q(value) -> Tuple[bool, str]:
    if not _is_number(value):
        return False, "must be a number"
    if not value > 1:
        return False, f"must be greater than 1 (got {value})"
    return True, ""


def validate_q_grid(value) -> Tuple[bool, str]:
    if not isinstance(value, list) or not value:
        return False, "must be a nonempty list"
    for q in value:
        ok, message = validate_q(q)
        if not ok:
            return False, f"entry {q!r} {message}"
    return True, ""


def int_in(lo: int, hi: int = None) -> Check:
    """Integer within [lo, hi]"""

    def check(value) -> Tuple[bool, str]:
        if not isinstance(value, int) or isinstance(value, bool):
            return False, "must be an integer"
        if value < lo or (hi is not None and value > hi):
            upper = hi if hi is not None else 'inf'
            return False, f"must lie in [{lo}, {upper}] (got {value})"
        return True, ""

    return check


def positive_number(value) -> Tuple[bool, str]:
    if not _is_number(value) or not value > 0:
        return False, "must be a positive number"
    return True, ""


def one_of(*choices) -> Check:
    def check(value) -> Tuple[bool, str]:
        if value not in choices:
            return False, f"must be one of {list(choices)} (got {value!r})"
        return True, ""

    return check


def list_of(item: Check, min_length: int = 1) -> Check:
    def check(value) -> Tuple[bool, str]:
        if not isinstance(value, list) or len(value) < min_length:
            return False, f"must be a list with at least {min_length} entries"
        for entry in value:
            ok, message = item(entry)
            if not ok:
                return False, f"entry {entry!r} {message}"
        return True, ""

    return check


def validate_bool(value) -> Tuple[bool, str]:
    if not isinstance(value, bool):
        return False, "must be true or false"
    return True, ""


def validate_object(value) -> Tuple[bool, str]:
    if not isinstance(value, dict):
        return False, "must be an object"
    return True, ""


def validate_descriptor(value) -> Tuple[bool, str]:
    if not isinstance(value, dict) or 'type' not in value:
        return False, "must be an object with a 'type' field"
    return True, ""


def validate_point(value) -> Tuple[bool, str]:
    if not isinstance(value, list) or len(value) != 2:
        return False, "must be a pair [x, y]"
    for c in value:
        ok, message = validate_real(c)
        if not ok:
            return False, message
    return True, ""


def validate_planar_atoms(value) -> Tuple[bool, str]:
    if not isinstance(value, list) or not value:
        return False, "must be a nonempty list of [[x, y], mass]"
    for atom in value:
        if not isinstance(atom, list) or len(atom) != 2:
            return False, f"atom {atom!r} must be [[x, y], mass]"
        ok, message = validate_point(atom[0])
        if not ok:
            return False, f"atom {atom!r}: {message}"
        ok, message = validate_real(atom[1])
        if not ok:
            return False, f"atom {atom!r}: {message}"
    return True, ""


def validate_digit_spec(value) -> Tuple[bool, str]:
    """{"base": p, "digits": [...], "depth": n}"""
    if not isinstance(value, dict):
        return False, "must be an object with base, digits and depth"
    extra = set(value) - {'base', 'digits', 'depth'}
    if extra:
        return False, f"unknown keys {sorted(extra)}"
    for key, check in (('base', int_in(2)), ('digits', list_of(int_in(0))), ('depth', int_in(0))):
        if key not in value:
            return False, f"missing '{key}'"
        ok, message = check(value[key])
        if not ok:
            return False, f"'{key}' {message}"
    return True, ""


# (required, check, default)
SCHEMAS: Dict[str, Dict[str, tuple]] = {
    'spectrum': {
        'source': (True, validate_descriptor, None),
        'q_grid': (False, validate_q_grid, None),
        'm_min': (False, int_in(4), 4),
        'm_max': (True, int_in(5), None),
        'x': (False, lambda v: (True, ""), None),
        'states': (False, int_in(1, 1000), 1),
        'frostman': (False, validate_bool, False),
    },
    'separation': {
        'kind': (False, one_of('poly', 'profile', 'ifs', 'scan'), 'poly'),
        'coefficients': (False, list_of(validate_real), [-1, 0, 1]),
        'lambda': (False, validate_lambda, None),
        'lambda_grid': (False, list_of(validate_lambda), None),
        'n_max': (False, int_in(1, 200), 10),
        'mode': (False, one_of('exact', 'interval', 'float', 'auto'), 'exact'),
        'budget': (False, int_in(1), None),
        'source': (False, validate_descriptor, None),
        'x': (False, lambda v: (True, ""), None),
        'R': (False, positive_number, 2.0),
    },
    'intersect': {
        'base': (True, int_in(2), None),
        'digits': (True, list_of(int_in(0)), None),
        't': (True, validate_real, None),
        'u': (False, validate_real, 0),
        'depths': (True, list_of(int_in(1, 40), 3), None),
    },
    'slice': {
        'lambda': (True, validate_lambda, None),
        'alpha': (False, validate_real, 0),
        'translations': (True, list_of(validate_point), None),
        'depth': (True, int_in(0, 40), None),
        'slope': (False, validate_real, None),
        'direction': (False, validate_point, None),
        'offsets': (False, list_of(validate_real), [0]),
        'eps_depths': (True, list_of(int_in(0, 40), 3), None),
    },
    'sumset': {
        'a': (True, validate_digit_spec, None),
        'b': (True, validate_digit_spec, None),
        'eps_exponents': (True, list_of(int_in(1, 40), 3), None),
    },
    'witness': {
        'm': (True, int_in(1, 30), None),
        'D': (True, int_in(1, 30), None),
        'q': (False, validate_q, 2.0),
        'delta': (False, positive_number, 0.1),
        'mu': (True, validate_object, None),
        'nu': (True, validate_object, None),
        'center': (False, validate_bool, True),
        'collapse_b': (False, validate_bool, False),
    },
    'project': {
        'lambda': (True, validate_lambda, None),
        'alpha': (False, validate_real, 0),
        'planar_delta': (True, validate_planar_atoms, None),
        'directions': (True, list_of(validate_point), None),
        'q_grid': (False, validate_q_grid, [2.0]),
        'm_min': (False, int_in(4), 4),
        'm_max': (True, int_in(5), None),
    },
}

COMMON_KEYS = {
    'version': (False, one_of(1), 1),
    'seed': (False, int_in(0), 0),
}


def validate_config(command: str, config) -> dict:
    """
    Check a config document against the command schema

    Returns:
        The config with defaults filled in; ConfigError names the first bad key
    """
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    schema = dict(COMMON_KEYS)
    schema.update(SCHEMAS[command])

    unknown = sorted(set(config) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}' for {command}")

    result = {}
    for key, (required, check, default) in schema.items():
        if key not in config:
            if required:
                raise ConfigError(f"missing required config key '{key}' for {command}")
            result[key] = default
            continue
        ok, message = check(config[key])
        if not ok:
            raise ConfigError(f"config key '{key}' {message}")
        result[key] = config[key]

    if command in ('spectrum', 'project') and result['m_min'] >= result['m_max']:
        raise ConfigError("config key 'm_max' must exceed m_min")
    if command in ('spectrum', 'project') and result['m_max'] > settings.SPARSE_SCALE_CAP:
        raise ConfigError(f"config key 'm_max' exceeds the scale cap {settings.SPARSE_SCALE_CAP}")
    if command == 'witness' and result['m'] % result['D']:
        raise ConfigError("config key 'D' must divide m")
    if command == 'separation':
        _check_separation(result)
    return result


def _check_separation(config: dict):
    kind = config['kind']
    if kind == 'poly' and config['lambda'] is None:
        raise ConfigError("config key 'lambda' is required for kind 'poly'")
    if kind == 'scan' and not config['lambda_grid']:
        raise ConfigError("config key 'lambda_grid' is required for kind 'scan'")
    if kind in ('profile', 'ifs') and config['source'] is None:
        raise ConfigError(f"config key 'source' is required for kind '{kind}'")
