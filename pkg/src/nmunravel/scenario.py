"""TOML scenario files for the two-level-atom experiments.

All quantities are dimensionless in units of the bath rate: frequencies in
``Gamma``, times in ``1/Gamma`` (so ``Gamma = 1`` implicitly).
"""

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bath import BathSpec
from .engine import METHODS, RunConfig
from .errors import ConfigurationError, OutputError
from .linalg import NAMED_OPERATORS, NAMED_STATES
from .system import two_level_atom

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {"M": 3000, "dt": 1e-3, "t_end": 5.0, "epsilon": 0.5, "m": 2, "seed": 0}
TOP_KEYS = {"method", "M", "dt", "t_end", "seed", "epsilon", "m", "initial_state", "observables",
            "epsilon_sweep", "output", "kde_bandwidth_override", "dump_trajectories",
            "system", "bath"}
SYSTEM_KEYS = {"omega", "Omega"}
BATH_KEYS = {"g", "omega_c"}
BUNDLED = ("fig2",)


@dataclass
class Scenario:
    config: RunConfig
    output: str = None
    epsilon_sweep: list = field(default_factory=lambda: [1.0, 0.5, 0.25, 0.125])
    source: str = ""


def _number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _table(doc, key, allowed):
    if key not in doc:
        raise ConfigurationError(f"{key}: missing required table")
    tab = doc[key]
    if not isinstance(tab, dict):
        raise ConfigurationError(f"{key}: expected a table")
    for k in tab:
        if k not in allowed:
            raise ConfigurationError(f"{key}.{k}: unknown key")
    for k in allowed:
        if k not in tab:
            raise ConfigurationError(f"{key}.{k}: missing required key")
    return {k: _number(tab[k], f"{key}.{k}") for k in allowed}


def _initial_state(value):
    if isinstance(value, str):
        if value not in NAMED_STATES:
            raise ConfigurationError(f"initial_state: unknown state {value!r}; "
                                     f"choose from {sorted(NAMED_STATES)}")
        return NAMED_STATES[value].copy()
    if isinstance(value, list) and len(value) == 2:
        amps = []
        for i, pair in enumerate(value):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigurationError(f"initial_state[{i}]: expected [re, im]")
            amps.append(complex(_number(pair[0], f"initial_state[{i}][0]"),
                                _number(pair[1], f"initial_state[{i}][1]")))
        psi = np.array(amps)
        if not np.linalg.norm(psi) > 0:
            raise ConfigurationError("initial_state: zero vector")
        return psi
    raise ConfigurationError("initial_state: expected a state name or [[re, im], [re, im]]")


def scenario_from_dict(doc, source=""):
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario: expected a table at top level")
    for k in doc:
        if k not in TOP_KEYS:
            raise ConfigurationError(f"{k}: unknown key")
    if "method" not in doc:
        raise ConfigurationError("method: missing required key")
    method = doc["method"]
    if method not in METHODS:
        raise ConfigurationError(f"method: expected one of {list(METHODS)}, got {method!r}")

    kw = dict(DEFAULTS)
    for key in ("M", "m", "seed"):
        if key in doc:
            kw[key] = _number(doc[key], key, integer=True)
    for key in ("dt", "t_end", "epsilon"):
        if key in doc:
            kw[key] = _number(doc[key], key)
    if not kw["dt"] > 0:
        raise ConfigurationError("dt: must be positive")
    if not kw["t_end"] > 0:
        raise ConfigurationError("t_end: must be positive")
    if method == "jump" and not kw["epsilon"] > 0:
        raise ConfigurationError("epsilon: must be positive for method 'jump'")
    if not kw["M"] >= 1:
        raise ConfigurationError("M: must be at least 1")
    if method in ("jump", "diffusion") and kw["M"] < 2:
        raise ConfigurationError("M: jump and diffusion need at least 2 trajectories")
    if not 0 <= kw["seed"] < 2 ** 64:
        raise ConfigurationError("seed: must fit in 64 unsigned bits")
    if kw["m"] < 2:
        raise ConfigurationError("m: must be at least 2")

    sysd = _table(doc, "system", SYSTEM_KEYS)
    bathd = _table(doc, "bath", BATH_KEYS)
    if not bathd["g"] > 0:
        raise ConfigurationError("bath.g: must be positive")

    obs = doc.get("observables", ["sigma_x"])
    if not isinstance(obs, list):
        raise ConfigurationError("observables: expected a list of names")
    for i, name in enumerate(obs):
        if name not in NAMED_OPERATORS:
            raise ConfigurationError(f"observables[{i}]: unknown observable {name!r}; "
                                     f"choose from {sorted(NAMED_OPERATORS)}")

    bw = doc.get("kde_bandwidth_override")
    if bw is not None:
        bw = _number(bw, "kde_bandwidth_override")
        if not bw > 0:
            raise ConfigurationError("kde_bandwidth_override: must be positive")
    dump = doc.get("dump_trajectories", False)
    if not isinstance(dump, bool):
        raise ConfigurationError("dump_trajectories: expected true or false")

    sweep = doc.get("epsilon_sweep", [1.0, 0.5, 0.25, 0.125])
    if not isinstance(sweep, list) or not sweep:
        raise ConfigurationError("epsilon_sweep: expected a non-empty list")
    sweep = [_number(e, f"epsilon_sweep[{i}]") for i, e in enumerate(sweep)]
    if any(e <= 0 for e in sweep):
        raise ConfigurationError("epsilon_sweep: entries must be positive")

    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigurationError("output: expected a path string")

    config = RunConfig(
        method=method,
        system=two_level_atom(sysd["omega"], sysd["Omega"]),
        bath=BathSpec(g=bathd["g"], Gamma=1.0, omega_c=bathd["omega_c"]),
        initial_state=_initial_state(doc.get("initial_state", "plus")),
        observables={name: NAMED_OPERATORS[name] for name in obs},
        kde_bandwidth_override=bw,
        dump_trajectories=dump,
        **kw,
    )
    return Scenario(config=config, output=output, epsilon_sweep=sweep, source=source)


def load_scenario(path):
    """Load a scenario from a file path or a bundled name such as ``fig2``."""
    p = Path(path)
    try:
        if not p.exists() and str(path) in BUNDLED:
            text = resources.files("nmunravel.scenarios").joinpath(f"{path}.toml").read_text()
        else:
            text = p.read_text()
    except OSError as exc:
        raise OutputError(f"scenario: cannot read {path}: {exc}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"scenario: invalid TOML in {path}: {exc}") from exc
    return scenario_from_dict(doc, source=str(path))


def parse_scenario(path):
    return load_scenario(path).config
