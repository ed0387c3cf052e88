"""Experiment files: INI sections parsed with :mod:`configparser`.

A minimal file only needs the array size::

    [geometry]
    mx = 4
    my = 4

    [sweep]
    snr_db = 0, 10, 20

Angles are given in degrees. Lists are comma separated. Exactly one key of
the ``[sweep]`` section selects the swept quantity.
"""

from configparser import ConfigParser, Error as ParserError
from dataclasses import dataclass
import math
import re

from .channel import ArrayGeometry
from .errors import ConfigError, MdacsError
from .experiment import ALGORITHMS, SWEEP_AXES, PopulationSpec

DEFAULT_KAPPA_U = {32: 12, 64: 20}
DEFAULT_FRAME_LEN = {32: 64, 64: 72}


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: ArrayGeometry
    population: PopulationSpec
    n_users: int
    algorithms: tuple
    kappa_u: int
    kappa_b: int
    refresh: str
    objective: str
    acs_threshold: float
    acs_matrix_threshold: float
    acs_p_min: float
    acs_max_nodes: int
    pilot_T: int
    frame_len: int
    rho_p: float
    snr_db: float
    sweep_axis: str
    sweep_values: tuple
    n_trials: int
    n_cov_samples: int
    seed: int

    def with_seed(self, seed):
        return ExperimentConfig(**{**self.__dict__, "seed": int(seed)})


# section -> key -> (type, default); None default means "derived" or required
SCHEMA = {
    "geometry": {
        "mx": (int, None), "my": (int, None), "dx": (float, 0.5), "dy": (float, 0.5),
    },
    "users": {
        "n_users": (int, 15),
        "theta_min": (float, -10.0), "theta_max": (float, 10.0),
        "phi_min": (float, -60.0), "phi_max": (float, 60.0),
        "indoor_fraction": (float, 0.5),
        "indoor_spread_theta": (float, 10.0), "indoor_spread_phi": (float, 10.0),
        "outdoor_spread_theta": (float, 2.0), "outdoor_spread_phi": (float, 2.0),
        "indoor_clusters": (int, 2), "outdoor_clusters": (int, 1),
        "n_subpaths": (int, 100), "xpol": (float, 0.2),
    },
    "selection": {
        "algorithms": (list, "greedy, no_selection"),
        "kappa_u": (int, None), "kappa_b": (int, 3),
        "refresh": (str, "iteration"), "objective": (str, "masked"),
        "acs_threshold": (float, 0.5), "acs_matrix_threshold": (float, 1.0),
        "acs_p_min": (float, None), "acs_max_nodes": (int, 200000),
    },
    "training": {
        "pilot_T": (int, 16), "frame_len": (int, None), "rho_p": (float, 1.0),
        "snr_db": (float, 20.0),
    },
    "sweep": {"snr_db": (list, None), "pilot_T": (list, None), "n_users": (list, None)},
    "run": {"n_trials": (int, 100), "n_cov_samples": (int, 1000), "seed": (int, 0)},
}


def _line_of(text, section, key):
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return n
    return None


def _convert(kind, raw, field, line):
    try:
        if kind is list:
            items = [v.strip() for v in raw.split(",") if v.strip()]
            if not items:
                raise ValueError("empty list")
            return tuple(items)
        if kind is int:
            f = float(raw)
            if f != int(f):
                raise ValueError(f"{raw!r} is not an integer")
            return int(f)
        return kind(raw.strip())
    except ValueError as exc:
        raise ConfigError(field, f"cannot read {raw!r} as {kind.__name__}: {exc}", line) from None


def parse_config(text):
    """Parse and validate an experiment file. Errors name the field and line."""
    parser = ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except ParserError as exc:
        raise ConfigError("document", str(exc).splitlines()[0]) from None

    values = {}
    lines = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section", _section_line(text, section))
        for key, raw in parser.items(section):
            line = _line_of(text, section, key)
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key", line)
            kind = SCHEMA[section][key][0]
            values[(section, key)] = _convert(kind, raw, f"{section}.{key}", line)
            lines[(section, key)] = line

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return SCHEMA[section][key][1]

    def fail(section, key, msg):
        raise ConfigError(f"{section}.{key}", msg, lines.get((section, key)))

    def positive(section, key, allow_zero=False):
        v = get(section, key)
        if v is None:
            fail(section, key, "is required")
        if v < 0 or (v == 0 and not allow_zero):
            fail(section, key, f"must be {'non-negative' if allow_zero else 'positive'}, got {v}")
        return v

    mx, my = positive("geometry", "mx"), positive("geometry", "my")
    geom = ArrayGeometry(mx, my, positive("geometry", "dx"), positive("geometry", "dy"))
    m = geom.n_antennas

    frac = get("users", "indoor_fraction")
    if not 0.0 <= frac <= 1.0:
        fail("users", "indoor_fraction", f"must lie in [0, 1], got {frac}")
    for key in ("theta_min", "theta_max", "phi_min", "phi_max"):
        if abs(get("users", key)) >= 90.0:
            fail("users", key, "must lie strictly between -90 and 90 degrees")
    if get("users", "theta_min") > get("users", "theta_max"):
        fail("users", "theta_min", "exceeds theta_max")
    if get("users", "phi_min") > get("users", "phi_max"):
        fail("users", "phi_min", "exceeds phi_max")
    for key in ("indoor_spread_theta", "indoor_spread_phi", "outdoor_spread_theta", "outdoor_spread_phi"):
        positive("users", key, allow_zero=True)
    for key in ("indoor_clusters", "outdoor_clusters", "n_subpaths"):
        positive("users", key)
    rad = math.radians
    pop = PopulationSpec(
        theta_range=(rad(get("users", "theta_min")), rad(get("users", "theta_max"))),
        phi_range=(rad(get("users", "phi_min")), rad(get("users", "phi_max"))),
        indoor_fraction=frac,
        indoor_spread=(rad(get("users", "indoor_spread_theta")), rad(get("users", "indoor_spread_phi"))),
        outdoor_spread=(rad(get("users", "outdoor_spread_theta")), rad(get("users", "outdoor_spread_phi"))),
        indoor_clusters=get("users", "indoor_clusters"),
        outdoor_clusters=get("users", "outdoor_clusters"),
        n_subpaths=get("users", "n_subpaths"),
        xpol=get("users", "xpol"),
    )
    if abs(pop.xpol) > 1:
        fail("users", "xpol", "cross-polarization correlation must have magnitude <= 1")

    algorithms = get("selection", "algorithms")
    if isinstance(algorithms, str):
        algorithms = tuple(a.strip() for a in algorithms.split(","))
    for a in algorithms:
        if a not in ALGORITHMS:
            fail("selection", "algorithms", f"unknown algorithm {a!r} (choose from {', '.join(ALGORITHMS)})")
    if len(set(algorithms)) != len(algorithms):
        fail("selection", "algorithms", "lists an algorithm twice")
    if "jsdm" in algorithms and "greedy" not in algorithms:
        fail("selection", "algorithms", "jsdm takes its group count from greedy; add greedy to the list")

    kappa_u = get("selection", "kappa_u")
    if kappa_u is None:
        kappa_u = DEFAULT_KAPPA_U.get(m, max(1, round(12 * m / 32)))
    if kappa_u < 1:
        fail("selection", "kappa_u", f"must be positive, got {kappa_u}")
    kappa_b = positive("selection", "kappa_b")
    if kappa_b > geom.n_beams:
        fail("selection", "kappa_b", f"cannot exceed the {geom.n_beams} block beams")
    refresh = get("selection", "refresh")
    if refresh not in ("iteration", "once"):
        fail("selection", "refresh", "must be 'iteration' or 'once'")
    objective = get("selection", "objective")
    if objective not in ("masked", "full"):
        fail("selection", "objective", "must be 'masked' or 'full'")
    p_min = get("selection", "acs_p_min")
    if p_min is None:
        p_min = m / 4.0
    if p_min < 0:
        fail("selection", "acs_p_min", "must be non-negative")
    positive("selection", "acs_max_nodes")

    frame_len = get("training", "frame_len")
    if frame_len is None:
        frame_len = DEFAULT_FRAME_LEN.get(m, 64)
    if frame_len < 1:
        fail("training", "frame_len", f"must be positive, got {frame_len}")
    pilot_T = positive("training", "pilot_T")
    positive("training", "rho_p")

    axes = [k for k in SWEEP_AXES if ("sweep", k) in values]
    if len(axes) != 1:
        what = "none" if not axes else ", ".join(axes)
        raise ConfigError("sweep", f"exactly one sweep axis is required (found {what})",
                          _section_line(text, "sweep"))
    axis = axes[0]
    kind = float if axis == "snr_db" else int
    sweep_values = tuple(_convert(kind, v, f"sweep.{axis}", lines[("sweep", axis)])
                         for v in values[("sweep", axis)])
    if axis != "snr_db" and min(sweep_values) < 1:
        fail("sweep", axis, "values must be positive")
    n_users = positive("users", "n_users")
    t_values = sweep_values if axis == "pilot_T" else (pilot_T,)
    if max(t_values) > frame_len:
        key = ("sweep", axis) if axis == "pilot_T" else ("training", "pilot_T")
        fail(*key, f"pilot length exceeds frame_len={frame_len}")

    seed = get("run", "seed")
    if seed < 0:
        fail("run", "seed", "must be non-negative")
    try:
        return ExperimentConfig(
            geometry=geom, population=pop, n_users=n_users, algorithms=tuple(algorithms),
            kappa_u=kappa_u, kappa_b=kappa_b, refresh=refresh, objective=objective,
            acs_threshold=get("selection", "acs_threshold"),
            acs_matrix_threshold=get("selection", "acs_matrix_threshold"),
            acs_p_min=p_min, acs_max_nodes=get("selection", "acs_max_nodes"),
            pilot_T=pilot_T, frame_len=frame_len, rho_p=get("training", "rho_p"),
            snr_db=get("training", "snr_db"), sweep_axis=axis, sweep_values=sweep_values,
            n_trials=positive("run", "n_trials", allow_zero=True),
            n_cov_samples=positive("run", "n_cov_samples"), seed=seed,
        )
    except MdacsError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("document", str(exc)) from None


def _section_line(text, section):
    for n, line in enumerate(text.splitlines(), start=1):
        if line.strip() == f"[{section}]":
            return n
    return None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
