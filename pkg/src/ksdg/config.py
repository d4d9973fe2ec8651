"""Run configuration: file format, experiment presets, initial conditions.

A run is described by a UTF-8 text file of ``key = value`` lines grouped
in bracketed sections::

    [mesh]
    pattern = mesh1
    n = 64
    domain = -0.5 0.5 -0.5 0.5

    [params]
    k0 = 1.0
    tau = 1
    eps = 1e-10
    dt = 1e-6
    t_end = 1e-4

    [initial]
    preset = one_bulge
    # or explicit initial data:
    # u0 = gaussian(1000, 100, 0, 0) + gaussian(800, 100, 0, 0.2)
    # v0 = sinsin(500, 3)

    [output]
    csv = diagnostics.csv
    vtk_dir = snapshots
    snapshot_times = 0 4.4e-5 1e-4

    [newton]
    tol_residual = 1e-10
    max_iters = 30
    damping = backtracking

    [scheme]
    flux = truncated

Unknown sections or keys, malformed values and violated invariants raise
``ConfigError`` carrying the offending line number.  A preset fills in
the experiment defaults (time stepping, initial data, snapshot times);
explicit keys override it.  Unset values fall back to the model defaults
(all rate constants 1, ``tau = 1``, ``eps = 1e-10``, the unit square
centered at the origin).

Initial data are sums of closed-form terms:

* ``gaussian(A, d, x0, y0)``: ``A * exp(-d * ((x-x0)^2 + (y-y0)^2))``
* ``coscos(A, k)``: ``A * (cos(k*pi*x) * cos(k*pi*y) + 1)``
* ``sinsin(A, k)``: ``A * (sin(k*pi*x) * sin(k*pi*y) + 1)``
* ``zero``: the empty sum

Cell densities sample the formula at triangle barycenters (piecewise
constant interpolation); vertex fields sample at the vertices.
"""

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fields import ModelParams
from .mesh import build_structured_mesh
from .ustep import NewtonSettings

PRESET_NAMES = ("one_bulge", "three_bulges", "multi_peak")

_FLUX_CHOICES = ("truncated", "non_truncated")


class ConfigError(ValueError):
    """Malformed configuration text; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


# -- initial-condition terms -----------------------------------------------

@dataclass(frozen=True)
class GaussianTerm:
    amplitude: float
    decay: float
    x0: float
    y0: float

    def __call__(self, x, y):
        return self.amplitude * np.exp(
            -self.decay * ((x - self.x0) ** 2 + (y - self.y0) ** 2))

    def format(self):
        return "gaussian(%.17g, %.17g, %.17g, %.17g)" % (
            self.amplitude, self.decay, self.x0, self.y0)


@dataclass(frozen=True)
class CosCosTerm:
    amplitude: float
    frequency: float

    def __call__(self, x, y):
        k = self.frequency * np.pi
        return self.amplitude * (np.cos(k * x) * np.cos(k * y) + 1.0)

    def format(self):
        return "coscos(%.17g, %.17g)" % (self.amplitude, self.frequency)


@dataclass(frozen=True)
class SinSinTerm:
    amplitude: float
    frequency: float

    def __call__(self, x, y):
        k = self.frequency * np.pi
        return self.amplitude * (np.sin(k * x) * np.sin(k * y) + 1.0)

    def format(self):
        return "sinsin(%.17g, %.17g)" % (self.amplitude, self.frequency)


_TERM_KINDS = {"gaussian": (GaussianTerm, 4),
               "coscos": (CosCosTerm, 2),
               "sinsin": (SinSinTerm, 2)}

_TERM_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^()]*)\)\s*$")


def parse_terms(text, line=None):
    """Parse an initial-condition expression into a tuple of terms."""
    text = text.strip()
    if text == "zero" or text == "":
        return ()
    terms = []
    for piece in text.split("+"):
        m = _TERM_RE.match(piece)
        if not m:
            raise ConfigError("cannot parse initial-condition term %r"
                              % piece.strip(), line)
        name, argtext = m.group(1), m.group(2)
        if name not in _TERM_KINDS:
            raise ConfigError("unknown initial-condition term %r (expected "
                              "gaussian, coscos or sinsin)" % name, line)
        cls, argc = _TERM_KINDS[name]
        args = [a for a in (t.strip() for t in argtext.split(",")) if a]
        if len(args) != argc:
            raise ConfigError("%s takes %d arguments, got %d"
                              % (name, argc, len(args)), line)
        try:
            values = [float(a) for a in args]
        except ValueError:
            raise ConfigError("non-numeric argument in %r" % piece.strip(),
                              line) from None
        terms.append(cls(*values))
    return tuple(terms)


def format_terms(terms):
    if not terms:
        return "zero"
    return " + ".join(t.format() for t in terms)


def evaluate_terms(terms, x, y):
    """Sum of terms at given coordinates (vectorized)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(np.broadcast(x, np.asarray(y)).shape)
    for t in terms:
        total = total + t(x, y)
    return total


# -- presets ----------------------------------------------------------------

_PRESETS = {
    "one_bulge": dict(
        tau=1, dt=1e-6, t_end=1e-4,
        u0=(GaussianTerm(1000.0, 100.0, 0.0, 0.0),),
        v0=(GaussianTerm(500.0, 50.0, 0.0, 0.0),),
        snapshot_times=(0.0, 4.4e-5, 1e-4),
        describe="single centered cell bulge that collapses in finite time",
    ),
    "three_bulges": dict(
        tau=0, dt=1e-5, t_end=1e-2,
        u0=(GaussianTerm(900.0, 100.0, 0.2, 0.0),
            GaussianTerm(800.0, 100.0, 0.0, 0.2),
            GaussianTerm(1000.0, 100.0, 0.3, 0.3)),
        v0=(),
        snapshot_times=(0.0, 2e-3, 4e-3, 6e-3, 8e-3, 1e-2),
        describe="three merging bulges drifting toward a corner "
                 "(elliptic chemoattractant)",
    ),
    "multi_peak": dict(
        tau=1, dt=1e-7, t_end=1e-4,
        u0=(CosCosTerm(1000.0, 2.0),),
        v0=(SinSinTerm(500.0, 3.0),),
        snapshot_times=(0.0, 5e-5, 1e-4),
        describe="trigonometric initial data collapsing into several peaks",
    ),
}

assert tuple(_PRESETS) == PRESET_NAMES


def preset_description(name):
    return _PRESETS[name]["describe"]


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one run."""

    pattern: str = "mesh1"
    n: int = 64
    domain: tuple = (-0.5, 0.5, -0.5, 0.5)
    params: ModelParams = field(default_factory=ModelParams)
    preset: str = None
    u0_terms: tuple = ()
    v0_terms: tuple = ()
    csv_path: str = None
    vtk_dir: str = None
    snapshot_times: tuple = ()
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    flux: str = "truncated"

    def __post_init__(self):
        if self.pattern not in ("mesh1", "mesh2"):
            raise ConfigError("pattern must be 'mesh1' or 'mesh2', got %r"
                              % (self.pattern,))
        if self.n < 1:
            raise ConfigError("n must be at least 1, got %d" % self.n)
        if self.preset is not None and self.preset not in PRESET_NAMES:
            raise ConfigError("unknown preset %r; choose from %s"
                              % (self.preset, ", ".join(PRESET_NAMES)))
        if self.flux not in _FLUX_CHOICES:
            raise ConfigError("flux must be 'truncated' or 'non_truncated', "
                              "got %r" % (self.flux,))
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.params.t_end:
                raise ConfigError("snapshot time %g outside [0, t_end=%g]"
                                  % (t, self.params.t_end))


def build_mesh(cfg):
    return build_structured_mesh(cfg.pattern, cfg.n, cfg.domain)


def preset_initial_conditions(name, mesh):
    """Initial fields of a named preset on a given mesh.

    Returns ``(u0, v0)``: the density sampled at barycenters and the
    chemoattractant at vertices.  The ``three_bulges`` preset defines no
    chemoattractant data (its elliptic step never reads it); a zero field
    is returned with a warning.
    """
    if name not in _PRESETS:
        raise ConfigError("unknown preset %r; choose from %s"
                          % (name, ", ".join(PRESET_NAMES)))
    preset = _PRESETS[name]
    u0 = evaluate_terms(preset["u0"], mesh.barycenters[:, 0],
                        mesh.barycenters[:, 1])
    if not preset["v0"]:
        warnings.warn("preset %r defines no chemoattractant data; using a "
                      "zero field (the elliptic step never reads it)" % name)
        v0 = np.zeros(mesh.n_vertices)
    else:
        v0 = evaluate_terms(preset["v0"], mesh.vertices[:, 0],
                            mesh.vertices[:, 1])
    return u0, v0


def initial_fields(cfg, mesh):
    """Sample the configured initial data on a mesh."""
    u0 = evaluate_terms(cfg.u0_terms, mesh.barycenters[:, 0],
                        mesh.barycenters[:, 1])
    if cfg.params.tau == 0:
        if cfg.v0_terms:
            warnings.warn("tau = 0: the chemoattractant history is never "
                          "read; ignoring the configured v0")
        v0 = np.zeros(mesh.n_vertices)
    else:
        v0 = evaluate_terms(cfg.v0_terms, mesh.vertices[:, 0],
                            mesh.vertices[:, 1])
    return u0, v0


# -- parsing ----------------------------------------------------------------

_SECTIONS = {
    "mesh": ("pattern", "n", "domain"),
    "params": ("k0", "k1", "k2", "k3", "k4", "tau", "eps", "dt", "t_end"),
    "initial": ("preset", "u0", "v0"),
    "output": ("csv", "vtk_dir", "snapshot_times"),
    "newton": ("tol_residual", "max_iters", "damping", "max_halvings"),
    "scheme": ("flux",),
}


def _scan(text):
    """Yield (section, key, value, line) tuples; syntax errors only."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError("unknown section [%s]" % section, lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value', got %r" % raw.strip(),
                              lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _SECTIONS[section]:
            raise ConfigError("unknown key %r in section [%s]"
                              % (key, section), lineno)
        yield section, key, value, lineno


def _to_float(value, key, line):
    try:
        return float(value)
    except ValueError:
        raise ConfigError("%s expects a number, got %r" % (key, value),
                          line) from None


def _to_int(value, key, line):
    try:
        return int(value)
    except ValueError:
        raise ConfigError("%s expects an integer, got %r" % (key, value),
                          line) from None


def load_config(text):
    """Parse configuration text into a validated ``RunConfig``."""
    entries = {}
    for section, key, value, line in _scan(text):
        entries[(section, key)] = (value, line)

    def take(section, key):
        return entries.pop((section, key), (None, None))

    # preset defaults first; explicit keys override below
    preset, preset_line = take("initial", "preset")
    param_kw = {}
    cfg_kw = {}
    if preset is not None:
        if preset not in _PRESETS:
            raise ConfigError("unknown preset %r; choose from %s"
                              % (preset, ", ".join(PRESET_NAMES)), preset_line)
        chosen = _PRESETS[preset]
        param_kw.update(tau=chosen["tau"], dt=chosen["dt"],
                        t_end=chosen["t_end"])
        cfg_kw.update(u0_terms=chosen["u0"], v0_terms=chosen["v0"],
                      snapshot_times=chosen["snapshot_times"])

    value, line = take("mesh", "pattern")
    if value is not None:
        cfg_kw["pattern"] = value.lower()
    value, line = take("mesh", "n")
    if value is not None:
        cfg_kw["n"] = _to_int(value, "n", line)
    value, line = take("mesh", "domain")
    if value is not None:
        parts = value.split()
        if len(parts) != 4:
            raise ConfigError("domain expects 4 numbers "
                              "(xmin xmax ymin ymax)", line)
        cfg_kw["domain"] = tuple(_to_float(p, "domain", line) for p in parts)

    for key in ("k0", "k1", "k2", "k3", "k4", "eps", "dt", "t_end"):
        value, line = take("params", key)
        if value is not None:
            param_kw[key] = _to_float(value, key, line)
    value, tau_line = take("params", "tau")
    if value is not None:
        param_kw["tau"] = _to_int(value, "tau", tau_line)
    try:
        params = ModelParams(**param_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), tau_line) from None
    cfg_kw["params"] = params

    for key, attr in (("u0", "u0_terms"), ("v0", "v0_terms")):
        value, line = take("initial", key)
        if value is not None:
            cfg_kw[attr] = parse_terms(value, line)

    value, line = take("output", "csv")
    if value is not None:
        cfg_kw["csv_path"] = value
    value, line = take("output", "vtk_dir")
    if value is not None:
        cfg_kw["vtk_dir"] = value
    value, line = take("output", "snapshot_times")
    if value is not None:
        cfg_kw["snapshot_times"] = tuple(
            _to_float(p, "snapshot_times", line) for p in value.split())
    elif preset is not None:
        # preset-inherited snapshot times adapt to an overridden horizon
        cfg_kw["snapshot_times"] = tuple(
            t for t in cfg_kw["snapshot_times"] if t <= params.t_end)

    newton_kw = {}
    value, line = take("newton", "tol_residual")
    if value is not None:
        newton_kw["tol_residual"] = _to_float(value, "tol_residual", line)
    value, line = take("newton", "max_iters")
    if value is not None:
        newton_kw["max_iters"] = _to_int(value, "max_iters", line)
    value, line = take("newton", "max_halvings")
    if value is not None:
        newton_kw["max_halvings"] = _to_int(value, "max_halvings", line)
    value, nline = take("newton", "damping")
    if value is not None:
        newton_kw["damping"] = value
    try:
        newton = NewtonSettings(**newton_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), nline) from None
    cfg_kw["newton"] = newton

    value, line = take("scheme", "flux")
    if value is not None:
        if value not in _FLUX_CHOICES:
            raise ConfigError("flux must be 'truncated' or 'non_truncated', "
                              "got %r" % value, line)
        cfg_kw["flux"] = value

    assert not entries
    return RunConfig(preset=preset, **cfg_kw)


def dumps_config(cfg):
    """Serialize a RunConfig; ``load_config`` of the result reproduces it."""
    p = cfg.params
    lines = [
        "[mesh]",
        "pattern = %s" % cfg.pattern,
        "n = %d" % cfg.n,
        "domain = %.17g %.17g %.17g %.17g" % cfg.domain,
        "",
        "[params]",
    ]
    for key in ("k0", "k1", "k2", "k3", "k4"):
        lines.append("%s = %.17g" % (key, getattr(p, key)))
    lines += [
        "tau = %d" % p.tau,
        "eps = %.17g" % p.eps,
        "dt = %.17g" % p.dt,
        "t_end = %.17g" % p.t_end,
        "",
        "[initial]",
    ]
    if cfg.preset is not None:
        lines.append("preset = %s" % cfg.preset)
    lines.append("u0 = %s" % format_terms(cfg.u0_terms))
    lines.append("v0 = %s" % format_terms(cfg.v0_terms))
    lines += ["", "[output]"]
    if cfg.csv_path is not None:
        lines.append("csv = %s" % cfg.csv_path)
    if cfg.vtk_dir is not None:
        lines.append("vtk_dir = %s" % cfg.vtk_dir)
    lines.append("snapshot_times = %s"
                 % " ".join("%.17g" % t for t in cfg.snapshot_times))
    n = cfg.newton
    lines += [
        "",
        "[newton]",
        "tol_residual = %.17g" % n.tol_residual,
        "max_iters = %d" % n.max_iters,
        "damping = %s" % n.damping,
        "max_halvings = %d" % n.max_halvings,
        "",
        "[scheme]",
        "flux = %s" % cfg.flux,
        "",
    ]
    return "\n".join(lines)
