"""Experiment configuration: a fixed INI schema plus built-in presets.

Sections and keys:

    [scenario]
      hypothesis_labels = 0 1          explicit grid, or
      hypothesis_grid   = 201          uniform [0,1] grid
      instance_labels   = 0 1          optional; defaults to 0..k-1
      loss_shape        = 2 2          with loss = row-major numbers, or
      loss_kind         = product | abs_diff | squared | neg_mismatch
      aux_loss_shape / aux_loss / aux_loss_kind    optional auxiliary loss
      test_dist         = 0.5 0.5
      train_dist        = 0.5 0.5
      n                 = 1

    [learner]   kind = erm | gibbs | constant, beta, index
    [sweep]     r_grid = linspace a b k | list v1 v2 ..., mu_grid = 201
    [bounds]    include = mi_bound max_gap_over_mu ...
    [validate]  count = 20, betas = 0.5 1 2
    [misspec]   sigma2, delta, n, betas = invsqrt | zero | list v1 ...,
                eps_base, eps_base_half_delta, gamma_grid
    [output]    csv, svg, manifest file names

Matrices are row-major (hypotheses x instances) with explicit dimensions.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .learners import LearnerSpec
from .scenario import Scenario, hypothesis_grid, scenario

__all__ = ["ExperimentConfig", "MisspecSettings", "parse_config", "preset", "PRESET_NAMES"]

LOSS_KINDS = {
    "product": lambda w, z: w * z,
    "abs_diff": lambda w, z: np.abs(w - z),
    "squared": lambda w, z: (w - z) ** 2,
    "neg_mismatch": lambda w, z: -(w != z).astype(float),
}


@dataclass(frozen=True)
class MisspecSettings:
    sigma2: float
    delta: float
    n: int
    betas: np.ndarray
    eps_base: float
    eps_base_half_delta: float
    gamma_grid: np.ndarray


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario | None = None
    learner: LearnerSpec | None = None
    r_grid: np.ndarray | None = None
    mu_grid: int = 201
    bounds: tuple[str, ...] = ()
    validate_count: int = 20
    validate_betas: tuple[float, ...] = (0.5, 1.0, 2.0)
    misspec: MisspecSettings | None = None
    outputs: dict = field(default_factory=dict)
    canonical_text: str = ""

    def hash_for(self, seed: int, unit: str) -> str:
        payload = f"{self.canonical_text}|seed={seed}|unit={unit}".encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _fail(section: str, key: str, message: str) -> ConfigError:
    return ConfigError(f"[{section}] {key}: {message}")


def _floats(raw: str, section: str, key: str) -> list[float]:
    out = []
    for token in raw.split():
        try:
            out.append(float(token))
        except ValueError:
            raise _fail(section, key, f"cannot parse {token!r} as a number") from None
    if not out:
        raise _fail(section, key, "expected at least one number")
    return out


def _int(raw: str, section: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise _fail(section, key, f"cannot parse {raw!r} as an integer") from None


def _grid(raw: str, section: str, key: str) -> np.ndarray:
    tokens = raw.split()
    if tokens and tokens[0] == "linspace":
        if len(tokens) != 4:
            raise _fail(section, key, "linspace needs: linspace start stop count")
        start, stop = float(tokens[1]), float(tokens[2])
        count = _int(tokens[3], section, key)
        if count < 1:
            raise _fail(section, key, "count must be positive")
        return np.linspace(start, stop, count)
    if tokens and tokens[0] == "list":
        values = _floats(" ".join(tokens[1:]), section, key)
        arr = np.array(values)
        if np.any(np.diff(arr) < 0):
            raise _fail(section, key, "grid values must be sorted ascending")
        return arr
    raise _fail(section, key, "grid must start with 'linspace' or 'list'")


def _matrix(cfg, section: str, base: str, w_labels, z_labels) -> np.ndarray | None:
    kind_key, shape_key = f"{base}_kind", f"{base}_shape"
    has_inline = cfg.has_option(section, base)
    has_kind = cfg.has_option(section, kind_key)
    if has_inline and has_kind:
        raise _fail(section, base, f"give either {base} or {kind_key}, not both")
    if has_kind:
        kind = cfg.get(section, kind_key).strip()
        if kind not in LOSS_KINDS:
            raise _fail(section, kind_key,
                        f"unknown kind {kind!r}; choose from {sorted(LOSS_KINDS)}")
        return LOSS_KINDS[kind](w_labels[:, None], z_labels[None, :])
    if has_inline:
        if not cfg.has_option(section, shape_key):
            raise _fail(section, shape_key, f"required alongside {base}")
        shape = _floats(cfg.get(section, shape_key), section, shape_key)
        if len(shape) != 2 or any(v != int(v) or v < 1 for v in shape):
            raise _fail(section, shape_key, "expected two positive integers")
        rows, cols = int(shape[0]), int(shape[1])
        data = _floats(cfg.get(section, base), section, base)
        if len(data) != rows * cols:
            raise _fail(section, base,
                        f"expected {rows * cols} row-major entries, got {len(data)}")
        return np.array(data).reshape(rows, cols)
    return None


def _parse_scenario(cfg) -> Scenario | None:
    if not cfg.has_section("scenario"):
        return None
    sec = "scenario"
    for key in ("test_dist", "train_dist"):
        if not cfg.has_option(sec, key):
            raise _fail(sec, key, "required")
    test = _floats(cfg.get(sec, "test_dist"), sec, "test_dist")
    train = _floats(cfg.get(sec, "train_dist"), sec, "train_dist")
    if len(test) != len(train):
        raise _fail(sec, "train_dist", "test and train alphabets differ in size")
    if cfg.has_option(sec, "instance_labels"):
        z_labels = np.array(_floats(cfg.get(sec, "instance_labels"), sec, "instance_labels"))
        if z_labels.size != len(test):
            raise _fail(sec, "instance_labels", "length must match the distributions")
    else:
        z_labels = np.arange(len(test), dtype=float)
    has_labels = cfg.has_option(sec, "hypothesis_labels")
    has_grid = cfg.has_option(sec, "hypothesis_grid")
    if has_labels == has_grid:
        raise _fail(sec, "hypothesis_labels",
                    "give exactly one of hypothesis_labels / hypothesis_grid")
    if has_labels:
        w_labels = np.array(_floats(cfg.get(sec, "hypothesis_labels"), sec, "hypothesis_labels"))
    else:
        w_labels = hypothesis_grid(_int(cfg.get(sec, "hypothesis_grid"), sec, "hypothesis_grid"))
    loss = _matrix(cfg, sec, "loss", w_labels, z_labels)
    if loss is None:
        raise _fail(sec, "loss", "required (inline matrix or loss_kind)")
    if loss.shape != (w_labels.size, z_labels.size):
        raise _fail(sec, "loss", f"shape {loss.shape} does not match "
                    f"({w_labels.size} hypotheses, {z_labels.size} instances)")
    aux = _matrix(cfg, sec, "aux_loss", w_labels, z_labels)
    n = _int(cfg.get(sec, "n", fallback="1"), sec, "n")
    try:
        return scenario(test, train, w_labels, loss, aux_loss=aux, n=n)
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from exc


def _parse_learner(cfg) -> LearnerSpec | None:
    if not cfg.has_section("learner"):
        return None
    sec = "learner"
    kind = cfg.get(sec, "kind", fallback="").strip()
    try:
        return LearnerSpec(
            kind=kind,
            beta=float(cfg.get(sec, "beta", fallback="0")),
            index=_int(cfg.get(sec, "index", fallback="0"), sec, "index"),
        )
    except ValueError as exc:
        raise ConfigError(f"[learner] {exc}") from exc


def _parse_misspec(cfg) -> MisspecSettings | None:
    if not cfg.has_section("misspec"):
        return None
    sec = "misspec"
    n = _int(cfg.get(sec, "n", fallback="100"), sec, "n")
    raw_betas = cfg.get(sec, "betas", fallback="zero").split()
    if raw_betas[0] == "invsqrt":
        betas = np.full(n, 1.0 / np.sqrt(n))
    elif raw_betas[0] == "zero":
        betas = np.zeros(n)
    elif raw_betas[0] == "list":
        betas = np.array(_floats(" ".join(raw_betas[1:]), sec, "betas"))
    else:
        raise _fail(sec, "betas", "expected 'invsqrt', 'zero', or 'list v1 v2 ...'")
    return MisspecSettings(
        sigma2=float(cfg.get(sec, "sigma2", fallback="0.25")),
        delta=float(cfg.get(sec, "delta", fallback="0.1")),
        n=n,
        betas=betas,
        eps_base=float(cfg.get(sec, "eps_base", fallback="0")),
        eps_base_half_delta=float(cfg.get(sec, "eps_base_half_delta", fallback="0")),
        gamma_grid=_grid(cfg.get(sec, "gamma_grid", fallback="linspace 0.001 0.05 20"),
                         sec, "gamma_grid"),
    )


def _canonical(cfg) -> str:
    lines = []
    for section in sorted(cfg.sections()):
        lines.append(f"[{section}]")
        for key in sorted(cfg.options(section)):
            value = " ".join(cfg.get(section, key).split())
            lines.append(f"{key} = {value}")
    return "\n".join(lines)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse a configuration document; raises ConfigError with diagnostics."""
    cfg = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                    comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        cfg.read_file(io.StringIO(text), source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    known = {"scenario", "learner", "sweep", "bounds", "validate", "misspec", "output"}
    unknown = set(cfg.sections()) - known
    if unknown:
        raise ConfigError(f"{source}: unknown sections {sorted(unknown)}")

    r_grid = None
    mu_grid = 201
    if cfg.has_section("sweep"):
        if cfg.has_option("sweep", "r_grid"):
            r_grid = _grid(cfg.get("sweep", "r_grid"), "sweep", "r_grid")
            if np.any(r_grid < 0):
                raise _fail("sweep", "r_grid", "rates must be nonnegative")
        if cfg.has_option("sweep", "mu_grid"):
            mu_grid = _int(cfg.get("sweep", "mu_grid"), "sweep", "mu_grid")
            if mu_grid < 2:
                raise _fail("sweep", "mu_grid", "needs at least 2 points")

    bounds: tuple[str, ...] = ()
    if cfg.has_section("bounds") and cfg.has_option("bounds", "include"):
        bounds = tuple(cfg.get("bounds", "include").split())

    validate_count = 20
    validate_betas: tuple[float, ...] = (0.5, 1.0, 2.0)
    if cfg.has_section("validate"):
        validate_count = _int(cfg.get("validate", "count", fallback="20"),
                              "validate", "count")
        if cfg.has_option("validate", "betas"):
            validate_betas = tuple(_floats(cfg.get("validate", "betas"),
                                           "validate", "betas"))

    outputs = {}
    if cfg.has_section("output"):
        for key in cfg.options("output"):
            outputs[key] = cfg.get("output", key).strip()

    return ExperimentConfig(
        scenario=_parse_scenario(cfg),
        learner=_parse_learner(cfg),
        r_grid=r_grid,
        mu_grid=mu_grid,
        bounds=bounds,
        validate_count=validate_count,
        validate_betas=validate_betas,
        misspec=_parse_misspec(cfg),
        outputs=outputs,
        canonical_text=_canonical(cfg),
    )


_FIG1 = """
[scenario]
hypothesis_labels = 0 1
instance_labels = 0 1
loss_kind = product
test_dist = 0.5 0.5
train_dist = 0.5 0.5
n = 1

[sweep]
r_grid = linspace 0 1.5 50
mu_grid = 201

[bounds]
include = mi_bound max_gap_over_mu

[output]
csv = fig1.csv
svg = fig1.svg
manifest = fig1_manifest.txt
"""

_FIG2 = """
[scenario]
hypothesis_grid = 201
instance_labels = 0 1
loss_kind = abs_diff
test_dist = 0.5 0.5
train_dist = 0.5 0.5
n = 1

[sweep]
r_grid = linspace 0 1.5 50
mu_grid = 201

[bounds]
include = mi_bound max_gap_over_mu

[output]
csv = fig2.csv
svg = fig2.svg
manifest = fig2_manifest.txt
"""

_FIG3 = """
[scenario]
hypothesis_labels = 0 1
instance_labels = 0 1
loss_kind = product
aux_loss_kind = neg_mismatch
test_dist = 0.5 0.5
train_dist = 0.5 0.5
n = 10

[sweep]
r_grid = linspace 0 1.5 50

[bounds]
include = max_gap max_gap_aux

[output]
csv = fig3.csv
svg = fig3.svg
manifest = fig3_manifest.txt
"""

_FIG4 = """
[scenario]
hypothesis_grid = 201
instance_labels = 0 1
loss_kind = abs_diff
aux_loss_kind = squared
test_dist = 0.5 0.5
train_dist = 0.5 0.5
n = 10

[sweep]
r_grid = linspace 0 1.5 50

[bounds]
include = max_gap max_gap_aux

[output]
csv = fig4.csv
svg = fig4.svg
manifest = fig4_manifest.txt
"""

_PRESETS = {"fig1": _FIG1, "fig2": _FIG2, "fig3": _FIG3, "fig4": _FIG4}
PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> tuple[str, ExperimentConfig]:
    """Built-in experiment preset: returns (config text, parsed config)."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = _PRESETS[name].strip() + "\n"
    return text, parse_config(text, source=f"<preset:{name}>")
