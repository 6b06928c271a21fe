"""Run configuration: flat key-value files, validation, resolved write-back.

A config file is plain text, one `key = value` per line, with `#` comments
and blank lines ignored.  Loading resolves every default (learning rate and
tolerances depend on the optimizer, point counts on the problem) and
validates cross-field consistency, so the object handed to the trainer is
fully explicit.  `config_text` renders it back in canonical key order;
every run writes that rendering next to its artifacts for provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .problems import get_problem

PINN_OPTIMIZERS = ("sgd", "adam")
CPINN_OPTIMIZERS = ("extrasgd", "extraadam", "cgd", "acgd")
ACTIVATIONS = ("tanh", "relu")

_DEFAULT_LR = {
    "sgd": 1e-2,
    "extrasgd": 1e-2,
    "cgd": 1e-2,
    "adam": 1e-3,
    "extraadam": 1e-3,
    "acgd": 1e-3,
}
_DEFAULT_INNER_RTOL = {"cgd": 1e-12, "acgd": 1e-7}

_INT_KEYS = {
    "seed",
    "budget_iterations",
    "budget_forward_passes",
    "generator_layers",
    "generator_width",
    "discriminator_layers",
    "discriminator_width",
    "inner_max_iterations",
    "eval_every",
    "eval_grid",
    "curriculum_subsets",
}
_FLOAT_KEYS = {
    "lr",
    "beta1",
    "beta2",
    "eps",
    "inner_rtol",
    "inner_atol",
    "curriculum_threshold",
}
_BOOL_KEYS = {"warm_start", "curriculum"}
_STR_KEYS = {
    "problem",
    "method",
    "optimizer",
    "generator_activation",
    "discriminator_activation",
    "output_dir",
}


@dataclass
class RunConfig:
    """One training run, fully resolved.

    `budget_iterations` and `budget_forward_passes` are caps; either may be
    None (uncapped) but not both.  `points` holds the complete per-group
    collocation counts for the chosen problem.  Discriminator fields are
    None exactly when `method` is "pinn".
    """

    problem: str
    method: str
    optimizer: str
    output_dir: str
    seed: int = 0
    budget_iterations: int | None = None
    budget_forward_passes: int | None = None
    generator_layers: int = 3
    generator_width: int = 50
    generator_activation: str = "tanh"
    discriminator_layers: int | None = None
    discriminator_width: int | None = None
    discriminator_activation: str | None = None
    points: dict[str, int] = field(default_factory=dict)
    lr: float = 0.0
    beta1: float = 0.99
    beta2: float = 0.99
    eps: float = 0.0
    inner_rtol: float = 0.0
    inner_atol: float = 1e-20
    inner_max_iterations: int = 0
    warm_start: bool = False
    eval_every: int = 100
    eval_grid: int = 100
    curriculum: bool = False
    curriculum_subsets: int = 10
    curriculum_threshold: float = 1e-7


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected on/off, got {raw!r}")


def _parse_lines(text: str) -> dict[str, str]:
    seen: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = value
    return seen


def parse_config_text(text: str) -> RunConfig:
    """Parse and resolve a config; raises ConfigError on any inconsistency."""
    raw = _parse_lines(text)

    typed: dict[str, object] = {}
    point_overrides: dict[str, int] = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                typed[key] = int(value)
            elif key in _FLOAT_KEYS:
                typed[key] = float(value)
            elif key in _BOOL_KEYS:
                typed[key] = _parse_bool(key, value)
            elif key in _STR_KEYS:
                typed[key] = value
            elif key.startswith("points_"):
                point_overrides[key[len("points_"):]] = int(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from exc

    for required in ("problem", "method", "optimizer", "output_dir"):
        if required not in typed:
            raise ConfigError(f"missing required key {required!r}")

    method = str(typed["method"])
    optimizer = str(typed["optimizer"])
    if method not in ("pinn", "cpinn"):
        raise ConfigError(f"method must be pinn or cpinn, got {method!r}")
    allowed = PINN_OPTIMIZERS if method == "pinn" else CPINN_OPTIMIZERS
    if optimizer not in allowed:
        raise ConfigError(
            f"optimizer {optimizer!r} is not valid for method {method!r}; "
            f"expected one of {', '.join(allowed)}"
        )

    try:
        problem = get_problem(str(typed["problem"]))
    except Exception as exc:
        raise ConfigError(f"problem: {exc}") from exc
    try:
        counts = problem.resolve_counts(point_overrides)
    except Exception as exc:
        raise ConfigError(f"points: {exc}") from exc

    disc_keys = [k for k in raw if k.startswith("discriminator_")]
    if method == "pinn" and disc_keys:
        raise ConfigError(
            f"method pinn must not specify a discriminator (found {', '.join(sorted(disc_keys))})"
        )

    cfg = RunConfig(
        problem=problem.problem_id,
        method=method,
        optimizer=optimizer,
        output_dir=str(typed["output_dir"]),
        seed=int(typed.get("seed", 0)),
        budget_iterations=typed.get("budget_iterations"),
        budget_forward_passes=typed.get("budget_forward_passes"),
        generator_layers=int(typed.get("generator_layers", 3)),
        generator_width=int(typed.get("generator_width", 50)),
        generator_activation=str(typed.get("generator_activation", "tanh")),
        points=counts,
        lr=float(typed.get("lr", _DEFAULT_LR[optimizer])),
        beta1=float(typed.get("beta1", 0.99)),
        beta2=float(typed.get("beta2", 0.99)),
        eps=float(typed.get("eps", 1e-6 if optimizer == "acgd" else 1e-8)),
        inner_rtol=float(typed.get("inner_rtol", _DEFAULT_INNER_RTOL.get(optimizer, 0.0))),
        inner_atol=float(typed.get("inner_atol", 1e-20)),
        inner_max_iterations=int(typed.get("inner_max_iterations", 0)),
        warm_start=bool(typed.get("warm_start", False)),
        eval_every=int(typed.get("eval_every", 100)),
        eval_grid=int(typed.get("eval_grid", 100)),
        curriculum=bool(typed.get("curriculum", False)),
        curriculum_subsets=int(typed.get("curriculum_subsets", 10)),
        curriculum_threshold=float(typed.get("curriculum_threshold", 1e-7)),
    )
    if method == "cpinn":
        if "discriminator_layers" not in typed or "discriminator_width" not in typed:
            raise ConfigError(
                "method cpinn requires discriminator_layers and discriminator_width"
            )
        cfg.discriminator_layers = int(typed["discriminator_layers"])
        cfg.discriminator_width = int(typed["discriminator_width"])
        cfg.discriminator_activation = str(typed.get("discriminator_activation", "relu"))
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    def fail(msg: str):
        raise ConfigError(msg)

    if cfg.budget_iterations is None and cfg.budget_forward_passes is None:
        fail("set budget_iterations and/or budget_forward_passes")
    if cfg.budget_iterations is not None and cfg.budget_iterations < 0:
        fail("budget_iterations must be >= 0")
    if cfg.budget_forward_passes is not None and cfg.budget_forward_passes < 1:
        fail("budget_forward_passes must be >= 1")
    if cfg.generator_layers < 1 or cfg.generator_width < 1:
        fail("generator depth and width must be >= 1")
    if cfg.generator_activation not in ACTIVATIONS:
        fail(f"generator_activation must be one of {ACTIVATIONS}")
    if cfg.method == "cpinn":
        if cfg.discriminator_layers is None or cfg.discriminator_width is None:
            fail("method cpinn requires a discriminator architecture")
        if cfg.discriminator_layers < 1 or cfg.discriminator_width < 1:
            fail("discriminator depth and width must be >= 1")
        if cfg.discriminator_activation not in ACTIVATIONS:
            fail(f"discriminator_activation must be one of {ACTIVATIONS}")
    else:
        if (
            cfg.discriminator_layers is not None
            or cfg.discriminator_width is not None
            or cfg.discriminator_activation is not None
        ):
            fail("method pinn must not specify a discriminator")
    if not cfg.lr > 0.0:
        fail("lr must be > 0")
    for name in ("beta1", "beta2"):
        val = getattr(cfg, name)
        if not 0.0 <= val < 1.0:
            fail(f"{name} must lie in [0, 1)")
    if cfg.eps < 0.0 or cfg.inner_rtol < 0.0 or cfg.inner_atol < 0.0:
        fail("eps and inner tolerances must be >= 0")
    if cfg.inner_max_iterations < 0:
        fail("inner_max_iterations must be >= 0 (0 means the solver default)")
    if cfg.eval_every < 1:
        fail("eval_every must be >= 1")
    if cfg.eval_grid < 2:
        fail("eval_grid must be >= 2")
    if cfg.curriculum_subsets < 1:
        fail("curriculum_subsets must be >= 1")
    if math.isnan(cfg.curriculum_threshold) or cfg.curriculum_threshold < 0.0:
        fail("curriculum_threshold must be >= 0 (inf allowed)")
    if not cfg.output_dir:
        fail("output_dir must be non-empty")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_text(cfg: RunConfig) -> str:
    """Canonical resolved rendering; parsing it reproduces `cfg` exactly."""
    lines = [
        ("problem", cfg.problem),
        ("method", cfg.method),
        ("optimizer", cfg.optimizer),
        ("seed", cfg.seed),
    ]
    if cfg.budget_iterations is not None:
        lines.append(("budget_iterations", cfg.budget_iterations))
    if cfg.budget_forward_passes is not None:
        lines.append(("budget_forward_passes", cfg.budget_forward_passes))
    lines += [
        ("generator_layers", cfg.generator_layers),
        ("generator_width", cfg.generator_width),
        ("generator_activation", cfg.generator_activation),
    ]
    if cfg.method == "cpinn":
        lines += [
            ("discriminator_layers", cfg.discriminator_layers),
            ("discriminator_width", cfg.discriminator_width),
            ("discriminator_activation", cfg.discriminator_activation),
        ]
    group_order = get_problem(cfg.problem).group_names()
    lines += [(f"points_{name}", cfg.points[name]) for name in group_order]
    lines += [
        ("lr", cfg.lr),
        ("beta1", cfg.beta1),
        ("beta2", cfg.beta2),
        ("eps", cfg.eps),
        ("inner_rtol", cfg.inner_rtol),
        ("inner_atol", cfg.inner_atol),
        ("inner_max_iterations", cfg.inner_max_iterations),
        ("warm_start", cfg.warm_start),
        ("eval_every", cfg.eval_every),
        ("eval_grid", cfg.eval_grid),
        ("curriculum", cfg.curriculum),
        ("curriculum_subsets", cfg.curriculum_subsets),
        ("curriculum_threshold", cfg.curriculum_threshold),
        ("output_dir", cfg.output_dir),
    ]
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in lines)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)
