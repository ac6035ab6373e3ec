"""Run configuration: schema, line-oriented key=value files, presets.

The on-disk format is one `key = value` pair per line with dotted key names
(blank lines and '#' comments allowed).  The same dotted keys are accepted
as CLI flags and as the JSON config object of the HTTP service, so there is
exactly one name for every parameter.  Unknown keys are hard errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .branches import FidelityConfig, PriorConfig, PRIOR_KINDS
from .controller import ALPHA_MODES, UNCERTAINTY_MODES, ControllerConfig
from .errors import ParameterError, ValidationError
from .operators import KINDS as OPERATOR_KINDS

PRESETS = {"conservative": 0.0, "balanced": 0.5, "enhancement": 1.0}

DEFAULT_STEPS = 60


@dataclass(frozen=True)
class RunConfig:
    """Everything one restoration run needs besides the observation."""

    steps: int = DEFAULT_STEPS
    seed: int = 0
    record_every: Optional[int] = None  # None = 1 for sizes <= 64, else 5
    mode_preset: Optional[str] = None
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    fidelity: FidelityConfig = field(default_factory=FidelityConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if self.record_every is not None and self.record_every < 1:
            raise ValidationError(f"record_every must be >= 1, got {self.record_every}")
        if self.mode_preset is not None and self.mode_preset not in PRESETS:
            raise ParameterError(f"mode_preset must be one of {sorted(PRESETS)}, got {self.mode_preset!r}")


def apply_preset(name: str) -> dict[str, float]:
    """Partial config (dotted keys) for a named restoration mode."""
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return {"controller.lambda": PRESETS[name]}


def resolve(cfg: RunConfig, image_size: int | None = None) -> RunConfig:
    """Apply the mode preset and the record_every size default."""
    out = cfg
    if cfg.mode_preset is not None:
        out = replace(out, controller=replace(out.controller, lam=PRESETS[cfg.mode_preset]))
    if out.record_every is None:
        small = image_size is None or image_size <= 64
        out = replace(out, record_every=1 if small else 5)
    return out


# ---------------------------------------------------------------------------
# schema


def _parse_float(key, raw):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParameterError(f"{key}: expected a real number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        v = int(str(raw))
    except (TypeError, ValueError):
        raise ParameterError(f"{key}: expected an integer, got {raw!r}") from None
    return v


def _parse_choice(choices):
    def inner(key, raw):
        v = str(raw)
        if v not in choices:
            raise ParameterError(f"{key}: expected one of {sorted(choices)}, got {raw!r}")
        return v

    return inner


# key -> (section, attribute, parser).  Section "" = RunConfig itself.
CONFIG_SCHEMA = {
    "steps": ("", "steps", _parse_int),
    "seed": ("", "seed", _parse_int),
    "record_every": ("", "record_every", _parse_int),
    "mode_preset": ("", "mode_preset", _parse_choice(tuple(PRESETS))),
    "controller.lambda": ("controller", "lam", _parse_float),
    "controller.beta1": ("controller", "beta1", _parse_float),
    "controller.beta2": ("controller", "beta2", _parse_float),
    "controller.beta3": ("controller", "beta3", _parse_float),
    "controller.alpha_mode": ("controller", "alpha_mode", _parse_choice(ALPHA_MODES)),
    "controller.window": ("controller", "window", _parse_int),
    "controller.uncertainty_mode": ("controller", "uncertainty_mode", _parse_choice(UNCERTAINTY_MODES)),
    "controller.ensemble_size": ("controller", "ensemble_size", _parse_int),
    "controller.u_init": ("controller", "u_init", _parse_float),
    "fidelity.eta": ("fidelity", "eta", _parse_float),
    "fidelity.inner_iters": ("fidelity", "inner_iters", _parse_int),
    "prior.kind": ("prior", "kind", _parse_choice(PRIOR_KINDS)),
    "prior.strength": ("prior", "strength", _parse_float),
    "prior.inner_iters": ("prior", "inner_iters", _parse_int),
    "prior.noise_inject": ("prior", "noise_inject", _parse_float),
    "prior.seed": ("prior", "seed", _parse_int),
}

OPERATOR_SCHEMA = {
    "op.kind": _parse_choice(OPERATOR_KINDS),
    "op.height": _parse_int,
    "op.width": _parse_int,
    "op.noise_sigma": _parse_float,
    "op.seed": _parse_int,
}


def parse_kv_text(text: str, source: str = "config") -> dict[str, str]:
    """Parse `key = value` lines; no schema checking here."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParameterError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ParameterError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def run_config_from_keys(items: dict, base: RunConfig | None = None,
                         allow_operator_keys: bool = False) -> RunConfig:
    """Build a RunConfig from dotted-key assignments over ``base``.

    Values may be strings (from files/flags) or native JSON numbers.  Unknown
    keys raise ParameterError naming the key.
    """
    cfg = base if base is not None else RunConfig()
    sections = {"": {}, "controller": {}, "fidelity": {}, "prior": {}}
    for key, raw in items.items():
        if key in OPERATOR_SCHEMA:
            if allow_operator_keys:
                continue
            raise ParameterError(f"{key}: operator keys are not accepted here")
        if key not in CONFIG_SCHEMA:
            raise ParameterError(f"unknown config key {key!r}")
        section, attr, parser = CONFIG_SCHEMA[key]
        sections[section][attr] = parser(key, raw)

    controller = replace(cfg.controller, **sections["controller"]) if sections["controller"] else cfg.controller
    fidelity = replace(cfg.fidelity, **sections["fidelity"]) if sections["fidelity"] else cfg.fidelity
    prior = replace(cfg.prior, **sections["prior"]) if sections["prior"] else cfg.prior
    return replace(cfg, controller=controller, fidelity=fidelity, prior=prior, **sections[""])


def run_config_from_text(text: str, base: RunConfig | None = None, source: str = "config") -> RunConfig:
    return run_config_from_keys(parse_kv_text(text, source), base=base, allow_operator_keys=True)


def run_config_to_keys(cfg: RunConfig) -> dict[str, str]:
    """Full dotted-key dump; float values use repr so round trips are exact."""
    out: dict[str, str] = {
        "steps": str(cfg.steps),
        "seed": str(cfg.seed),
    }
    if cfg.record_every is not None:
        out["record_every"] = str(cfg.record_every)
    if cfg.mode_preset is not None:
        out["mode_preset"] = cfg.mode_preset
    c = cfg.controller
    out.update({
        "controller.lambda": repr(c.lam),
        "controller.beta1": repr(c.beta1),
        "controller.beta2": repr(c.beta2),
        "controller.beta3": repr(c.beta3),
        "controller.alpha_mode": c.alpha_mode,
        "controller.window": str(c.window),
        "controller.uncertainty_mode": c.uncertainty_mode,
        "controller.ensemble_size": str(c.ensemble_size),
        "controller.u_init": repr(c.u_init),
    })
    f = cfg.fidelity
    out.update({
        "fidelity.eta": repr(f.eta),
        "fidelity.inner_iters": str(f.inner_iters),
    })
    p = cfg.prior
    out.update({
        "prior.kind": p.kind,
        "prior.strength": repr(p.strength),
        "prior.inner_iters": str(p.inner_iters),
        "prior.noise_inject": repr(p.noise_inject),
        "prior.seed": str(p.seed),
    })
    return out


def run_config_to_text(cfg: RunConfig, operator_keys: dict[str, str] | None = None) -> str:
    lines = [f"{k} = {v}" for k, v in run_config_to_keys(cfg).items()]
    if operator_keys:
        lines.extend(f"{k} = {v}" for k, v in operator_keys.items())
    return "\n".join(lines) + "\n"
