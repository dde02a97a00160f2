"""Device, source, gate, channel and protocol parameters.

All parameter holders are frozen dataclasses. Construction does not check
ranges so that a bad configuration can still be inspected; call
:func:`validate` (or :meth:`LinkParams.checked`) before using a set.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Mapping


class ParameterError(ValueError):
    """A parameter is outside its admissible range."""


class ClampWarning(UserWarning):
    """The effective deflection probability was clamped into [0, 1]."""


class Variant(str, Enum):
    DIRECT = "direct"
    TWIN_FIELD = "twin-field"


@dataclass(frozen=True)
class DetectorParams:
    eta: float = 0.78
    d: float = 1e-7


@dataclass(frozen=True)
class AuxSourceParams:
    # literal reproduction value; a Poisson source of intensity 5 would have y = e^-5
    y: float = 1.0 - math.exp(-5.0)
    e_p: float = 0.002


@dataclass(frozen=True)
class GateParams:
    deflection: float = 0.99
    epsilon: float = 0.0


@dataclass(frozen=True)
class ChannelSpec:
    alpha: float = 0.2
    length: float = 0.0
    variant: Variant = Variant.DIRECT
    t_override: float | None = None
    base10: bool = False


@dataclass(frozen=True)
class ProtocolParams:
    e: float = 0.03
    e_c: float = 0.015
    s: float = 0.5


@dataclass(frozen=True)
class LinkParams:
    """The full parameter set for one receiver configuration."""

    detector: DetectorParams = field(default_factory=DetectorParams)
    source: AuxSourceParams = field(default_factory=AuxSourceParams)
    gate: GateParams = field(default_factory=GateParams)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)

    @property
    def p(self) -> float:
        return effective_deflection(self.gate)

    def checked(self) -> "LinkParams":
        report = validate(self)
        if report.errors:
            raise ParameterError("; ".join(report.errors))
        return self

    def with_deflection(self, deflection: float, epsilon: float = 0.0) -> "LinkParams":
        return replace(self, gate=GateParams(deflection, epsilon))


def reference_settings(deflection: float = 0.99) -> LinkParams:
    """General simulation settings: eta=0.78, d=1e-7, e_P=0.2%, e_C=1.5%, y=1-e^-5."""
    return LinkParams(gate=GateParams(deflection=deflection))


def transmission_rate(channel: ChannelSpec) -> float:
    """Channel transmission t = e^(-alpha*l/10), square-rooted for twin-field links.

    With ``base10`` set the conventional dB law 10^(-alpha*l/10) is used instead.
    """
    if channel.t_override is not None:
        t = channel.t_override
        if not 0.0 < t <= 1.0:
            raise ParameterError(f"t_override must lie in (0, 1], got {t!r}")
    else:
        if channel.alpha < 0:
            raise ParameterError(f"alpha must be non-negative, got {channel.alpha!r}")
        if channel.length < 0:
            raise ParameterError(f"length must be non-negative, got {channel.length!r}")
        exponent = -channel.alpha * channel.length / 10.0
        t = 10.0**exponent if channel.base10 else math.exp(exponent)
    if Variant(channel.variant) is Variant.TWIN_FIELD:
        t = math.sqrt(t)
    if t <= 0.0:
        raise ParameterError("transmission underflows to zero; use t_override")
    return t


def effective_deflection(gate: GateParams) -> float:
    """P = |<1|F|0>|^2 + epsilon, clamped into [0, 1]."""
    p = gate.deflection + gate.epsilon
    if p < 0.0 or p > 1.0:
        clamped = min(1.0, max(0.0, p))
        warnings.warn(f"deflection + epsilon = {p!r} clamped to {clamped!r}", ClampWarning, stacklevel=2)
        return clamped
    return p


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(params: LinkParams) -> ValidationReport:
    errors: list[str] = []
    soft: list[str] = []
    det, src, gate, ch, proto = (params.detector, params.source, params.gate,
                                 params.channel, params.protocol)

    if not det.eta > 0:
        errors.append("eta must be positive")
    elif det.eta > 1:
        errors.append("eta must not exceed 1")
    if not 0 <= det.d < 1:
        errors.append("d must lie in [0, 1)")
    elif det.eta > 0 and det.d >= det.eta:
        soft.append("d not << eta")

    if not 0 <= src.y <= 1:
        errors.append("y must lie in [0, 1]")
    if not 0 <= src.e_p < 1:
        errors.append("e_p must lie in [0, 1)")

    if not 0 <= gate.deflection <= 1:
        errors.append("deflection must lie in [0, 1]")
    elif not 0 <= gate.deflection + gate.epsilon <= 1:
        soft.append("deflection + epsilon outside [0, 1]; it will be clamped")

    if ch.alpha < 0:
        errors.append("alpha must be non-negative")
    if ch.length < 0:
        errors.append("length must be non-negative")
    if ch.t_override is not None and not 0 < ch.t_override <= 1:
        errors.append("t_override must lie in (0, 1]")
    try:
        Variant(ch.variant)
    except ValueError:
        errors.append(f"unknown channel variant {ch.variant!r}")

    if not 0 < proto.e < 0.5:
        errors.append("e must lie in (0, 0.5)")
    if not 0 <= proto.e_c < 0.5:
        errors.append("e_c must lie in [0, 0.5)")
    if not 0 < proto.s <= 1:
        errors.append("s must lie in (0, 1]")

    return ValidationReport(tuple(errors), tuple(soft))


# flat configuration keys -> (section attribute, field name)
CONFIG_KEYS: dict[str, tuple[str, str]] = {
    "detector.eta": ("detector", "eta"),
    "detector.d": ("detector", "d"),
    "source.y": ("source", "y"),
    "source.e_p": ("source", "e_p"),
    "gate.deflection": ("gate", "deflection"),
    "gate.epsilon": ("gate", "epsilon"),
    "channel.alpha_db_per_km": ("channel", "alpha"),
    "channel.length_km": ("channel", "length"),
    "channel.variant": ("channel", "variant"),
    "channel.t_override": ("channel", "t_override"),
    "protocol.e": ("protocol", "e"),
    "protocol.e_c": ("protocol", "e_c"),
    "protocol.s": ("protocol", "s"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split(sep, 1))
        if key not in CONFIG_KEYS:
            raise ParameterError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read parameter file {str(path)!r}: {exc.strerror}") from exc
    return parse_config_text(text, str(path))


def params_from_mapping(mapping: Mapping[str, object], base: LinkParams | None = None) -> LinkParams:
    """Apply flat-key overrides on top of ``base`` (reference settings by default)."""
    base = base or LinkParams()
    sections = {f.name: {g.name: getattr(getattr(base, f.name), g.name)
                         for g in fields(getattr(base, f.name))}
                for f in fields(base)}
    for key, value in mapping.items():
        if key not in CONFIG_KEYS:
            raise ParameterError(f"unknown key {key!r}")
        section, name = CONFIG_KEYS[key]
        sections[section][name] = _coerce(key, name, value)
    return LinkParams(
        detector=DetectorParams(**sections["detector"]),
        source=AuxSourceParams(**sections["source"]),
        gate=GateParams(**sections["gate"]),
        channel=ChannelSpec(**sections["channel"]),
        protocol=ProtocolParams(**sections["protocol"]),
    )


def params_to_mapping(params: LinkParams) -> dict[str, str]:
    out = {}
    for key, (section, name) in CONFIG_KEYS.items():
        value = getattr(getattr(params, section), name)
        if isinstance(value, Variant):
            value = value.value
        out[key] = "" if value is None else (repr(value) if isinstance(value, float) else str(value))
    return out


def _coerce(key: str, name: str, value: object) -> object:
    if name == "variant":
        try:
            return Variant(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"{key}: expected 'direct' or 'twin-field', got {value!r}") from None
    if name == "t_override" and (value is None or str(value).strip().lower() in ("", "none")):
        return None
    try:
        return float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ParameterError(f"{key}: expected a number, got {value!r}") from None
