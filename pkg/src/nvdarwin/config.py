"""Flat ``key = value`` bath files.

Example::

    # four-spin register
    larmor_hz = 471020
    dephasing_rate_hz = 1e5
    spins.1.a_parallel_hz = 93500
    spins.1.a_perp_hz = 45800
    spins.1.polarization = 0.75
    spins.1.initial_state = +

Spins are numbered from 1 without gaps. ``polarization`` defaults to 1.0
and ``initial_state`` (one of 0, 1, +, -, +y, -y) to ``+``.
"""
from __future__ import annotations

import logging
import re
from importlib import resources
from pathlib import Path

from .bath import (GAMMA_C13_HZ_PER_T, NAMED_STATES, BathConfig, BathError,
                   NuclearSpinParams, bath_as_dict, named_state)

log = logging.getLogger(__name__)

BUNDLED_BATH = "table_s1.cfg"
TOP_KEYS = {"larmor_hz", "dephasing_rate_hz", "gyromagnetic_ratio_hz_per_t"}
SPIN_KEYS = {"a_parallel_hz", "a_perp_hz", "polarization", "initial_state"}
_SPIN_RE = re.compile(r"^spins\.(\d+)\.([a-z_]+)$")


class ConfigError(ValueError):
    pass


def _number(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None
    if v != v or v in (float("inf"), float("-inf")):
        raise ConfigError(f"{where}: value must be finite")
    return v


def parse_bath(text: str, source: str = "<string>") -> BathConfig:
    top: dict[str, tuple[str, int]] = {}
    spins: dict[int, dict[str, tuple[str, int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not value:
            raise ConfigError(f"{where}: empty value for {key!r}")
        m = _SPIN_RE.match(key)
        if m:
            idx, field = int(m.group(1)), m.group(2)
            if field not in SPIN_KEYS:
                raise ConfigError(f"{where}: unknown spin field {field!r}; "
                                  f"expected one of {sorted(SPIN_KEYS)}")
            entry = spins.setdefault(idx, {})
            if field in entry:
                raise ConfigError(f"{where}: duplicate key {key!r}")
            entry[field] = (value, lineno)
        elif key in TOP_KEYS:
            if key in top:
                raise ConfigError(f"{where}: duplicate key {key!r}")
            top[key] = (value, lineno)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")

    if "larmor_hz" not in top:
        raise ConfigError(f"{source}: missing required key 'larmor_hz'")
    if not spins:
        raise ConfigError(f"{source}: no spins.N.* entries")
    if sorted(spins) != list(range(1, len(spins) + 1)):
        raise ConfigError(f"{source}: spin indices must run 1..N without gaps, got {sorted(spins)}")

    params = []
    for idx in sorted(spins):
        entry = spins[idx]
        for req in ("a_parallel_hz", "a_perp_hz"):
            if req not in entry:
                raise ConfigError(f"{source}: spin {idx} is missing {req!r}")
        vals = {}
        for f in ("a_parallel_hz", "a_perp_hz", "polarization"):
            if f in entry:
                text_v, ln = entry[f]
                vals[f] = _number(text_v, f"{source}:{ln} (spins.{idx}.{f})")
        if vals["a_perp_hz"] < 0:
            ln = entry["a_perp_hz"][1]
            raise ConfigError(f"{source}:{ln} (spins.{idx}.a_perp_hz): "
                              f"must be a magnitude >= 0, got {vals['a_perp_hz']}")
        if "polarization" not in vals:
            log.info("%s: spin %d has no polarization; using 1.0", source, idx)
        label = entry.get("initial_state", ("+", 0))
        if label[0] not in NAMED_STATES:
            raise ConfigError(f"{source}:{label[1]} (spins.{idx}.initial_state): unknown state "
                              f"{label[0]!r}; expected one of {sorted(NAMED_STATES)}")
        try:
            params.append(NuclearSpinParams(vals["a_parallel_hz"], vals["a_perp_hz"],
                                            vals.get("polarization", 1.0), named_state(label[0])))
        except BathError as e:
            raise ConfigError(f"{source}: spin {idx}: {e}") from None

    def top_value(key, default):
        if key not in top:
            return default
        return _number(top[key][0], f"{source}:{top[key][1]} ({key})")

    try:
        return BathConfig(top_value("larmor_hz", None), tuple(params),
                          top_value("dephasing_rate_hz", 0.0),
                          top_value("gyromagnetic_ratio_hz_per_t", GAMMA_C13_HZ_PER_T))
    except BathError as e:
        raise ConfigError(f"{source}: {e}") from None


def load_bath(path: str | Path | None = None) -> BathConfig:
    """Read a bath file; ``None`` loads the bundled four-spin register."""
    if path is None:
        text = resources.files("nvdarwin").joinpath("data", BUNDLED_BATH).read_text("utf-8")
        return parse_bath(text, BUNDLED_BATH)
    p = Path(path)
    return parse_bath(p.read_text("utf-8"), str(p))


def format_bath(bath: BathConfig) -> str:
    """Inverse of :func:`parse_bath` for baths whose spins use named states."""
    d = bath_as_dict(bath)
    lines = [f"larmor_hz = {d['larmor_hz']:.12g}",
             f"dephasing_rate_hz = {d['dephasing_rate_hz']:.12g}",
             f"gyromagnetic_ratio_hz_per_t = {d['gyromagnetic_ratio_c13']:.12g}"]
    for i, s in enumerate(d["spins"], 1):
        if not isinstance(s["initial_state"], str):
            raise ConfigError(f"spin {i} initial state has no file label")
        lines += [f"spins.{i}.a_parallel_hz = {s['a_parallel_hz']:.12g}",
                  f"spins.{i}.a_perp_hz = {s['a_perp_hz']:.12g}",
                  f"spins.{i}.polarization = {s['polarization']:.12g}",
                  f"spins.{i}.initial_state = {s['initial_state']}"]
    return "\n".join(lines) + "\n"
