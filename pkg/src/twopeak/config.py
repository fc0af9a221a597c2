"""Reading RunConfig from TOML.

Top-level keys are RunConfig fields. Potentials may also sit in a
``[potentials]`` table and the multiplicity settings in ``[multiplicity]``.
"""
from __future__ import annotations

import dataclasses
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .driver import RunConfig
from .potentials import ParameterError

_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def from_dict(data: dict) -> RunConfig:
    data = dict(data)
    pots = data.pop("potentials", {})
    for k, v in pots.items():
        if k not in ("J1", "J2", "K1", "K2"):
            raise ParameterError(f"unknown potential {k!r}")
        data[k] = str(v)
    unknown = set(data) - _FIELDS
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    if "multiplicity" in data:
        m = RunConfig().multiplicity
        m.update(data["multiplicity"])
        data["multiplicity"] = m
    return RunConfig(**data)


def load(path=None, **overrides) -> RunConfig:
    """Config from ``path`` (or defaults) with non-None ``overrides`` applied."""
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return from_dict(data)
