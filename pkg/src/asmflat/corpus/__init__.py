"""Bundled example models with scenarios and a golden trace."""

from __future__ import annotations

import json
from importlib import resources


def _file(name: str):
    return resources.files(__name__).joinpath(name)


def manifest() -> dict:
    return json.loads(_file("manifest.json").read_text())


def names() -> list[str]:
    return [e["name"] for e in manifest()["models"]]


def source(name: str) -> str:
    return _file(f"{name}.asm").read_text()


def scenario(name: str) -> str:
    return _file(f"{name}.scen").read_text()


def load(name: str):
    from ..parser import parse
    return parse(source(name))


def text(filename: str) -> str:
    return _file(filename).read_text()
