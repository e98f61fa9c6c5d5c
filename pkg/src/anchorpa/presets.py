"""Bundled presets: small pre-solved categories and one non-regular module."""

from __future__ import annotations

import os

from .core import FusionCategory, ValidationReport, load_category
from .modcat import ModuleData, load_module, regular_module

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

CATEGORY_PRESETS = ("vec", "vecz2-plus", "vecz2-minus", "fib", "ising")
MODULE_PRESETS = ("vecz2-on-vec",)


def preset_path(name: str) -> str:
    path = os.path.join(DATA_DIR, name + ".json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundled preset {name!r}")
    return path


def load_preset(name: str) -> tuple[FusionCategory, ValidationReport]:
    return load_category(preset_path(name))


def load_module_preset(name: str = "vecz2-on-vec") -> tuple[ModuleData, float]:
    cat, _ = load_preset("vecz2-plus")
    return load_module(preset_path(name), cat)


def resolve_category(spec: str) -> tuple[FusionCategory, ValidationReport]:
    """A preset name or a path to a category JSON file."""
    if spec in CATEGORY_PRESETS:
        return load_preset(spec)
    return load_category(spec)


def resolve_module(cat: FusionCategory, spec: str = "regular"):
    """'regular', a module preset name, or a path to a module JSON file."""
    if spec == "regular":
        return regular_module(cat), 0.0
    if spec in MODULE_PRESETS:
        return load_module(preset_path(spec), cat)
    return load_module(spec, cat)
