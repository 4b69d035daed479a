"""Bundled families and scenarios, plus loaders for user-supplied files."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .bootstrap import CanonicalDirections, FamilyError, UpdateFamily, family_from_dict
from .droplets import BoundaryRegion, DropletConstants, Frame

SCENARIOS = ("three-rule",)


def _data():
    return resources.files("kcmdrop") / "data"


def bundled_families() -> list:
    return sorted(p.name[:-5] for p in (_data() / "families").iterdir() if p.name.endswith(".json"))


def get_family(name_or_path: str) -> UpdateFamily:
    """A bundled family by name, or a family file by path."""
    p = _data() / "families" / f"{name_or_path}.json"
    if p.is_file():
        return family_from_dict(json.loads(p.read_text()))
    path = Path(name_or_path)
    if not path.is_file():
        raise FamilyError(f"no bundled family or file named {name_or_path!r}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FamilyError(f"not valid JSON: {exc}") from None
    return family_from_dict(data)


@dataclass
class Scenario:
    name: str
    fam: UpdateFamily
    dirs: CanonicalDirections
    frame: Frame
    alpha: int
    consts: DropletConstants
    boundary: BoundaryRegion
    q: float
    closure_test: dict
    renorm: dict
    tiny: dict
    raw: dict

    def renorm_constants(self) -> DropletConstants:
        return DropletConstants.from_json(self.renorm["constants"])

    def tiny_constants(self) -> DropletConstants:
        return DropletConstants.from_json(self.tiny["constants"])

    def tiny_free_sites(self) -> list:
        return [tuple(p) for p in self.tiny.get("free_sites", [])]

    def geometry(self, which: str = "renorm", **overrides):
        from .renorm import build_geometry
        cfg = dict(self.renorm if which == "renorm" else self.tiny)
        cfg.update({k: v for k, v in overrides.items() if v is not None})
        return build_geometry(self.frame, L=cfg["L"], width=cfg["width"], N=cfg["N"],
                              arrow_L=cfg["arrow_L"], lambda0_radius=cfg["lambda0_radius"])


def scenario_from_dict(data: dict) -> Scenario:
    try:
        fam = get_family(data["family"]) if isinstance(data["family"], str) else family_from_dict(data["family"])
        dirs = CanonicalDirections.from_json(data["directions"])
        consts = DropletConstants.from_json(data["constants"])
        alpha = int(data.get("alpha", 1))
        consts.validate(alpha)
        frame = Frame(dirs)
        bd = data.get("boundary", {})
        a0 = tuple(Fraction(str(v)) for v in bd.get("a0", ("0", "0")))
        b = tuple(Fraction(str(v)) for v in bd.get("b", ("0", "0")))
        boundary = BoundaryRegion(a0, dirs.up, dirs.up1, dirs.up2, b)
        return Scenario(data.get("name", ""), fam, dirs, frame, alpha, consts, boundary, float(data["q"]),
                        dict(data.get("closure_test", {})), dict(data.get("renorm", {})),
                        dict(data.get("tiny", {})), data)
    except KeyError as exc:
        raise FamilyError(f"scenario missing field {exc}") from None


def load_scenario(name_or_path: Optional[str] = None) -> Scenario:
    name_or_path = name_or_path or SCENARIOS[0]
    p = _data() / f"{name_or_path}.scenario.json"
    if p.is_file():
        return scenario_from_dict(json.loads(p.read_text()))
    path = Path(name_or_path)
    if not path.is_file():
        raise FamilyError(f"no bundled scenario or file named {name_or_path!r}")
    try:
        return scenario_from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise FamilyError(f"not valid JSON: {exc}") from None
