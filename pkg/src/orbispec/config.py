"""JSON orbifold definitions.

Layout::

    {
      "geometry": {"kind": "flat_torus", "dimension": 2,
                   "lattice_basis": [["1", "0"], ["0", "1"]]},
      "generators": [{"matrix": [[1, 0], [0, -1]], "translation": ["1/2", "0"]}],
      "options": {"cutoff": 2000, "fit": {"t_min": 5e-5}}
    }

Flat-torus entries must be integers or "p/q" strings; float literals are
rejected so nothing inexact enters. A torus may give ``gram`` instead of (or
alongside) ``lattice_basis``. Sphere geometries take ``radius`` and 3x3
float matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import intlinalg as il
from .errors import ConfigError, GroupError, OrbispecError
from .heat_fit import FitConfig
from .isometry import MAX_GROUP_ORDER, GroupAction, IsometryElement, ModelGeometry, generate_group, identity_element, verify_group

FIT_KEYS = {"t_min", "ratio", "n_points", "j_max", "svd_rtol", "tail_rel", "noise_floor", "noise_factor", "resolution"}


def _exact(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise ConfigError(f"{where}: float literal {value!r} not allowed; use an integer or a \"p/q\" string")
    try:
        return il.as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _exact_matrix(rows, where: str) -> list[list[Fraction]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{where}: expected a list of rows")
    return [[_exact(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(rows)]


def _fmt(x: Fraction) -> str | int:
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class OrbifoldConfig:
    geometry: ModelGeometry
    generators: tuple[IsometryElement, ...]
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "OrbifoldConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"geometry", "generators", "options", "name"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        geo = _parse_geometry(data.get("geometry"))
        gens_raw = data.get("generators", [])
        if not isinstance(gens_raw, list):
            raise ConfigError("generators must be a list")
        gens = tuple(_parse_generator(g, geo, i) for i, g in enumerate(gens_raw))
        options = data.get("options", {}) or {}
        if not isinstance(options, dict):
            raise ConfigError("options must be an object")
        _check_options(options)
        return cls(geo, gens, options)

    @classmethod
    def from_json(cls, text: str) -> "OrbifoldConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "OrbifoldConfig":
        return cls.from_json(Path(path).read_text())

    @classmethod
    def from_action(cls, action: GroupAction, options: dict | None = None) -> "OrbifoldConfig":
        """Export every non-identity element as a generator (exact for tori)."""
        return cls(action.geometry, tuple(action.elements[1:]), dict(options or {}))

    def build(self) -> GroupAction:
        """Close the generators under composition and verify the result."""
        try:
            if not self.generators:
                return verify_group([identity_element(self.geometry)], self.geometry)
            return generate_group(list(self.generators), self.geometry, cap=MAX_GROUP_ORDER)
        except GroupError as exc:
            raise ConfigError(f"generators do not give a valid group: {exc}") from exc
        except OrbispecError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def fit_config(self) -> FitConfig:
        fit = dict(self.options.get("fit", {}))
        if "cutoff" in self.options:
            fit["cutoff"] = float(self.options["cutoff"])
        if "l_max" in self.options:
            fit["l_max"] = int(self.options["l_max"])
        return FitConfig(**fit)

    def to_dict(self) -> dict:
        geo = self.geometry
        if geo.is_torus:
            g: dict = {"kind": "flat_torus", "dimension": geo.dimension}
            if geo.exact_basis is not None:
                g["lattice_basis"] = [[_fmt(x) for x in row] for row in geo.exact_basis]
            else:
                g["gram"] = [[_fmt(x) for x in row] for row in geo.gram]
            gens = [
                {"matrix": [[int(x) for x in row] for row in e.linear.tolist()],
                 "translation": [_fmt(x) for x in e.translation]}
                for e in self.generators
            ]
        else:
            g = {"kind": "sphere", "dimension": 2, "radius": geo.radius}
            gens = [{"matrix": [[float(x) for x in row] for row in e.linear.tolist()]} for e in self.generators]
        return {"geometry": g, "generators": gens, "options": self.options}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _parse_geometry(g) -> ModelGeometry:
    if not isinstance(g, dict):
        raise ConfigError("missing geometry block")
    kind = g.get("kind")
    try:
        if kind in ("flat_torus", "torus", "flat"):
            basis = _exact_matrix(g["lattice_basis"], "lattice_basis") if "lattice_basis" in g else None
            gram = _exact_matrix(g["gram"], "gram") if "gram" in g else None
            if basis is None and gram is None:
                raise ConfigError("flat_torus needs lattice_basis or gram")
            geo = ModelGeometry.flat_torus(basis, gram=gram)
        elif kind == "sphere":
            radius = g.get("radius", 1.0)
            if isinstance(radius, str):
                radius = float(Fraction(radius))
            geo = ModelGeometry.sphere(float(radius), int(g.get("dimension", 2)))
        else:
            raise ConfigError(f"unknown geometry kind {kind!r}")
    except ConfigError:
        raise
    except (OrbispecError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad geometry: {exc}") from None
    if "dimension" in g and int(g["dimension"]) != geo.dimension:
        raise ConfigError(f"dimension {g['dimension']} does not match the geometry ({geo.dimension})")
    return geo


def _parse_generator(raw, geo: ModelGeometry, i: int) -> IsometryElement:
    if not isinstance(raw, dict) or "matrix" not in raw:
        raise ConfigError(f"generator {i}: expected an object with a matrix")
    try:
        if geo.is_torus:
            a = _exact_matrix(raw["matrix"], f"generators[{i}].matrix")
            b = raw.get("translation")
            b = [_exact(x, f"generators[{i}].translation") for x in b] if b is not None else None
            return IsometryElement.torus(a, b)
        if raw.get("translation"):
            raise ConfigError(f"generator {i}: sphere isometries have no translation")
        return IsometryElement.sphere(np.array(raw["matrix"], dtype=float))
    except ConfigError:
        raise
    except (OrbispecError, ValueError, TypeError) as exc:
        raise ConfigError(f"generator {i}: {exc}") from None


def _check_options(options: dict) -> None:
    unknown = set(options) - {"cutoff", "l_max", "fit"}
    if unknown:
        raise ConfigError(f"unknown options: {sorted(unknown)}")
    fit = options.get("fit", {})
    if not isinstance(fit, dict) or set(fit) - FIT_KEYS:
        raise ConfigError(f"fit options must be an object with keys from {sorted(FIT_KEYS)}")
