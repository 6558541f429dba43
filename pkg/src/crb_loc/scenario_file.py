"""JSON scenario files.

Schema (unknown keys are rejected)::

    {
      "dim": 2 | 3,
      "beacons": [[x, y(, z)], ...],
      "target": [x, y(, z)],
      "noise_std": [sigma, ...],
      "biased": [1-based beacon numbers],
      "bias_models": [{"variant": ..., ...}, ...],      # aligned with "biased"
      "candidate_bias_pdfs": [{...}, ...],              # optional, one per beacon
      "quadrature": {"rel_tol": ..., "abs_tol": ..., "max_depth": ...},   # optional
      "estimator": {"search_box": [[lo...], [hi...]], "grid": ..., "conv_tol": ...,
                    "max_iters": ..., "n_refine": ...},                  # optional
      "note": "free text"                               # optional
    }

Beacons are reordered so the biased ones come first; messages keep the
file's numbering.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import bias_models as bm
from .errors import ScenarioFormatError
from .estimators import EstimatorConfig
from .geometry import canonicalize
from .quadrature import QuadratureSpec

__all__ = ["ScenarioBundle", "load", "loads", "parse", "dump", "default_path"]

_TOP = {"dim", "beacons", "target", "noise_std", "biased", "bias_models",
        "candidate_bias_pdfs", "quadrature", "estimator", "note"}
_REQUIRED = {"dim", "beacons", "target", "noise_std"}
_QUAD = {"rel_tol", "abs_tol", "max_depth"}
_EST = {"search_box", "grid", "conv_tol", "max_iters", "n_refine"}


@dataclass(frozen=True, eq=False)
class ScenarioBundle:
    scenario: object
    quadrature: QuadratureSpec
    estimator: EstimatorConfig


def default_path():
    return resources.files("crb_loc") / "data" / "default_scenario.json"


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioFormatError(f"{where}: unknown keys {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ScenarioFormatError(f"{where}: missing keys {missing}")


def _vector(value, n, where):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioFormatError(f"{where} must be numeric") from None
    if arr.shape != (n,):
        raise ScenarioFormatError(f"{where} must have length {n}")
    return arr


def parse(data):
    """Build a :class:`ScenarioBundle` from decoded JSON."""
    _check_keys(data, _TOP, "scenario", _REQUIRED)
    dim = data["dim"]
    if dim not in (2, 3) or isinstance(dim, bool):
        raise ScenarioFormatError("dim must be 2 or 3")
    if not isinstance(data["beacons"], list):
        raise ScenarioFormatError("beacons must be a list of coordinates")
    beacons = np.array([_vector(b, dim, f"beacon {i + 1}")
                        for i, b in enumerate(data["beacons"])]).reshape(-1, dim)
    m = len(beacons)
    target = _vector(data["target"], dim, "target")
    sigma = _vector(data["noise_std"], m, "noise_std")

    biased = data.get("biased", [])
    models = data.get("bias_models", [])
    if not isinstance(biased, list) or not all(isinstance(i, int) for i in biased):
        raise ScenarioFormatError("biased must be a list of beacon numbers")
    if not isinstance(models, list) or len(models) != len(biased):
        raise ScenarioFormatError("bias_models must list one model per biased beacon")
    if any(i < 1 or i > m for i in biased) or len(set(biased)) != len(biased):
        raise ScenarioFormatError(f"biased beacon numbers must be distinct and in 1..{m}")
    models = [bm.from_dict(x) for x in models]
    zero_based = [i - 1 for i in biased]
    scenario = canonicalize(beacons, target, sigma, zero_based, models)
    order = [label - 1 for label in scenario.labels]

    quad = data.get("quadrature", {})
    _check_keys(quad, _QUAD, "quadrature")
    est = data.get("estimator", {})
    _check_keys(est, _EST, "estimator")
    candidates = data.get("candidate_bias_pdfs")
    try:
        spec = QuadratureSpec(**quad)
        kwargs = dict(est)
        if "search_box" in kwargs:
            lo, hi = kwargs["search_box"]
            kwargs["search_box"] = (_vector(lo, dim, "search_box lo"),
                                    _vector(hi, dim, "search_box hi"))
        if candidates is not None:
            if not isinstance(candidates, list) or len(candidates) != m:
                raise ScenarioFormatError("candidate_bias_pdfs must list one model per beacon")
            parsed = [bm.from_dict(x) for x in candidates]
            kwargs["candidate_bias_pdfs"] = tuple(parsed[i] for i in order)
        config = EstimatorConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(str(exc)) from None
    return ScenarioBundle(scenario, spec, config)


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"malformed JSON: {exc}") from None
    return parse(data)


def load(path):
    """Load a scenario file; the literal path ``default`` selects the bundled example."""
    if str(path) == "default":
        return loads(default_path().read_text(encoding="utf-8"))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def dump(scenario, path=None, **extra):
    """Serialize a scenario (canonical order) to JSON text, optionally writing it."""
    data = {
        "dim": scenario.dim,
        "beacons": scenario.beacons.tolist(),
        "target": scenario.target.tolist(),
        "noise_std": scenario.noise_std.tolist(),
        "biased": list(range(1, scenario.biased_count + 1)),
        "bias_models": [bm.to_dict(x) for x in scenario.bias_models],
        **extra,
    }
    text = json.dumps(data, indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
