"""Beacons, target and the range geometry derived from them."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError

__all__ = [
    "COINCIDENCE_TOL",
    "Scenario",
    "make_scenario",
    "canonicalize",
    "distance",
    "distances",
    "unit_direction",
    "unit_directions",
    "validate",
]

# Beacon-target separations below this are treated as coincident.
COINCIDENCE_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """A localization problem instance.

    The first ``biased_count`` beacons carry a random bias whose prior is the
    matching entry of ``bias_models``; the remaining beacons are unbiased.
    Use :func:`canonicalize` to bring an arbitrary biased subset into this
    order.

    ``labels`` holds the caller-facing 1-based beacon numbers (they differ
    from positions when the beacons were reordered) and is only used in
    messages.
    """

    beacons: np.ndarray
    target: np.ndarray
    noise_std: np.ndarray
    biased_count: int = 0
    bias_models: tuple = ()
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "beacons", _frozen(np.atleast_2d(self.beacons)))
        object.__setattr__(self, "target", _frozen(self.target))
        object.__setattr__(self, "noise_std", _frozen(np.broadcast_to(
            np.asarray(self.noise_std, dtype=float), (len(self.beacons),))))
        object.__setattr__(self, "bias_models", tuple(self.bias_models))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, len(self.beacons) + 1)))
        if self.target.shape != (self.beacons.shape[1],):
            raise ValueError("target and beacons must share the same dimension")

    @property
    def dim(self):
        return self.beacons.shape[1]

    @property
    def num_beacons(self):
        return self.beacons.shape[0]

    def with_target(self, target):
        return Scenario(self.beacons, target, self.noise_std, self.biased_count,
                        self.bias_models, self.labels)

    def with_bias_models(self, models):
        models = tuple(models)
        return Scenario(self.beacons, self.target, self.noise_std, len(models),
                        models, self.labels)

    def translated(self, offset):
        offset = np.asarray(offset, dtype=float)
        return Scenario(self.beacons + offset, self.target + offset, self.noise_std,
                        self.biased_count, self.bias_models, self.labels)


def make_scenario(beacons, target, noise_std=1.0, biased=None, bias_models=()):
    """Build a :class:`Scenario` from an arbitrary biased subset.

    ``biased`` lists 0-based beacon indices aligned with ``bias_models``; the
    beacons are reordered so the biased ones come first.
    """
    beacons = np.atleast_2d(np.asarray(beacons, dtype=float))
    biased = list(biased or [])
    return canonicalize(beacons, target, noise_std, biased, bias_models)


def canonicalize(beacons, target, noise_std, biased, bias_models):
    beacons = np.atleast_2d(np.asarray(beacons, dtype=float))
    m = len(beacons)
    sigma = np.broadcast_to(np.asarray(noise_std, dtype=float), (m,))
    biased = [int(i) for i in biased]
    if len(set(biased)) != len(biased):
        raise ValueError("duplicate biased beacon index")
    if any(i < 0 or i >= m for i in biased):
        raise ValueError("biased beacon index out of range")
    if len(biased) != len(bias_models):
        raise ValueError("need exactly one bias model per biased beacon")
    rest = [i for i in range(m) if i not in biased]
    order = biased + rest
    return Scenario(
        beacons=beacons[order],
        target=target,
        noise_std=sigma[order],
        biased_count=len(biased),
        bias_models=tuple(bias_models),
        labels=tuple(i + 1 for i in order),
    )


def distances(scenario, target=None):
    """Distances from the target (or ``target`` override, shape (..., dim)) to all beacons."""
    p = scenario.target if target is None else np.asarray(target, dtype=float)
    diff = p[..., None, :] - scenario.beacons
    return np.sqrt(np.sum(diff * diff, axis=-1))


def distance(scenario, m):
    """Distance between the target and beacon ``m`` (0-based)."""
    d = float(np.linalg.norm(scenario.target - scenario.beacons[m]))
    if d < COINCIDENCE_TOL:
        raise DegenerateGeometryError(
            f"target coincides with beacon {scenario.labels[m]}")
    return d


def unit_direction(scenario, m):
    """Unit vector pointing from beacon ``m`` to the target."""
    return (scenario.target - scenario.beacons[m]) / distance(scenario, m)


def unit_directions(scenario):
    """All unit directions stacked as an ``(M, dim)`` array."""
    return np.array([unit_direction(scenario, m) for m in range(scenario.num_beacons)])


def validate(scenario):
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems = []
    dim = scenario.dim
    m = scenario.num_beacons
    if dim not in (2, 3):
        problems.append(f"unsupported dimension {dim} (expected 2 or 3)")
    need = 3 if dim == 2 else 4
    if m < need:
        problems.append(f"too few beacons: {m} given, at least {need} needed in dim {dim}")
    if not np.all(np.isfinite(scenario.beacons)) or not np.all(np.isfinite(scenario.target)):
        problems.append("non-finite coordinate")
    for i, s in enumerate(scenario.noise_std):
        if not (np.isfinite(s) and s > 0):
            problems.append(f"non-positive noise std for beacon {scenario.labels[i]}: {s}")
    if not 0 <= scenario.biased_count <= m:
        problems.append(f"biased count {scenario.biased_count} outside [0, {m}]")
    if len(scenario.bias_models) != scenario.biased_count:
        problems.append(
            f"{len(scenario.bias_models)} bias models for {scenario.biased_count} biased beacons")
    if np.all(np.isfinite(scenario.target)):
        d = distances(scenario)
        for i in np.flatnonzero(d < COINCIDENCE_TOL):
            problems.append(f"target coincides with beacon {scenario.labels[i]}")
    return problems
