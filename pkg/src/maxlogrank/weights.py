"""Deterministic weight functions of the pooled Kaplan-Meier CDF ``u``.

``RhoGamma(rho, gamma)`` is the Fleming-Harrington ``G^{rho,gamma}`` weight
``S^rho (1 - S)^gamma`` written in ``u = 1 - S``; ``Crossing(theta)`` is the
piecewise-linear weight running from -1 at ``u = 0`` through 0 at
``u = theta`` to +1 at ``u = 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .exceptions import DomainError, UnknownNameError

__all__ = [
    "Constant",
    "RhoGamma",
    "Crossing",
    "WeightSpec",
    "WeightSet",
    "eval_weight",
    "builtin_set",
    "BUILTIN_NAMES",
]


@dataclass(frozen=True)
class Constant:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class RhoGamma:
    rho: float
    gamma: float

    def __post_init__(self):
        if not (self.rho >= 0 and self.gamma >= 0):
            raise DomainError(f"rho and gamma must be >= 0, got {self.rho}, {self.gamma}")

    def __str__(self):
        return f"G({self.rho:g},{self.gamma:g})"


@dataclass(frozen=True)
class Crossing:
    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise DomainError(f"crossing theta must lie in (0, 1), got {self.theta}")

    def __str__(self):
        return f"cross({self.theta:g})"


WeightSpec = Union[Constant, RhoGamma, Crossing]


@dataclass(frozen=True)
class WeightSet:
    name: str
    specs: Tuple[WeightSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if not 1 <= len(self.specs) <= 8:
            raise DomainError("a weight set holds between 1 and 8 weights")

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)


def eval_weight(spec: WeightSpec, u):
    """Evaluate ``spec`` at CDF value(s) ``u`` in [0, 1)."""
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr >= 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError("weights are defined for u in [0, 1)")
    if isinstance(spec, Constant):
        out = np.ones_like(arr)
    elif isinstance(spec, RhoGamma):
        out = (1.0 - arr) ** spec.rho * arr**spec.gamma
    elif isinstance(spec, Crossing):
        th = spec.theta
        out = np.where(arr <= th, (arr - th) / th, (arr - th) / (1.0 - th))
    else:
        raise TypeError(f"not a weight spec: {spec!r}")
    return float(out) if out.ndim == 0 else out


_THETA = r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*"
_PHI_RE = re.compile(r"^phi-star\((" + _THETA + r"(?:," + _THETA + r")*)\)$")


def _phi_star(thetas):
    if len(thetas) == 1:
        th = thetas[0]
        return WeightSet(f"phi-star({th:g})",
                         (Constant(), RhoGamma(0, 1), RhoGamma(1, 0), Crossing(th)))
    label = ",".join(f"{t:g}" for t in thetas)
    return WeightSet(f"phi-star({label})", (Constant(), *(Crossing(t) for t in thetas)))


BUILTIN_NAMES = (
    "logrank",
    "fh11",
    "maxcombo",
    "phi-star(THETA)",
    "phi-star(0.2,0.5,0.8)",
    "projection-crossing",
)


def builtin_set(name: str) -> WeightSet:
    """Look up a named weight set.

    ``phi-star(theta)`` with a single theta is the four-weight set
    ``{1, u, 1-u, crossing(theta)}``; with several thetas it is the
    crossing-only set ``{1, crossing(theta_1), ...}``.
    """
    key = name.strip().lower().replace(" ", "")
    if key == "logrank":
        return WeightSet("logrank", (Constant(),))
    if key == "fh11":
        return WeightSet("fh11", (RhoGamma(1, 1),))
    if key == "maxcombo":
        return WeightSet("maxcombo", (Constant(), RhoGamma(0, 1), RhoGamma(1, 0),
                                      RhoGamma(1, 1)))
    if key == "projection-crossing":
        return WeightSet("projection-crossing", (Constant(), RhoGamma(0, 1), Crossing(0.5)))
    match = _PHI_RE.match(key)
    if match:
        thetas = [float(t) for t in match.group(1).split(",")]
        return _phi_star(thetas)
    raise UnknownNameError(f"unknown weight set {name!r}; known: {', '.join(BUILTIN_NAMES)}")
