"""Configuration and result containers shared by the derivation pipelines."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable

from .exprcore import Expression, const, set_small_one


class ConvergenceError(RuntimeError):
    """The iteration did not drive the residuals to zero in time."""


class UnmatchedTermError(ValueError):
    """A residual term that no update rule covers."""


DEFAULT_MAX_ITER = {"averaged": 20, "fastslow": 19}
DEFAULT_ORDER = {"averaged": 6, "fastslow": 8}


@dataclass(frozen=True)
class DerivationConfig:
    system: str = "averaged"
    noise_modes: int = 3
    trunc_order: int | None = None
    max_iter: int | None = None

    def __post_init__(self):
        if self.system not in DEFAULT_ORDER:
            raise ValueError(f"unknown system {self.system!r}")
        if self.noise_modes < 0:
            raise ValueError("noise_modes must be non-negative")

    @property
    def order(self) -> int:
        return self.trunc_order if self.trunc_order is not None else DEFAULT_ORDER[self.system]

    @property
    def iterations_cap(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        env = os.environ.get("SSM_MAX_ITER")
        if env:
            return int(env)
        return DEFAULT_MAX_ITER[self.system]


@dataclass
class ReducedModel:
    """Evolution ``g = da/dt`` and the slow-manifold fields.

    ``g``, ``u`` and ``v`` keep their ``small`` grading; :attr:`gssm` is the
    evolution with ``small`` set to one.
    """

    system: str
    g: Expression
    u: Expression
    v: Expression | None = None
    trunc_order: int = 6
    iterations: int = 0
    noise_modes: int = 3
    history: list = field(default_factory=list)

    @property
    def gssm(self) -> Expression:
        return set_small_one(self.g)


def run_sweeps(step: Callable[[int], bool], cap: int, what: str) -> int:
    """Call ``step(it)`` until it reports convergence; return the sweep count."""
    for it in range(1, cap + 1):
        if step(it):
            return it
    raise ConvergenceError(f"{what}: residual not zero after {cap} iterations")


ONE = const(1)
