"""Small shared algebraic wrappers: automorphisms on arbitrary element types."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable


@dataclass(frozen=True)
class Automorphism:
    """An invertible algebra map given by its forward and inverse actions."""

    forward: Callable[[Any], Any]
    inverse: Callable[[Any], Any]
    label: str = "sigma"

    def __call__(self, a):
        return self.forward(a)

    def power(self, k: int) -> Callable[[Any], Any]:
        """``sigma^k`` as a callable (negative ``k`` uses the inverse)."""
        f = self.forward if k >= 0 else self.inverse

        def apply(a):
            for _ in range(abs(k)):
                a = f(a)
            return a

        return apply

    def compose(self, other: "Automorphism", label: str | None = None) -> "Automorphism":
        return Automorphism(
            forward=lambda a: self.forward(other.forward(a)),
            inverse=lambda a: other.inverse(self.inverse(a)),
            label=label or f"{self.label}*{other.label}",
        )


def identity_automorphism(label: str = "id") -> Automorphism:
    return Automorphism(forward=lambda a: a, inverse=lambda a: a, label=label)


def inner_automorphism(V, label: str = "inner"):
    """``T -> V T V^{-1}`` for an invertible matrix ``V``."""
    import numpy as np

    Vinv = np.linalg.inv(V)
    return Automorphism(forward=lambda T: V @ T @ Vinv, inverse=lambda T: Vinv @ T @ V, label=label)
