"""Finite delta-mixture dynamics kernels K(k) = sum_i w_i delta(k - k_i)."""
from __future__ import annotations

from dataclasses import dataclass


class KernelConfigError(ValueError):
    """Invalid kernel configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class Component:
    w: float
    k: float

    @property
    def classical(self) -> bool:
        return self.k == 0


@dataclass(frozen=True)
class Kernel:
    components: tuple[Component, ...]

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(*c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise KernelConfigError("kernel: at least one component is required")
        for i, c in enumerate(comps):
            if not c.w > 0:
                raise KernelConfigError(f"kernel[{i}].w: weight must be > 0, got {c.w}")
            if not c.k >= 0:
                raise KernelConfigError(f"kernel[{i}].k: scale must be >= 0, got {c.k}")

    @classmethod
    def quantum(cls, hbar: float = 1.0) -> "Kernel":
        return cls(((1.0, hbar),))

    @classmethod
    def classical(cls) -> "Kernel":
        return cls(((1.0, 0.0),))

    @classmethod
    def from_config(cls, items, path: str = "kernel") -> "Kernel":
        """Build from ``[{"w": 1.0, "k": 1.0}, ...]``."""
        if not isinstance(items, (list, tuple)) or not items:
            raise KernelConfigError(f"{path}: expected a non-empty list of {{w, k}} entries")
        comps = []
        for i, item in enumerate(items):
            if not isinstance(item, dict):
                raise KernelConfigError(f"{path}[{i}]: expected an object with keys w and k")
            for key in ("w", "k"):
                if key not in item:
                    raise KernelConfigError(f"{path}[{i}].{key}: missing")
                val = item[key]
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise KernelConfigError(f"{path}[{i}].{key}: expected a number, got {val!r}")
            extra = set(item) - {"w", "k"}
            if extra:
                raise KernelConfigError(f"{path}[{i}]: unknown keys {sorted(extra)}")
            if not item["w"] > 0:
                raise KernelConfigError(f"{path}[{i}].w: weight must be > 0, got {item['w']}")
            if not item["k"] >= 0:
                raise KernelConfigError(f"{path}[{i}].k: scale must be >= 0, got {item['k']}")
            comps.append(Component(float(item["w"]), float(item["k"])))
        return cls(tuple(comps))

    def to_config(self) -> list[dict]:
        return [{"w": c.w, "k": c.k} for c in self.components]

    @property
    def all_classical(self) -> bool:
        return all(c.classical for c in self.components)

    @property
    def total_weight(self) -> float:
        return sum(c.w for c in self.components)

    def scaled(self, factor: float) -> "Kernel":
        return Kernel(tuple(Component(c.w * factor, c.k) for c in self.components))


def k2_moment(kernel: Kernel) -> float:
    """Second moment sum_i w_i k_i^2."""
    return float(sum(c.w * c.k**2 for c in kernel.components))
