"""Labelled tensor-factor bookkeeping for multipartite operators."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HilbertDims:
    """Ordered list of (subsystem label, dimension) pairs.

    The total dimension is the product of the parts; labels must be unique.
    Row-major (first factor slowest) index convention throughout.
    """

    parts: tuple[tuple[str, int], ...]

    def __post_init__(self):
        parts = tuple((str(lbl), int(d)) for lbl, d in self.parts)
        object.__setattr__(self, "parts", parts)
        labels = [lbl for lbl, _ in parts]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        for lbl, d in parts:
            if d <= 0:
                raise ValueError(f"subsystem {lbl!r} has non-positive dimension {d}")

    @classmethod
    def of(cls, *parts: tuple[str, int]) -> "HilbertDims":
        return cls(tuple(parts))

    @classmethod
    def single(cls, label: str, dim: int) -> "HilbertDims":
        return cls(((label, dim),))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.parts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.parts)

    @property
    def total_dim(self) -> int:
        n = 1
        for _, d in self.parts:
            n *= d
        return n

    def dim_of(self, label: str) -> int:
        for lbl, d in self.parts:
            if lbl == label:
                return d
        raise KeyError(f"unknown subsystem label {label!r}")

    def position(self, label: str) -> int:
        for i, (lbl, _) in enumerate(self.parts):
            if lbl == label:
                return i
        raise KeyError(f"unknown subsystem label {label!r}")

    def concat(self, other: "HilbertDims") -> "HilbertDims":
        return HilbertDims(self.parts + other.parts)

    def subset(self, keep: tuple[str, ...]) -> "HilbertDims":
        """Dims restricted to ``keep``, preserving the original factor order."""
        keep_set = set(keep)
        for lbl in keep:
            self.position(lbl)  # raises on unknown label
        return HilbertDims(tuple(p for p in self.parts if p[0] in keep_set))

    def renamed(self, mapping: dict[str, str]) -> "HilbertDims":
        return HilbertDims(tuple((mapping.get(lbl, lbl), d) for lbl, d in self.parts))

    def __len__(self) -> int:
        return len(self.parts)
