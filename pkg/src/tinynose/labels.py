"""Compound labels and their one-hot encoding."""

from __future__ import annotations

import enum

import numpy as np


class CompoundLabel(enum.Enum):
    Lemon = 0
    Banana = 1
    Grape = 2
    Unknown = -1

    @property
    def index(self) -> int:
        if self is CompoundLabel.Unknown:
            raise ValueError("Unknown has no one-hot index")
        return self.value

    @property
    def slug(self) -> str:
        """Lowercase name used in dataset files and protocol configs."""
        return self.name.lower()

    @classmethod
    def from_index(cls, index: int) -> "CompoundLabel":
        if not 0 <= index < NUM_CLASSES:
            raise ValueError(f"class index out of range: {index}")
        return cls(index)

    @classmethod
    def from_slug(cls, text: str) -> "CompoundLabel":
        """Parse a lowercase label. Case-strict: ``Lemon`` is rejected."""
        for label in CLASSES:
            if label.slug == text:
                return label
        raise ValueError(f"unknown compound label {text!r} (expected one of lemon, banana, grape)")


CLASSES = (CompoundLabel.Lemon, CompoundLabel.Banana, CompoundLabel.Grape)
NUM_CLASSES = len(CLASSES)


def one_hot(label: CompoundLabel) -> np.ndarray:
    target = np.zeros(NUM_CLASSES)
    target[label.index] = 1.0
    return target
