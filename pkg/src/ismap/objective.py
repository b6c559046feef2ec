"""Unfolding objectives: total variance (MVU) and furthest-pair spread (MFNU)."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ParameterError

KINDS = ("mvu", "mfnu")


@dataclass
class ObjectiveKind:
    kind: str = "mfnu"
    far_i: Optional[np.ndarray] = None
    far_j: Optional[np.ndarray] = None

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in KINDS:
            raise ParameterError("kind", f"must be one of {KINDS}")
        if self.kind == "mfnu":
            if self.far_j is None:
                raise ParameterError("kind", "MFNU needs furthest-point pairs")
            self.far_j = np.asarray(self.far_j, dtype=np.int64)
            if self.far_i is None:
                self.far_i = np.arange(self.far_j.size)
            self.far_i = np.asarray(self.far_i, dtype=np.int64)

    @classmethod
    def from_graph(cls, kind, graph):
        if kind.lower() == "mvu":
            return cls("mvu")
        return cls("mfnu", far_j=graph.far_j)


def objective_value_grad(R, kind, scale=1.0, out=None):
    """Objective value and ``scale`` times its gradient.

    The gradient is added into ``out`` when given (it must be zeroed by the
    caller if a fresh gradient is wanted); otherwise a new array is returned.
    """
    R = np.ascontiguousarray(R, dtype=np.float64)
    G = np.zeros_like(R) if out is None else out
    if kind.kind == "mvu":
        value = float(np.einsum("ij,ij->", R, R))
        G += (2.0 * scale) * R
    else:
        if kind.far_j.size != R.shape[0]:
            raise ParameterError("kind", f"MFNU needs {R.shape[0]} furthest pairs, got {kind.far_j.size}")
        value = float(_kernels.pair_spread(R, kind.far_i, kind.far_j, float(scale), G))
    return value, G
