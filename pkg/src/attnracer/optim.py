"""Adam optimizer over named parameter dicts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


@dataclass
class Adam:
    """Adam with bias-corrected first/second moments.

    One `step` call advances the shared timestep once and updates every
    parameter in place from its `.grad` buffer.
    """

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, Tensor]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = p.grad
            if g is None:
                raise ValueError(f"parameter {name!r} has no gradient")
            if name not in self.m:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Moment buffers plus timestep, keyed for checkpointing."""
        out: dict[str, np.ndarray] = {"adam.t": np.array([float(self.t)])}
        for name, arr in self.m.items():
            out[f"adam.m.{name}"] = arr
        for name, arr in self.v.items():
            out[f"adam.v.{name}"] = arr
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["adam.t"][0])
        self.m = {k[len("adam.m."):]: np.asarray(v, dtype=np.float64)
                  for k, v in arrays.items() if k.startswith("adam.m.")}
        self.v = {k[len("adam.v."):]: np.asarray(v, dtype=np.float64)
                  for k, v in arrays.items() if k.startswith("adam.v.")}
