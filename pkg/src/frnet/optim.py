"""Adam optimizer, binary cross-entropy loss, and loss combination.

Adam keeps its moments and a master copy of each parameter in float64 so
that its state tracks a 64-bit scalar reference to within rounding; the
parameters handed back to the network are float32, matching the tensor
contract. Defaults: lr 0.001, beta1 0.9, beta2 0.999, epsilon 1e-8.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError
from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    master: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, params: dict[str, Tensor], lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        state = cls(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
        for name, p in params.items():
            state.m[name] = np.zeros(p.shape, dtype=np.float64)
            state.v[name] = np.zeros(p.shape, dtype=np.float64)
            state.master[name] = p.data.astype(np.float64)
        return state


def adam_step(
    params: dict[str, Tensor], grads: dict[str, Tensor], state: AdamState
) -> dict[str, Tensor]:
    """One bias-corrected Adam update; returns the new float32 parameters.

    `params` must be the tensors produced by the previous step (or the ones
    the state was initialized from); updates are applied to the float64
    masters and rounded once on the way out.
    """
    if set(params) != set(state.m):
        raise ShapeMismatchError("adam_step: parameter names do not match optimizer state")
    state.t += 1
    t = state.t
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape or state.m[name].shape != p.shape:
            raise ShapeMismatchError(
                f"adam_step: {name}: param {p.shape}, grad {g.shape}, state {state.m[name].shape}"
            )
        g64 = g.data.astype(np.float64)
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g64
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * np.square(g64)
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        state.master[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        out[name] = Tensor(state.master[name].astype(np.float32))
    return out


def bce_loss(pred: Tensor, target: Tensor, eps_clip: float = 1e-7) -> float:
    """Mean binary cross-entropy with predictions clipped to [eps, 1-eps]."""
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"bce_loss: shapes {pred.shape} and {target.shape} differ")
    p = pred.data.astype(np.float64)
    y = target.data.astype(np.float64)
    if not (np.isfinite(p).all() and np.isfinite(y).all()):
        raise ValueError("bce_loss: inputs must be finite")
    p = np.clip(p, eps_clip, 1.0 - eps_clip)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def total_loss(data_loss: float, l2_penalties: list[float]) -> float:
    """Data loss plus the sum of per-layer weight penalties."""
    return float(data_loss) + float(sum(l2_penalties))


@dataclass(frozen=True)
class LossConfig:
    kind: str = "binary-crossentropy"
    l2_scale: float = 0.001
    eps_clip: float = 1e-7

    def __post_init__(self):
        if self.kind != "binary-crossentropy":
            raise ValueError(f"unsupported loss kind {self.kind!r}")
        if self.l2_scale < 0:
            raise ValueError("l2_scale must be nonnegative")
        if not 0 < self.eps_clip < 0.5:
            raise ValueError("eps_clip must be in (0, 0.5)")
