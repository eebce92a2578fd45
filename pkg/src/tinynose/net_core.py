"""Fixed 5-5-3 log-sigmoid feedforward network.

The topology never changes: five sensor inputs, five hidden units and three
output units (one per compound). Parameters are immutable numpy arrays so a
single :class:`NetworkParams` can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_INPUTS = 5
N_HIDDEN = 5
N_OUTPUTS = 3
N_PARAMS = N_HIDDEN * N_INPUTS + N_HIDDEN + N_OUTPUTS * N_HIDDEN + N_OUTPUTS

#: Canonical channel order used everywhere (input vectors, CSV columns).
CHANNELS = ("MQ-2", "MQ-135", "TGS2610", "TGS2611", "MQ-3")


def _frozen(values, shape: tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkParams:
    """Weights and biases of the 5-5-3 network.

    ``hidden_weights[j]`` holds the weights of hidden unit ``j`` over the five
    inputs; ``output_weights[i]`` those of output unit ``i`` over the hidden
    layer.
    """

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray

    def __post_init__(self) -> None:
        shapes = {
            "hidden_weights": (N_HIDDEN, N_INPUTS),
            "hidden_bias": (N_HIDDEN,),
            "output_weights": (N_OUTPUTS, N_HIDDEN),
            "output_bias": (N_OUTPUTS,),
        }
        for name, shape in shapes.items():
            object.__setattr__(self, name, _frozen(getattr(self, name), shape, name))

    @classmethod
    def zeros(cls) -> "NetworkParams":
        return cls.from_flat(np.zeros(N_PARAMS))

    @classmethod
    def from_flat(cls, flat) -> "NetworkParams":
        """Build from a 40-vector ordered HLW rows, HLB, OLW rows, OLB."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got shape {flat.shape}")
        a = N_HIDDEN * N_INPUTS
        b = a + N_HIDDEN
        c = b + N_OUTPUTS * N_HIDDEN
        return cls(
            flat[:a].reshape(N_HIDDEN, N_INPUTS),
            flat[a:b],
            flat[b:c].reshape(N_OUTPUTS, N_HIDDEN),
            flat[c:],
        )

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [
                self.hidden_weights.ravel(),
                self.hidden_bias,
                self.output_weights.ravel(),
                self.output_bias,
            ]
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return bool(np.array_equal(self.flat(), other.flat()))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Activations:
    hidden_net: np.ndarray
    hidden_out: np.ndarray
    output_net: np.ndarray
    output_out: np.ndarray


def as_input_vector(values) -> np.ndarray:
    """Validate and return a 5-vector of finite floats."""
    x = np.asarray(values, dtype=np.float64)
    if x.shape != (N_INPUTS,):
        raise ValueError(f"input vector must have {N_INPUTS} entries, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector contains non-finite values")
    return x


def logsig(n):
    """Log-sigmoid ``1 / (1 + exp(-n))``, overflow-free for any finite ``n``.

    Accepts scalars or arrays. The two branches share ``exp(-|n|)`` so the
    exponent is never positive.
    """
    n = np.asarray(n, dtype=np.float64)
    e = np.exp(-np.abs(n))
    out = np.where(n >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if out.ndim == 0:
        return float(out)
    return out


def logsig_derivative(a):
    """Derivative of logsig expressed through its output: ``a * (1 - a)``."""
    return a * (1.0 - a)


def unit_forward(p: float, w: float, b: float) -> float:
    return logsig(w * p + b)


class Workspace:
    """Preallocated buffers for :func:`forward_into`.

    One workspace per thread; reusing it makes the forward pass free of heap
    allocation, the same constraint the firmware build lives under.
    """

    __slots__ = (
        "hidden_net",
        "hidden_out",
        "output_net",
        "output_out",
        "_h_exp",
        "_h_den",
        "_h_pos",
        "_h_neg",
        "_o_exp",
        "_o_den",
        "_o_pos",
        "_o_neg",
    )

    def __init__(self) -> None:
        self.hidden_net = np.zeros(N_HIDDEN)
        self.hidden_out = np.zeros(N_HIDDEN)
        self.output_net = np.zeros(N_OUTPUTS)
        self.output_out = np.zeros(N_OUTPUTS)
        self._h_exp = np.zeros(N_HIDDEN)
        self._h_den = np.zeros(N_HIDDEN)
        self._h_pos = np.zeros(N_HIDDEN, dtype=bool)
        self._h_neg = np.zeros(N_HIDDEN, dtype=bool)
        self._o_exp = np.zeros(N_OUTPUTS)
        self._o_den = np.zeros(N_OUTPUTS)
        self._o_pos = np.zeros(N_OUTPUTS, dtype=bool)
        self._o_neg = np.zeros(N_OUTPUTS, dtype=bool)


def _logsig_into(n, out, e, den, pos, neg) -> None:
    # Same arithmetic as logsig(), written against caller-owned buffers.
    np.abs(n, out=e)
    np.negative(e, out=e)
    np.exp(e, out=e)
    np.add(e, 1.0, out=den)
    np.greater_equal(n, 0.0, out=pos)
    np.logical_not(pos, out=neg)
    np.divide(1.0, den, out=out, where=pos)
    np.divide(e, den, out=out, where=neg)


def forward_into(params: NetworkParams, x: np.ndarray, ws: Workspace) -> Workspace:
    """Run the forward pass writing every intermediate into ``ws``."""
    np.dot(params.hidden_weights, x, out=ws.hidden_net)
    np.add(ws.hidden_net, params.hidden_bias, out=ws.hidden_net)
    _logsig_into(ws.hidden_net, ws.hidden_out, ws._h_exp, ws._h_den, ws._h_pos, ws._h_neg)
    np.dot(params.output_weights, ws.hidden_out, out=ws.output_net)
    np.add(ws.output_net, params.output_bias, out=ws.output_net)
    _logsig_into(ws.output_net, ws.output_out, ws._o_exp, ws._o_den, ws._o_pos, ws._o_neg)
    return ws


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def forward(params: NetworkParams, x) -> Activations:
    x = as_input_vector(x)
    ws = forward_into(params, x, Workspace())
    return Activations(
        hidden_net=_readonly(ws.hidden_net),
        hidden_out=_readonly(ws.hidden_out),
        output_net=_readonly(ws.output_net),
        output_out=_readonly(ws.output_out),
    )


def forward_batch(params: NetworkParams, inputs: np.ndarray) -> np.ndarray:
    """Output-layer activations for an ``(N, 5)`` batch, shape ``(N, 3)``."""
    inputs = np.asarray(inputs, dtype=np.float64).reshape(-1, N_INPUTS)
    hidden = logsig(inputs @ params.hidden_weights.T + params.hidden_bias)
    hidden = np.asarray(hidden).reshape(-1, N_HIDDEN)
    out = logsig(hidden @ params.output_weights.T + params.output_bias)
    return np.asarray(out).reshape(-1, N_OUTPUTS)

