"""Minimal differentiable layers for the clip classifiers.

Only the pieces the two network architectures need: 1-D valid convolution
over time, average pooling, dense layers, row-wise softmax, categorical
cross-entropy, and Adam. Gradients are analytic throughout; a float64 path
exists for finite-difference verification.
"""

from __future__ import annotations

import numpy as np

from .errors import InputTooShortError, ShapeError, TrainingDivergedError

# log() arguments are clamped to this floor so losses stay finite
PROB_FLOOR = 1e-12


class Param:
    """A trainable array together with its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int,
                 dtype=np.float32) -> np.ndarray:
    """Fan-in scaled uniform initialization, +-1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv1d:
    """Valid (no padding) 1-D convolution over the time axis.

    Input is [in_bins, T]; output is [out_features, T - window + 1].
    """

    def __init__(self, in_bins: int, out_features: int, window: int,
                 rng: np.random.Generator, dtype=np.float32):
        if window < 1 or out_features < 1:
            raise ValueError("window and out_features must be >= 1")
        self.in_bins = in_bins
        self.out_features = out_features
        self.window = window
        fan_in = in_bins * window
        self.kernel = Param("kernel", uniform_init(rng, (out_features, in_bins, window), fan_in, dtype))
        self.bias = Param("bias", uniform_init(rng, (out_features,), fan_in, dtype))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.in_bins:
            raise ShapeError(f"expected {self.in_bins} input bins, got {x.shape[0]}")
        t = x.shape[1]
        if t < self.window:
            raise InputTooShortError(
                f"input has {t} time steps, convolution window needs at least {self.window}")
        self._x = x
        # [in, T', w] windows -> [T', in*w] patches, one matmul
        patches = np.lib.stride_tricks.sliding_window_view(x, self.window, axis=1)
        patches = patches.transpose(1, 0, 2).reshape(t - self.window + 1, -1)
        w2 = self.kernel.value.reshape(self.out_features, -1)
        return (patches @ w2.T + self.bias.value).T

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x = self._x
        t_out = grad_out.shape[1]
        self.bias.grad += grad_out.sum(axis=1)
        grad_in = np.zeros_like(x)
        for o in range(self.window):
            self.kernel.grad[:, :, o] += grad_out @ x[:, o:o + t_out].T
            grad_in[:, o:o + t_out] += self.kernel.value[:, :, o].T @ grad_out
        return grad_in

    def params(self) -> list[Param]:
        return [self.kernel, self.bias]


class ReLU:
    def __init__(self):
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * self._mask

    def params(self) -> list[Param]:
        return []


class AvgPool1d:
    """Average pooling over time with overlapping windows.

    Input [F, T'] -> output [F, S] with S = floor((T' - window)/stride) + 1.
    """

    def __init__(self, window: int = 10, stride: int = 5):
        self.window = window
        self.stride = stride
        self._in_len = 0

    def out_len(self, t: int) -> int:
        return (t - self.window) // self.stride + 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        t = x.shape[1]
        if t < self.window:
            raise InputTooShortError(
                f"input has {t} time steps, pooling window needs at least {self.window}")
        self._in_len = t
        s = self.out_len(t)
        windows = np.lib.stride_tricks.sliding_window_view(x, self.window, axis=1)
        return windows[:, ::self.stride][:, :s].mean(axis=2)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        s = grad_out.shape[1]
        grad_in = np.zeros((grad_out.shape[0], self._in_len), dtype=grad_out.dtype)
        scaled = grad_out / self.window
        starts = self.stride * np.arange(s)
        for u in range(self.window):
            # for fixed offset u the target columns are distinct
            grad_in[:, starts + u] += scaled
        return grad_in

    def params(self) -> list[Param]:
        return []


class Dense:
    """Affine layer applied row-wise: [S, n_in] -> [S, n_out]."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float32):
        self.n_in = n_in
        self.n_out = n_out
        self.weights = Param("weights", uniform_init(rng, (n_out, n_in), n_in, dtype))
        self.bias = Param("bias", uniform_init(rng, (n_out,), n_in, dtype))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.n_in:
            raise ShapeError(f"expected {self.n_in} input features, got {x.shape[1]}")
        self._x = x
        return x @ self.weights.value.T + self.bias.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        self.weights.grad += grad_out.T @ self._x
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weights.value

    def params(self) -> list[Param]:
        return [self.weights, self.bias]


class Softmax:
    """Row-wise softmax over the last axis."""

    def __init__(self):
        self._y: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self._y = e / e.sum(axis=-1, keepdims=True)
        return self._y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        y = self._y
        return y * (grad_out - (grad_out * y).sum(axis=-1, keepdims=True))

    def params(self) -> list[Param]:
        return []


def segment_count(frames: int, conv_window: int = 4, pool_window: int = 10,
                  pool_stride: int = 5) -> int:
    """Segments produced by valid conv followed by overlapped pooling."""
    conv_out = frames - conv_window + 1
    if conv_out < pool_window:
        return 0
    return (conv_out - pool_window) // pool_stride + 1


def frames_for_segments(segments: int, conv_window: int = 4, pool_window: int = 10,
                        pool_stride: int = 5) -> int:
    """Smallest input length yielding exactly `segments` segments."""
    return pool_stride * (segments - 1) + pool_window + conv_window - 1


def segment_span(k: int, conv_window: int = 4, pool_window: int = 10,
                 pool_stride: int = 5) -> tuple[int, int]:
    """Input-frame interval [start, end) that segment k draws from."""
    start = pool_stride * k
    return start, start + pool_window + conv_window - 1


def cross_entropy(predicted: np.ndarray, target_class: int) -> float:
    """-log(predicted[target_class]) with the probability floored at PROB_FLOOR."""
    p = min(max(float(predicted[target_class]), PROB_FLOOR), 1.0)
    return -np.log(p)


def cross_entropy_grad(predicted: np.ndarray, target_class: int) -> np.ndarray:
    """Gradient of cross_entropy w.r.t. the predicted distribution."""
    grad = np.zeros_like(predicted)
    p = min(max(float(predicted[target_class]), PROB_FLOOR), 1.0)
    if p > PROB_FLOOR:
        grad[target_class] = -1.0 / p
    return grad


class Adam:
    """Adam with bias correction over a fixed parameter list."""

    def __init__(self, params: list[Param], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise TrainingDivergedError(f"non-finite gradient in parameter {p.name!r}")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self.m, self.v):
            np.add(self.beta1 * m, (1.0 - self.beta1) * p.grad, out=m)
            np.add(self.beta2 * v, (1.0 - self.beta2) * p.grad * p.grad, out=v)
            m_hat = m / bc1
            v_hat = v / bc2
            p.value -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.value.dtype)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
