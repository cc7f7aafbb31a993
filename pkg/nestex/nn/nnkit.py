import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from nestex.utils.errors import NumericError, ShapeError
from nestex.utils.helpers import derive_rng

logger = logging.getLogger(__name__)

Tensor = np.ndarray

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


# ========== Parameters ==========
class ModelParams:
    """Named float64 tensors with paired gradients and Adam moments."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.values: Dict[str, Tensor] = {}
        self.grads: Dict[str, Tensor] = {}
        self.m: Dict[str, Tensor] = {}
        self.v: Dict[str, Tensor] = {}
        self.step = 0

    def add(self, name: str, shape: Sequence[int], init: str = "xavier", scale: float = 0.1) -> Tensor:
        if name in self.values:
            raise KeyError(f"parameter {name!r} already exists")
        shape = tuple(int(d) for d in shape)
        rng = derive_rng(self.seed, name)
        if init == "zeros":
            value = np.zeros(shape)
        elif init == "normal":
            value = rng.normal(0.0, scale, size=shape)
        elif init == "xavier":
            fan_in, fan_out = (shape[0], shape[-1]) if len(shape) > 1 else (shape[0], shape[0])
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            value = rng.uniform(-bound, bound, size=shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        self.set(name, value)
        return self.values[name]

    def set(self, name: str, value: Tensor) -> None:
        value = np.array(value, dtype=np.float64)
        if name in self.values and self.values[name].shape != value.shape:
            raise ShapeError(f"{name}: shape {value.shape} != {self.values[name].shape}")
        self.values[name] = value
        self.grads[name] = np.zeros_like(value)
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)

    def __getitem__(self, name: str) -> Tensor:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __len__(self) -> int:
        return len(self.values)

    def names(self) -> List[str]:
        return sorted(self.values)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        for name in self.names():
            yield name, self.values[name]

    def grad(self, name: str) -> Tensor:
        return self.grads[name]

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def grad_norm(self) -> float:
        return math.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values()))

    def size(self) -> int:
        return int(sum(v.size for v in self.values.values()))

    def snapshot(self) -> Dict[str, Tensor]:
        return {name: value.copy() for name, value in self.values.items()}

    def restore(self, snapshot: Dict[str, Tensor]) -> None:
        for name, value in snapshot.items():
            self.values[name][...] = value

    def check_finite(self, what: str = "gradients") -> None:
        source = self.grads if what == "gradients" else self.values
        for name in self.names():
            if not np.all(np.isfinite(source[name])):
                raise NumericError(f"non-finite {what} in {name}")


def adam_step(params: ModelParams, lr: float, weight_decay: float = 0.0, clip_norm: float = 0.0,
              beta1: float = BETA1, beta2: float = BETA2, eps: float = ADAM_EPS) -> None:
    """Bias-corrected Adam with decoupled weight decay; zeroes gradients afterwards."""
    scale = 1.0
    if clip_norm > 0.0:
        norm = params.grad_norm()
        if norm > clip_norm:
            scale = clip_norm / norm
    params.step += 1
    t = params.step
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    for name in params.names():
        g = params.grads[name] * scale
        m, v, theta = params.m[name], params.v[name], params.values[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        theta -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * theta)
    params.zero_grad()


# ========== Layers ==========
def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return special.log_softmax(x, axis=axis)


def softmax_cross_entropy(logits: Tensor, gold: int) -> Tuple[float, Tensor]:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 1 or not 0 <= gold < logits.size:
        raise ShapeError(f"bad logits shape {logits.shape} for gold {gold}")
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[gold] -= 1.0
    return float(-logp[gold]), grad


def softmax_cross_entropy_rows(logits: Tensor, golds: Sequence[int]) -> Tuple[float, Tensor]:
    """Summed cross-entropy over rows of a (m, k) logit matrix."""
    if logits.shape[0] == 0:
        return 0.0, np.zeros_like(logits)
    golds = np.asarray(golds, dtype=np.int64)
    logp = log_softmax(logits, axis=1)
    rows = np.arange(logits.shape[0])
    grad = np.exp(logp)
    grad[rows, golds] -= 1.0
    return float(-np.sum(logp[rows, golds])), grad


@dataclass
class MLP:
    """Feedforward stack: Linear (ReLU, dropout, Linear)*; no nonlinearity on the output."""
    name: str
    d_in: int
    d_hidden: int
    d_out: int
    layers: int = 2
    dropout: float = 0.4

    def __post_init__(self):
        if self.layers < 1:
            raise ShapeError("an MLP needs at least one layer")

    @property
    def widths(self) -> List[int]:
        return [self.d_in] + [self.d_hidden] * (self.layers - 1) + [self.d_out]

    def param_names(self) -> List[str]:
        return [f"{self.name}.{kind}{i}" for i in range(self.layers) for kind in ("W", "b")]

    def init_params(self, params: ModelParams) -> None:
        widths = self.widths
        for i in range(self.layers):
            params.add(f"{self.name}.W{i}", (widths[i], widths[i + 1]), init="xavier")
            params.add(f"{self.name}.b{i}", (widths[i + 1],), init="zeros")


@dataclass
class MlpCache:
    inputs: List[Tensor] = field(default_factory=list)
    pre: List[Tensor] = field(default_factory=list)
    masks: List[Optional[Tensor]] = field(default_factory=list)


def mlp_forward(mlp: MLP, params: ModelParams, x: Tensor, train_mode: bool = False,
                rng: Optional[np.random.Generator] = None) -> Tuple[Tensor, MlpCache]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mlp.d_in:
        raise ShapeError(f"{mlp.name}: expected (n, {mlp.d_in}) input, got {x.shape}")
    cache = MlpCache()
    h = x
    for i in range(mlp.layers):
        cache.inputs.append(h)
        z = h @ params[f"{mlp.name}.W{i}"] + params[f"{mlp.name}.b{i}"]
        if i == mlp.layers - 1:
            return z, cache
        cache.pre.append(z)
        h = np.maximum(z, 0.0)
        mask = None
        if train_mode and mlp.dropout > 0.0:
            if rng is None:
                raise ValueError("dropout in train mode needs a seeded generator")
            keep = 1.0 - mlp.dropout
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
        cache.masks.append(mask)
    raise AssertionError("unreachable")


def mlp_backward(mlp: MLP, params: ModelParams, cache: MlpCache, dout: Tensor) -> Tensor:
    """Accumulates parameter gradients and returns d(loss)/d(input)."""
    d = dout
    for i in reversed(range(mlp.layers)):
        w = f"{mlp.name}.W{i}"
        params.grads[w] += cache.inputs[i].T @ d
        params.grads[f"{mlp.name}.b{i}"] += d.sum(axis=0)
        d = d @ params[w].T
        if i > 0:
            mask = cache.masks[i - 1]
            if mask is not None:
                d = d * mask
            d = d * (cache.pre[i - 1] > 0.0)
    return d


# ========== Gradient checking ==========
@dataclass
class GradCheckReport:
    checked: int = 0
    max_rel_err: float = 0.0
    tol: float = 1e-4
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return f"{verdict}: {self.checked} coordinates, max relative error {self.max_rel_err:.3e} (tol {self.tol:g})"


def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(loss_fn: Callable[[ModelParams], float], params: ModelParams, eps: float = 1e-5,
               tol: float = 1e-4, samples: int = 50, seed: int = 0,
               names: Optional[Sequence[str]] = None, floor: float = 1e-4) -> GradCheckReport:
    """Compares analytic gradients to central differences on sampled coordinates.

    `loss_fn` must be deterministic and accumulate gradients into `params`.
    Gradients with magnitude below `floor` are compared in absolute terms.
    """
    names = list(names) if names is not None else params.names()
    params.zero_grad()
    loss_fn(params)
    analytic = {name: params.grads[name].copy() for name in names}
    params.zero_grad()

    rng = np.random.default_rng(seed)
    sizes = np.array([params[name].size for name in names])
    if sizes.sum() == 0:
        return GradCheckReport(tol=tol)
    coords = []
    if samples >= sizes.sum():
        coords = [(name, j) for name in names for j in range(params[name].size)]
    else:
        picks = rng.choice(int(sizes.sum()), size=samples, replace=False)
        offsets = np.cumsum(sizes)
        for flat in sorted(int(p) for p in picks):
            k = int(np.searchsorted(offsets, flat, side="right"))
            start = int(offsets[k - 1]) if k > 0 else 0
            coords.append((names[k], flat - start))

    report = GradCheckReport(tol=tol)
    for name, j in coords:
        flat = params[name].reshape(-1)
        saved = flat[j]
        flat[j] = saved + eps
        f_plus = loss_fn(params)
        flat[j] = saved - eps
        f_minus = loss_fn(params)
        flat[j] = saved
        numeric = (f_plus - f_minus) / (2.0 * eps)
        a = float(analytic[name].reshape(-1)[j])
        err = relative_error(a, numeric, floor)
        report.checked += 1
        report.max_rel_err = max(report.max_rel_err, err)
        if not err <= tol:
            report.failures.append(f"{name}[{j}]: analytic {a:.8e} numeric {numeric:.8e} rel {err:.3e}")
    params.zero_grad()
    logger.info("gradcheck %s", report.summary())
    return report
