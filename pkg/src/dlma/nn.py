"""Small dense Q-network engine: plain MLPs and residual MLPs with RMSProp.

Every network keeps its parameters in one flat buffer; the per-layer
weight matrices and bias vectors are views into it.  That makes the optimizer
update, target-network copies and snapshot files plain vector operations.

Layout of a residual network with ``h`` hidden layers (``h = 2 + 2B``)::

    x -> relu(fc0) -> relu(fc1) -> [h + relu(fc_b2(relu(fc_b1(h))))] * B -> linear out

ReLU is applied inside the residual branch only; the shortcut is added raw.
Weights are stored ``(fan_in, fan_out)`` and inputs are batches of rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

PLAIN = "plain"
RESNET = "resnet"


@dataclass(frozen=True)
class NetworkSpec:
    n_in: int
    n_out: int
    hidden: int = 64
    hidden_layers: int = 6
    arch: str = RESNET

    def __post_init__(self):
        for name in ("n_in", "n_out", "hidden", "hidden_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"NetworkSpec.{name} must be >= 1, got {getattr(self, name)}")
        if self.arch not in (PLAIN, RESNET):
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.arch == RESNET and (self.hidden_layers < 2 or self.hidden_layers % 2):
            raise ValueError(
                f"a residual network has 2 + 2*blocks hidden layers, got {self.hidden_layers}"
            )

    @property
    def blocks(self) -> int:
        return (self.hidden_layers - 2) // 2 if self.arch == RESNET else 0

    def layer_shapes(self) -> list[tuple[int, int]]:
        widths = [self.n_in] + [self.hidden] * self.hidden_layers + [self.n_out]
        return list(zip(widths[:-1], widths[1:]))

    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes())

    def header(self) -> str:
        return (
            f"dlma-qnn arch={self.arch} in={self.n_in} hidden={self.hidden} "
            f"layers={self.hidden_layers} out={self.n_out} params={self.n_params()}"
        )

    @classmethod
    def from_header(cls, line: str) -> "NetworkSpec":
        tokens = line.split()
        if not tokens or tokens[0] != "dlma-qnn":
            raise ValueError(f"not a weight snapshot header: {line!r}")
        fields = dict(t.split("=", 1) for t in tokens[1:])
        spec = cls(
            n_in=int(fields["in"]),
            n_out=int(fields["out"]),
            hidden=int(fields["hidden"]),
            hidden_layers=int(fields["layers"]),
            arch=fields["arch"],
        )
        if int(fields["params"]) != spec.n_params():
            raise ValueError(f"header parameter count {fields['params']} != {spec.n_params()}")
        return spec


class Cache:
    """Activations from a forward pass, consumed by :meth:`Network.backward`."""

    __slots__ = ("x", "acts", "theta_version")

    def __init__(self, x, acts, theta_version):
        self.x = x
        self.acts = acts
        self.theta_version = theta_version


class Network:
    """Parameters plus forward/backward passes for one :class:`NetworkSpec`.

    ``dtype`` selects the arithmetic precision; training runs use float32
    for speed, gradient checks use float64.
    """

    def __init__(self, spec: NetworkSpec, theta: np.ndarray | None = None, dtype=np.float64):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        if theta is None:
            self.theta = np.zeros(spec.n_params(), dtype=self.dtype)
        else:
            self.theta = np.array(theta, dtype=self.dtype)
        if self.theta.shape != (spec.n_params(),):
            raise ValueError(f"expected {spec.n_params()} parameters, got {self.theta.shape}")
        self._layout = _layout(spec)
        self.weights, self.biases = _views(self.theta, self._layout)
        # bumped by in-place updates so stale caches are detected
        self.version = 0

    @classmethod
    def initialized(cls, spec: NetworkSpec, rng: np.random.Generator, dtype=np.float64) -> "Network":
        """Uniform weights with bound ``sqrt(6 / fan_in)``, zero biases."""
        net = cls(spec, dtype=dtype)
        for w in net.weights:
            bound = np.sqrt(6.0 / w.shape[0])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return net

    def copy(self) -> "Network":
        return Network(self.spec, self.theta, self.dtype)

    def load_from(self, other: "Network") -> None:
        if other.spec != self.spec or other.dtype != self.dtype:
            raise ValueError("cannot copy parameters between different network specs")
        np.copyto(self.theta, other.theta)
        self.version += 1

    # -- forward ------------------------------------------------------------

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def forward(self, x: np.ndarray) -> np.ndarray:
        single = x.ndim == 1
        out, _ = self._forward(np.atleast_2d(x), keep=False)
        return out[0] if single else out

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, Cache]:
        x = np.atleast_2d(x)
        out, acts = self._forward(x, keep=True)
        return out, Cache(x, acts, self.version)

    def _forward(self, x, keep):
        if x.shape[1] != self.spec.n_in:
            raise ValueError(f"input width {x.shape[1]} != network input width {self.spec.n_in}")
        W, b = self.weights, self.biases
        acts = []
        if self.spec.arch == PLAIN:
            h = x
            for i in range(self.spec.hidden_layers):
                h = _dense_relu(h, W[i], b[i])
                acts.append(h)
        else:
            h = _dense_relu(x, W[0], b[0])
            acts.append(h)
            h = _dense_relu(h, W[1], b[1])
            acts.append(h)
            for j in range(2, self.spec.hidden_layers, 2):
                u = _dense_relu(h, W[j], b[j])
                v = _dense_relu(u, W[j + 1], b[j + 1])
                h = h + v
                acts.extend((u, v, h))
        out = h @ W[-1]
        out += b[-1]
        return out, (acts if keep else None)

    # -- backward -----------------------------------------------------------

    def backward(self, cache: Cache, dout: np.ndarray, input_grad: bool = False):
        """Gradient of ``sum(dout * forward(x))`` w.r.t. the parameters.

        Rows of a batch are summed.  Returns a flat array shaped like
        ``theta``; with ``input_grad`` also the gradient w.r.t. ``x``.
        """
        if cache.theta_version != self.version:
            raise ValueError("forward cache is stale: parameters changed since it was computed")
        dout = np.atleast_2d(dout)
        if dout.shape != (cache.x.shape[0], self.spec.n_out):
            raise ValueError(f"loss gradient shape {dout.shape} does not match network output")
        grad = np.empty_like(self.theta)
        gW, gb = _views(grad, self._layout)
        W, acts, x = self.weights, cache.acts, cache.x
        n = self.spec.hidden_layers

        g = dout
        top = acts[-1]
        np.matmul(top.T, g, out=gW[-1])
        np.sum(g, axis=0, out=gb[-1])
        g = g @ W[-1].T

        if self.spec.arch == PLAIN:
            for i in range(n - 1, -1, -1):
                g *= acts[i] > 0
                below = acts[i - 1] if i > 0 else x
                np.matmul(below.T, g, out=gW[i])
                np.sum(g, axis=0, out=gb[i])
                if i > 0 or input_grad:
                    g = g @ W[i].T
        else:
            # acts = [h0, h1, (u, v, h) per block]
            k = len(acts) - 1
            for j in range(n - 2, 1, -2):
                u, v = acts[k - 2], acts[k - 1]
                h_in = acts[k - 3]
                gv = g * (v > 0)
                np.matmul(u.T, gv, out=gW[j + 1])
                np.sum(gv, axis=0, out=gb[j + 1])
                gu = gv @ W[j + 1].T
                gu *= u > 0
                np.matmul(h_in.T, gu, out=gW[j])
                np.sum(gu, axis=0, out=gb[j])
                g += gu @ W[j].T
                k -= 3
            g = g * (acts[1] > 0)
            np.matmul(acts[0].T, g, out=gW[1])
            np.sum(g, axis=0, out=gb[1])
            g = g @ W[1].T
            g *= acts[0] > 0
            np.matmul(x.T, g, out=gW[0])
            np.sum(g, axis=0, out=gb[0])
            if input_grad:
                g = g @ W[0].T
        if input_grad:
            return grad, g
        return grad

    # -- snapshots ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write((self.spec.header() + "\n").encode("ascii"))
            fh.write(self.theta.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path, dtype=np.float64) -> "Network":
        with open(path, "rb") as fh:
            spec = NetworkSpec.from_header(fh.readline().decode("ascii"))
            theta = np.frombuffer(fh.read(), dtype="<f8")
        if theta.size != spec.n_params():
            raise ValueError(f"{path}: expected {spec.n_params()} floats, found {theta.size}")
        return cls(spec, theta, dtype)


def _dense_relu(x, w, b):
    z = x @ w
    z += b
    return np.maximum(z, 0, out=z)


def _layout(spec: NetworkSpec) -> list[tuple[int, int, int]]:
    """(offset, fan_in, fan_out) of each layer's weights; its bias follows."""
    out, pos = [], 0
    for fan_in, fan_out in spec.layer_shapes():
        out.append((pos, fan_in, fan_out))
        pos += fan_in * fan_out + fan_out
    return out


def _views(flat: np.ndarray, layout):
    weights, biases = [], []
    for pos, fan_in, fan_out in layout:
        end = pos + fan_in * fan_out
        weights.append(flat[pos:end].reshape(fan_in, fan_out))
        biases.append(flat[end : end + fan_out])
    return weights, biases


class RMSProp:
    """avg <- d*avg + (1-d)*g^2 ;  theta <- theta - lr*g / (sqrt(avg) + eps)."""

    def __init__(
        self, n_params: int, lr: float = 0.01, decay: float = 0.9, eps: float = 1e-6, dtype=np.float64
    ):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.avg = np.zeros(n_params, dtype=dtype)
        self._tmp = np.empty_like(self.avg)
        self._tiny = self.avg.dtype.type(1e-30)

    def step(self, net: Network, grad: np.ndarray) -> None:
        if grad.shape != self.avg.shape:
            raise ValueError(f"gradient shape {grad.shape} != parameter shape {self.avg.shape}")
        avg, tmp = self.avg, self._tmp
        np.multiply(avg, self.decay, out=avg)
        np.multiply(grad, grad, out=tmp)
        np.multiply(tmp, 1.0 - self.decay, out=tmp)
        np.add(avg, tmp, out=avg)
        # keep decaying averages out of the subnormal range (slow on x86)
        np.maximum(avg, self._tiny, out=avg)
        np.sqrt(avg, out=tmp)
        np.add(tmp, self.eps, out=tmp)
        np.divide(grad, tmp, out=tmp)
        np.multiply(tmp, self.lr, out=tmp)
        np.subtract(net.theta, tmp, out=net.theta)
        net.version += 1


def rmsprop_step(net: Network, grad: np.ndarray, opt: RMSProp) -> Network:
    opt.step(net, grad)
    return net


def sync_target(online: Network, target: Network) -> None:
    """Make ``target`` an independent copy of ``online``'s parameters."""
    target.load_from(online)
