"""Bounded-output fully connected ReLU networks.

A network maps R^d to the interval [-bound, +bound]: hidden layers apply
affine maps followed by ReLU, the final layer is affine, and the scalar
output is hard-clipped at +/-bound.  Parameters live in one flat float64
vector (per layer: weight matrix row-major, then bias vector), which is
also the on-disk format and the layout the training kernels consume.

Evaluation is read-only and safe to share across threads; training code
owns its parameter vector exclusively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Architecture",
    "Network",
    "Parameters",
    "ShapeError",
    "he_init",
    "load_network",
    "parameter_count",
    "save_network",
]


class ShapeError(ValueError):
    """Input or parameter dimensions do not match the architecture."""


@dataclass(frozen=True)
class Architecture:
    """Graph structure of a bounded ReLU network.

    Attributes:
        input_dim: number of input coordinates, >= 1.
        hidden_widths: units per hidden layer, one entry per layer, each >= 1.
        output_bound: clamp level for the scalar output, >= 2.
    """

    input_dim: int
    hidden_widths: tuple[int, ...]
    output_bound: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(
            self, "hidden_widths", tuple(int(h) for h in self.hidden_widths)
        )
        object.__setattr__(self, "output_bound", float(self.output_bound))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if len(self.hidden_widths) < 1:
            raise ValueError("at least one hidden layer is required")
        if any(h < 1 for h in self.hidden_widths):
            raise ValueError("hidden widths must be >= 1")
        if not self.output_bound >= 2.0:
            raise ValueError("output_bound must be >= 2")

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.hidden_widths)

    @property
    def dims(self) -> tuple[int, ...]:
        """Layer sizes from input to scalar output."""
        return (self.input_dim, *self.hidden_widths, 1)

    @property
    def parameter_count(self) -> int:
        return parameter_count(self)


def parameter_count(arch: Architecture) -> int:
    """Total number of weights and biases.

    Equals (d+1)*H_1 + sum_l (H_{l-1}+1)*H_l + (H_L+1): every unit owns one
    weight per incoming edge plus a bias, and the output layer is a single
    affine unit.
    """
    dims = arch.dims
    return sum(dims[i + 1] * (dims[i] + 1) for i in range(len(dims) - 1))


def _layer_slices(dims: tuple[int, ...]):
    """Flat-vector slices per layer: (weight_slice, bias_slice, (out, in))."""
    out = []
    off = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = slice(off, off + fan_in * fan_out)
        off += fan_in * fan_out
        b = slice(off, off + fan_out)
        off += fan_out
        out.append((w, b, (fan_out, fan_in)))
    return out


class Parameters:
    """Weights and biases of one network, stored flat.

    The flat vector is the source of truth; ``weight``/``bias`` return
    reshaped views into it, so in-place edits through a view are visible
    everywhere.
    """

    __slots__ = ("arch", "flat", "_slices")

    def __init__(self, arch: Architecture, flat: np.ndarray):
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.ndim != 1 or flat.shape[0] != parameter_count(arch):
            raise ShapeError(
                f"flat parameter vector must have length {parameter_count(arch)}, "
                f"got shape {flat.shape}"
            )
        self.arch = arch
        self.flat = flat
        self._slices = _layer_slices(arch.dims)

    @classmethod
    def from_layers(cls, arch: Architecture, weights, biases) -> "Parameters":
        """Pack per-layer weight matrices and bias vectors.

        ``weights[l]`` must have shape (out_l, in_l) and ``biases[l]`` shape
        (out_l,); shape compatibility with ``arch`` is checked.
        """
        dims = arch.dims
        n_layers = len(dims) - 1
        if len(weights) != n_layers or len(biases) != n_layers:
            raise ShapeError(f"expected {n_layers} weight/bias pairs")
        chunks = []
        for i in range(n_layers):
            w = np.asarray(weights[i], dtype=np.float64)
            b = np.asarray(biases[i], dtype=np.float64)
            if w.shape != (dims[i + 1], dims[i]):
                raise ShapeError(
                    f"layer {i}: weight shape {w.shape} != {(dims[i + 1], dims[i])}"
                )
            if b.shape != (dims[i + 1],):
                raise ShapeError(f"layer {i}: bias shape {b.shape} != {(dims[i + 1],)}")
            chunks.append(w.ravel())
            chunks.append(b)
        return cls(arch, np.concatenate(chunks))

    @classmethod
    def zeros(cls, arch: Architecture) -> "Parameters":
        return cls(arch, np.zeros(parameter_count(arch)))

    def weight(self, layer: int) -> np.ndarray:
        w, _, shape = self._slices[layer]
        return self.flat[w].reshape(shape)

    def bias(self, layer: int) -> np.ndarray:
        _, b, _ = self._slices[layer]
        return self.flat[b]

    @property
    def n_layers(self) -> int:
        return len(self._slices)

    def copy(self) -> "Parameters":
        return Parameters(self.arch, self.flat.copy())

    def __len__(self) -> int:
        return self.flat.shape[0]


def he_init(arch: Architecture, rng: np.random.Generator) -> Parameters:
    """Uniform He-style initialization: weights in +/-sqrt(6/fan_in), biases 0."""
    params = Parameters.zeros(arch)
    dims = arch.dims
    for layer in range(params.n_layers):
        fan_in = dims[layer]
        limit = np.sqrt(6.0 / fan_in)
        params.weight(layer)[...] = rng.uniform(
            -limit, limit, size=params.weight(layer).shape
        )
    return params


@dataclass
class Network:
    """Architecture plus a concrete parameter vector."""

    arch: Architecture
    params: Parameters

    def __post_init__(self) -> None:
        if self.params.arch != self.arch:
            raise ShapeError("parameters were built for a different architecture")

    def forward(self, x) -> float:
        """Evaluate the network at one input point.

        Applies the ReLU layer recursion, then clamps the affine output to
        [-output_bound, +output_bound].
        """
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.arch.input_dim:
            raise ShapeError(
                f"input has length {x.shape[0]}, expected {self.arch.input_dim}"
            )
        h = x
        p = self.params
        last = p.n_layers - 1
        for layer in range(last):
            h = np.maximum(p.weight(layer) @ h + p.bias(layer), 0.0)
        raw = float((p.weight(last) @ h + p.bias(last))[0])
        bound = self.arch.output_bound
        return float(min(max(raw, -bound), bound))

    def predict(self, x_matrix) -> np.ndarray:
        """Evaluate the network on an (n, d) matrix of inputs."""
        from . import backend

        x_matrix = np.ascontiguousarray(x_matrix, dtype=np.float64)
        if x_matrix.ndim == 1:
            x_matrix = x_matrix[:, None]
        if x_matrix.shape[1] != self.arch.input_dim:
            raise ShapeError(
                f"input has {x_matrix.shape[1]} columns, expected {self.arch.input_dim}"
            )
        return backend.batch_forward(
            self.params.flat,
            np.asarray(self.arch.dims, dtype=np.int64),
            self.arch.output_bound,
            x_matrix,
        )

    def __call__(self, x_matrix) -> np.ndarray:
        return self.predict(x_matrix)

    def gradient(self, x, upstream: float = 1.0) -> Parameters:
        """Derivative of the output with respect to every parameter.

        Returns a Parameters-shaped gradient scaled by ``upstream``.  The
        ReLU subgradient at a pre-activation of exactly 0 is taken to be 0,
        and inputs whose unclamped output lies outside (-bound, +bound)
        get an all-zero gradient (the clamp is flat there).
        """
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.arch.input_dim:
            raise ShapeError(
                f"input has length {x.shape[0]}, expected {self.arch.input_dim}"
            )
        p = self.params
        grad = Parameters.zeros(self.arch)
        last = p.n_layers - 1

        acts = [x]
        h = x
        for layer in range(last):
            h = np.maximum(p.weight(layer) @ h + p.bias(layer), 0.0)
            acts.append(h)
        raw = float((p.weight(last) @ h + p.bias(last))[0])
        if abs(raw) >= self.arch.output_bound:
            return grad

        delta = np.array([float(upstream)])
        for layer in range(last, -1, -1):
            grad.weight(layer)[...] = np.outer(delta, acts[layer])
            grad.bias(layer)[...] = delta
            if layer > 0:
                delta = (p.weight(layer).T @ delta) * (acts[layer] > 0.0)
        return grad

    def save(self, path) -> None:
        save_network(self, path)

    @classmethod
    def load(cls, path) -> "Network":
        return load_network(path)


def save_network(net: Network, path) -> None:
    """Write a network as a flat text record.

    Header lines carry the architecture (input dim, number of hidden
    layers, widths, bound); the parameter vector follows one value per
    line.  ``repr`` round-trips every finite float bit-exactly.
    """
    arch = net.arch
    lines = [
        f"d {arch.input_dim}",
        f"L {arch.depth}",
        "H " + " ".join(str(h) for h in arch.hidden_widths),
        f"B {arch.output_bound!r}",
    ]
    lines.extend(repr(float(v)) for v in net.params.flat)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path) -> Network:
    """Read a network saved by :func:`save_network`."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        d = int(lines[0].split()[1])
        depth = int(lines[1].split()[1])
        widths = tuple(int(v) for v in lines[2].split()[1:])
        bound = float(lines[3].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed network file {path}") from exc
    if len(widths) != depth:
        raise ValueError(f"header says {depth} hidden layers, got {len(widths)} widths")
    arch = Architecture(d, widths, bound)
    flat = np.array([float(v) for v in lines[4:]], dtype=np.float64)
    return Network(arch, Parameters(arch, flat))
