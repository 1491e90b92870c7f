"""Declarative network specs and the two model builders.

A NetworkSpec is an ordered list of layers with every hyperparameter
resolved; layers name their inputs, so parallel branches and merges are
plain list entries. `infer_shapes` walks the list and yields each layer's
per-example output shape (batch axis omitted), which the builders use to
validate the architecture end to end before any graph exists.

`build_frnet1` is the feature-distilling autoencoder: a strided 1x1
convolution and max-pool front end, one inception block, then dense layers
whose first (default 4096-wide) activation is exported as the learned
representation. `build_frnet2` is the interaction classifier: the same
front end, two inception blocks run in parallel at strides 1 and 2 (the
stride-1 branch max-pooled down before the channel merge), a final
inception block, and a dense head ending in a single sigmoid unit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import EVAL, TRAIN, Graph
from .errors import ShapeMismatchError
from .nnops import same_pad
from .rng import INIT
from .tensor import Tensor

DEEP_FEATURES = "deep-features"


@dataclass(frozen=True)
class InceptionSpec:
    """Parallel 1x1-bottlenecked convolutions plus a pooling passthrough.

    Each conv branch is a 1x1 convolution to `bottleneck_channels` followed
    by an (fh, fw) convolution to the branch's output channels; the pool
    branch is a max-pool that preserves channels. The module stride is
    carried by each branch's second stage (spatial conv or pool), so all
    branches agree on spatial extents and concatenate on the channel axis.
    """

    bottleneck_channels: int = 16
    branches: tuple[tuple[int, int, int], ...] = ((3, 3, 64), (2, 2, 64), (5, 5, 32))
    pool_kernel: int = 1
    stride: int = 1

    def out_channels(self, in_channels: int) -> int:
        return sum(oc for _, _, oc in self.branches) + in_channels


@dataclass(frozen=True)
class Layer:
    name: str
    inputs: tuple[str, ...]


@dataclass(frozen=True)
class Input(Layer):
    item_shape: tuple[int, ...]


@dataclass(frozen=True)
class Conv(Layer):
    filter_height: int
    filter_width: int
    out_channels: int
    stride: int
    activation: str = "relu"
    l2_scale: float = 0.0


@dataclass(frozen=True)
class Pool(Layer):
    kernel: int
    stride: int


@dataclass(frozen=True)
class Inception(Layer):
    spec: InceptionSpec
    l2_scale: float = 0.0


@dataclass(frozen=True)
class Flatten(Layer):
    pass


@dataclass(frozen=True)
class Dense(Layer):
    width: int
    activation: str = "relu"
    l2_scale: float = 0.0


@dataclass(frozen=True)
class Dropout(Layer):
    keep_prob: float


@dataclass(frozen=True)
class Concat(Layer):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    model_kind: str
    layers: tuple[Layer, ...]
    taps: dict[str, str] = field(default_factory=dict)

    @property
    def input_layer(self) -> Input:
        return self.layers[0]

    @property
    def output_layer(self) -> Layer:
        return self.layers[-1]


def _conv_out(hw: tuple[int, int], fh: int, fw: int, stride: int) -> tuple[int, int]:
    return same_pad(hw[0], fh, stride)[2], same_pad(hw[1], fw, stride)[2]


def infer_shapes(spec: NetworkSpec) -> dict[str, tuple[int, ...]]:
    """Per-example output shape of every layer, batch axis omitted."""
    shapes: dict[str, tuple[int, ...]] = {}
    for layer in spec.layers:
        ins = [shapes[n] for n in layer.inputs]
        if isinstance(layer, Input):
            if len(layer.item_shape) != 3:
                raise ShapeMismatchError(f"input shape must be (h, w, c), got {layer.item_shape}")
            out = tuple(layer.item_shape)
        elif isinstance(layer, Conv):
            h, w, _ = ins[0]
            out = _conv_out((h, w), layer.filter_height, layer.filter_width, layer.stride) + (
                layer.out_channels,
            )
        elif isinstance(layer, Pool):
            h, w, c = ins[0]
            out = _conv_out((h, w), layer.kernel, layer.kernel, layer.stride) + (c,)
        elif isinstance(layer, Inception):
            h, w, c = ins[0]
            sp = layer.spec
            spatial = {_conv_out((h, w), fh, fw, sp.stride) for fh, fw, _ in sp.branches}
            spatial.add(_conv_out((h, w), sp.pool_kernel, sp.pool_kernel, sp.stride))
            if len(spatial) != 1:
                raise ShapeMismatchError(f"inception {layer.name}: branch extents diverge {spatial}")
            out = spatial.pop() + (sp.out_channels(c),)
        elif isinstance(layer, Flatten):
            out = (math.prod(ins[0]),)
        elif isinstance(layer, Dense):
            if len(ins[0]) != 1:
                raise ShapeMismatchError(f"dense {layer.name} needs a flat input, got {ins[0]}")
            out = (layer.width,)
        elif isinstance(layer, Dropout):
            out = ins[0]
        elif isinstance(layer, Concat):
            if any(len(s) != 3 for s in ins):
                raise ShapeMismatchError(f"concat {layer.name} needs rank-3 item inputs")
            if len({s[:2] for s in ins}) != 1:
                raise ShapeMismatchError(f"concat {layer.name}: spatial extents differ: {ins}")
            out = ins[0][:2] + (sum(s[2] for s in ins),)
        else:
            raise ShapeMismatchError(f"unknown layer kind {type(layer).__name__}")
        shapes[layer.name] = out
    return shapes


def build_frnet1(
    feature_count: int = 1476,
    orientation: tuple[int, int] = (211, 7),
    hidden: tuple[int, int] = (4096, 2048),
    bottleneck_channels: int = 16,
    keep_prob: float = 0.5,
    l2_scale: float = 0.001,
) -> NetworkSpec:
    """Autoencoder spec: padded [h, w, 1] image in, original features out.

    The input carries feature_count + 1 values (one zero appended), shaped
    per `orientation`; the output reconstructs the unpadded vector. The
    activations of the first dense layer are tapped as the representation
    handed to the classifier.
    """
    h, w = orientation
    if h * w != feature_count + 1:
        raise ShapeMismatchError(
            f"orientation {orientation} cannot hold {feature_count} features plus one pad"
        )
    incep = InceptionSpec(bottleneck_channels=bottleneck_channels, stride=1)
    layers = (
        Input("in", (), (h, w, 1)),
        Conv("conv1", ("in",), 1, 1, 32, 2, "relu", l2_scale),
        Pool("pool1", ("conv1",), 2, 2),
        Inception("incep1", ("pool1",), incep, l2_scale),
        Flatten("flat", ("incep1",)),
        Dense("fc1", ("flat",), hidden[0], "relu", l2_scale),
        Dense("fc2", ("fc1",), hidden[1], "relu", l2_scale),
        Dropout("drop", ("fc2",), keep_prob),
        Dense("out", ("drop",), feature_count, "sigmoid", l2_scale),
    )
    spec = NetworkSpec("frnet1", layers, taps={DEEP_FEATURES: "fc1"})
    infer_shapes(spec)
    return spec


def build_frnet2(
    feature_count: int = 4096,
    hidden: tuple[int, int] = (2048, 512),
    bottleneck_channels: int = 16,
    keep_prob: float = 0.5,
    l2_scale: float = 0.001,
) -> NetworkSpec:
    """Classifier spec: square feature image in, interaction probability out.

    The extracted features are viewed as a [side, side, 1] image (side^2 =
    feature_count). After the shared conv/pool front end, two inception
    blocks run in parallel at strides 1 and 2; the stride-1 branch is
    max-pooled to the stride-2 geometry and the two are merged on channels,
    keeping both receptive-field scales.
    """
    side = math.isqrt(feature_count)
    if side * side != feature_count:
        raise ShapeMismatchError(f"feature count {feature_count} is not a perfect square")

    def incep(stride: int) -> InceptionSpec:
        return InceptionSpec(bottleneck_channels=bottleneck_channels, stride=stride)

    layers = (
        Input("in", (), (side, side, 1)),
        Conv("conv1", ("in",), 1, 1, 32, 2, "relu", l2_scale),
        Pool("pool1", ("conv1",), 2, 2),
        Inception("incep_s1", ("pool1",), incep(1), l2_scale),
        Pool("pool_s1", ("incep_s1",), 2, 2),
        Inception("incep_s2", ("pool1",), incep(2), l2_scale),
        Concat("merge", ("pool_s1", "incep_s2")),
        Inception("incep_top", ("merge",), incep(1), l2_scale),
        Flatten("flat", ("incep_top",)),
        Dense("fc1", ("flat",), hidden[0], "relu", l2_scale),
        Dense("fc2", ("fc1",), hidden[1], "relu", l2_scale),
        Dropout("drop", ("fc2",), keep_prob),
        Dense("out", ("drop",), 1, "sigmoid", l2_scale),
    )
    spec = NetworkSpec("frnet2", layers, taps={})
    infer_shapes(spec)
    return spec


# ---------------------------------------------------------------------------
# spec <-> plain-dict serialization (checkpoint payload)

_LAYER_KINDS = {
    "input": Input,
    "conv": Conv,
    "pool": Pool,
    "inception": Inception,
    "flatten": Flatten,
    "dense": Dense,
    "dropout": Dropout,
    "concat": Concat,
}
_KIND_NAMES = {v: k for k, v in _LAYER_KINDS.items()}


def spec_to_dict(spec: NetworkSpec) -> dict:
    layers = []
    for layer in spec.layers:
        d = {"kind": _KIND_NAMES[type(layer)], "name": layer.name, "inputs": list(layer.inputs)}
        if isinstance(layer, Input):
            d["item_shape"] = list(layer.item_shape)
        elif isinstance(layer, Conv):
            d.update(
                fh=layer.filter_height,
                fw=layer.filter_width,
                out_channels=layer.out_channels,
                stride=layer.stride,
                activation=layer.activation,
                l2_scale=layer.l2_scale,
            )
        elif isinstance(layer, Pool):
            d.update(kernel=layer.kernel, stride=layer.stride)
        elif isinstance(layer, Inception):
            d.update(
                bottleneck=layer.spec.bottleneck_channels,
                branches=[list(b) for b in layer.spec.branches],
                pool_kernel=layer.spec.pool_kernel,
                stride=layer.spec.stride,
                l2_scale=layer.l2_scale,
            )
        elif isinstance(layer, Dense):
            d.update(width=layer.width, activation=layer.activation, l2_scale=layer.l2_scale)
        elif isinstance(layer, Dropout):
            d["keep_prob"] = layer.keep_prob
        layers.append(d)
    return {"model_kind": spec.model_kind, "layers": layers, "taps": dict(spec.taps)}


def spec_from_dict(d: dict) -> NetworkSpec:
    layers = []
    for ld in d["layers"]:
        kind, name, inputs = ld["kind"], ld["name"], tuple(ld["inputs"])
        if kind == "input":
            layers.append(Input(name, inputs, tuple(ld["item_shape"])))
        elif kind == "conv":
            layers.append(
                Conv(name, inputs, ld["fh"], ld["fw"], ld["out_channels"], ld["stride"],
                     ld["activation"], ld["l2_scale"])
            )
        elif kind == "pool":
            layers.append(Pool(name, inputs, ld["kernel"], ld["stride"]))
        elif kind == "inception":
            sp = InceptionSpec(
                bottleneck_channels=ld["bottleneck"],
                branches=tuple(tuple(b) for b in ld["branches"]),
                pool_kernel=ld["pool_kernel"],
                stride=ld["stride"],
            )
            layers.append(Inception(name, inputs, sp, ld["l2_scale"]))
        elif kind == "flatten":
            layers.append(Flatten(name, inputs))
        elif kind == "dense":
            layers.append(Dense(name, inputs, ld["width"], ld["activation"], ld["l2_scale"]))
        elif kind == "dropout":
            layers.append(Dropout(name, inputs, ld["keep_prob"]))
        elif kind == "concat":
            layers.append(Concat(name, inputs))
        else:
            raise ShapeMismatchError(f"unknown layer kind {kind!r}")
    return NetworkSpec(d["model_kind"], tuple(layers), taps=dict(d["taps"]))


# ---------------------------------------------------------------------------
# graph compilation


def _init_weight(rng, shape, fan_in, fan_out) -> Tensor:
    if rng is None:
        return Tensor.zeros(shape)
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(np.float32))


class CompiledModel:
    """A NetworkSpec instantiated as a computation graph with parameters.

    Holds the placeholder/output/loss node ids and the tap map. The loss is
    mean binary cross-entropy on the output plus each layer's l2_scale *
    sum(w^2) penalty (weights only, never biases).
    """

    def __init__(self, spec: NetworkSpec, init_seed: int, random_init: bool = True):
        self.spec = spec
        self.shapes = infer_shapes(spec)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([init_seed, INIT])))
        if not random_init:
            rng = None
        g = Graph()
        self.graph = g
        outputs: dict[str, int] = {}
        l2_terms: list[int] = []

        def add_conv(name, src, fh, fw, cin, cout, stride, activation, l2):
            w = g.parameter(f"{name}/w", _init_weight(rng, (fh, fw, cin, cout), fh * fw * cin, fh * fw * cout))
            b = g.parameter(f"{name}/b", Tensor.zeros((cout,)))
            node = g.apply("conv2d", [src, w, b], name=name, stride=stride)
            if activation != "none":
                node = g.apply(activation, [node], name=f"{name}/{activation}")
            if l2 > 0:
                l2_terms.append(g.apply("l2_penalty", [w], name=f"{name}/l2", scale=l2))
            return node

        for layer in spec.layers:
            ins = [outputs[n] for n in layer.inputs]
            if isinstance(layer, Input):
                node = g.placeholder("x")
            elif isinstance(layer, Conv):
                cin = self.shapes[layer.inputs[0]][2]
                node = add_conv(
                    layer.name, ins[0], layer.filter_height, layer.filter_width,
                    cin, layer.out_channels, layer.stride, layer.activation, layer.l2_scale,
                )
            elif isinstance(layer, Pool):
                node = g.apply("maxpool2d", ins, name=layer.name, kernel=layer.kernel, stride=layer.stride)
            elif isinstance(layer, Inception):
                cin = self.shapes[layer.inputs[0]][2]
                sp = layer.spec
                parts = []
                for k, (fh, fw, oc) in enumerate(sp.branches):
                    red = add_conv(f"{layer.name}/b{k}/reduce", ins[0], 1, 1, cin,
                                   sp.bottleneck_channels, 1, "relu", layer.l2_scale)
                    parts.append(add_conv(f"{layer.name}/b{k}/conv", red, fh, fw,
                                          sp.bottleneck_channels, oc, sp.stride, "relu", layer.l2_scale))
                parts.append(g.apply("maxpool2d", ins, name=f"{layer.name}/pool",
                                     kernel=sp.pool_kernel, stride=sp.stride))
                node = g.apply("concat", parts, name=layer.name)
            elif isinstance(layer, Flatten):
                node = g.apply("flatten", ins, name=layer.name)
            elif isinstance(layer, Dense):
                n_in = self.shapes[layer.inputs[0]][0]
                w = g.parameter(f"{layer.name}/w", _init_weight(rng, (n_in, layer.width), n_in, layer.width))
                b = g.parameter(f"{layer.name}/b", Tensor.zeros((layer.width,)))
                node = g.apply("matmul", [ins[0], w], name=f"{layer.name}/mm")
                node = g.apply("bias_add", [node, b], name=f"{layer.name}/badd")
                if layer.activation != "none":
                    node = g.apply(layer.activation, [node], name=f"{layer.name}/{layer.activation}")
                if layer.l2_scale > 0:
                    l2_terms.append(g.apply("l2_penalty", [w], name=f"{layer.name}/l2", scale=layer.l2_scale))
            elif isinstance(layer, Dropout):
                node = g.apply("dropout", ins, name=layer.name, keep_prob=layer.keep_prob)
            elif isinstance(layer, Concat):
                node = g.apply("concat", ins, name=layer.name)
            else:
                raise ShapeMismatchError(f"unknown layer kind {type(layer).__name__}")
            outputs[layer.name] = node

        self.input_id = outputs[spec.input_layer.name]
        self.output_id = outputs[spec.output_layer.name]
        self.tap_ids = {tap: outputs[lname] for tap, lname in spec.taps.items()}
        self.target_id = g.placeholder("y")
        self.data_loss_id = g.apply("bce", [self.output_id, self.target_id], name="data_loss", eps=1e-7)
        loss = self.data_loss_id
        for term in l2_terms:
            loss = g.apply("add", [loss, term], name=f"loss_acc_{term}")
        self.loss_id = loss
        self.param_ids = g.parameters()

    def params(self) -> dict[str, Tensor]:
        return {name: self.graph.nodes[i].value for name, i in self.param_ids.items()}

    def set_params(self, params: dict[str, Tensor]) -> None:
        for name, value in params.items():
            self.graph.set_parameter(self.param_ids[name], value)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Eval-mode forward; returns the output activations as float32."""
        vals = self.graph.forward({self.input_id: Tensor(x)}, mode=EVAL, outputs=[self.output_id])
        return vals[self.output_id].data

    def tap(self, x: np.ndarray, tap_name: str = DEEP_FEATURES) -> np.ndarray:
        node = self.tap_ids[tap_name]
        vals = self.graph.forward({self.input_id: Tensor(x)}, mode=EVAL, outputs=[node])
        return vals[node].data

    def train_step_grads(self, x: np.ndarray, y: np.ndarray, dropout_seed: int):
        """Forward+backward in train mode; returns (total loss, data loss, grads by name)."""
        feeds = {self.input_id: Tensor(x), self.target_id: Tensor(y)}
        vals = self.graph.forward(feeds, mode=TRAIN, dropout_seed=dropout_seed, outputs=[self.loss_id])
        grads_by_id = self.graph.backward(self.loss_id)
        grads = {name: grads_by_id[i] for name, i in self.param_ids.items()}
        total = float(vals[self.loss_id].data[0])
        data = float(self.graph.value(self.data_loss_id).data[0])
        return total, data, grads


def compile_model(spec: NetworkSpec, init_seed: int, random_init: bool = True) -> CompiledModel:
    return CompiledModel(spec, init_seed, random_init=random_init)


# Extraction always runs the graph on blocks of exactly this many rows,
# zero-padding the tail. BLAS kernels pick different accumulation paths for
# different matrix shapes, so only a fixed block shape makes the extracted
# rows independent of how callers partition their inputs.
_EXTRACT_BLOCK = 32


def extract_features(model: CompiledModel, x: np.ndarray, tap: str = DEEP_FEATURES) -> np.ndarray:
    """Eval-mode tap activations for every row of x, in row order.

    Bitwise invariant to input partitioning: extracting rows one at a time
    yields the same matrix as extracting them all at once.
    """
    width = model.shapes[model.spec.taps[tap]][0]
    n = len(x)
    if n == 0:
        return np.zeros((0, width), dtype=np.float32)
    rows = []
    for start in range(0, n, _EXTRACT_BLOCK):
        chunk = np.asarray(x[start : start + _EXTRACT_BLOCK], dtype=np.float32)
        real = len(chunk)
        if real < _EXTRACT_BLOCK:
            pad = np.zeros((_EXTRACT_BLOCK - real,) + chunk.shape[1:], dtype=np.float32)
            chunk = np.concatenate([chunk, pad], axis=0)
        rows.append(model.tap(chunk, tap)[:real])
    return np.concatenate(rows, axis=0)


def reconstruction_accuracy(pred: Tensor, target: Tensor, tol: float = 0.5) -> float:
    """Fraction of elements whose 0/1 roundings (threshold 0.5) agree within tol."""
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"shapes {pred.shape} and {target.shape} differ")
    rp = (pred.data >= 0.5).astype(np.float64)
    rt = (target.data >= 0.5).astype(np.float64)
    return float(np.mean(np.abs(rp - rt) < tol))


def parameter_manifest(spec: NetworkSpec) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every trainable tensor, in graph creation order.

    Mirrors the naming used by CompiledModel, so a checkpoint can be
    validated against its embedded spec without instantiating a graph.
    """
    shapes = infer_shapes(spec)
    manifest: dict[str, tuple[int, ...]] = {}

    def conv_entry(name, fh, fw, cin, cout):
        manifest[f"{name}/w"] = (fh, fw, cin, cout)
        manifest[f"{name}/b"] = (cout,)

    for layer in spec.layers:
        if isinstance(layer, Conv):
            cin = shapes[layer.inputs[0]][2]
            conv_entry(layer.name, layer.filter_height, layer.filter_width, cin, layer.out_channels)
        elif isinstance(layer, Inception):
            cin = shapes[layer.inputs[0]][2]
            sp = layer.spec
            for k, (fh, fw, oc) in enumerate(sp.branches):
                conv_entry(f"{layer.name}/b{k}/reduce", 1, 1, cin, sp.bottleneck_channels)
                conv_entry(f"{layer.name}/b{k}/conv", fh, fw, sp.bottleneck_channels, oc)
        elif isinstance(layer, Dense):
            n_in = shapes[layer.inputs[0]][0]
            manifest[f"{layer.name}/w"] = (n_in, layer.width)
            manifest[f"{layer.name}/b"] = (layer.width,)
    return manifest


def parameter_count(spec: NetworkSpec) -> int:
    """Total trainable scalars across all layers."""
    return sum(math.prod(shape) for shape in parameter_manifest(spec).values())
