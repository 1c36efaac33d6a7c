"""SD-GCN forward pass, link-sign head, loss and hand-written reverse-mode gradients.

Gradients of complex parameters are stored as complex arrays holding
``dL/dRe + i dL/dIm``: every complex parameter is treated as a pair of
independent real parameters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import SignedDigraph, _rng
from .spectral import PhaseParams, hermitian_adjacency, magnetic_laplacian, Kind


def build_operator(g: SignedDigraph, q: PhaseParams | float | None = None) -> sp.csr_matrix:
    """Renormalized propagation ``D~^-1/2 (A_s + I) D~^-1/2 (.) P`` with unit phase on the diagonal."""
    return magnetic_laplacian(hermitian_adjacency(g, q), Kind.RENORMALIZED).matrix


def init_features(g: SignedDigraph, spec: str = "gaussian", seed: int = 0, dim: int = 64) -> np.ndarray:
    """Input signal ``X`` (complex, zero imaginary part).

    ``gaussian``: entries drawn from N(0, 1/dim). ``degree``: the four columns
    ``[in+, in-, out+, out-]`` of signed degree counts, ``log(1 + x)`` scaled.
    """
    n = g.num_nodes
    if spec == "gaussian":
        x = _rng(seed, 2).standard_normal((n, dim)) / np.sqrt(dim)
    elif spec == "degree":
        e = g.edges
        x = np.zeros((n, 4))
        pos = e[:, 2] > 0
        np.add.at(x[:, 0], e[pos, 1], 1.0)
        np.add.at(x[:, 1], e[~pos, 1], 1.0)
        np.add.at(x[:, 2], e[pos, 0], 1.0)
        np.add.at(x[:, 3], e[~pos, 0], 1.0)
        x = np.log1p(x)
    else:
        raise ValueError(f"unknown feature spec {spec!r}")
    return x.astype(np.complex128)


@dataclass
class SdGcnModel:
    """Parameters of a stack of complex spectral convolutions plus real heads.

    ``params`` keys: ``conv{l}.weight`` (complex ``F_l x F_{l+1}``),
    ``conv{l}.bias`` (real ``F_{l+1}``; the complex bias is ``b * (1 + i)``),
    ``unwind.weight`` (``2 F_L x D``), ``unwind.bias``, ``head.weight``
    (``2D x 2``), ``head.bias``. Column 0 of the head is the positive class.
    """

    widths: tuple
    dim: int
    real_weights: bool = True
    params: dict = field(default_factory=dict)

    @property
    def num_layers(self) -> int:
        return len(self.widths) - 1

    def copy(self) -> "SdGcnModel":
        return SdGcnModel(self.widths, self.dim, self.real_weights,
                          {k: v.copy() for k, v in self.params.items()})

    def hyper(self) -> dict:
        return {"widths": list(self.widths), "dim": self.dim, "real_weights": self.real_weights}


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(in_dim: int, layers: int = 2, hidden: int = 64, dim: int = 64,
               seed: int = 0, real_weights: bool = True) -> SdGcnModel:
    if layers < 1:
        raise ValueError("need at least one convolution layer")
    widths = (in_dim,) + (hidden,) * layers
    rng = _rng(seed, 1)
    params = {}
    for l in range(layers):
        params[f"conv{l}.weight"] = _glorot(rng, widths[l], widths[l + 1]).astype(np.complex128)
        params[f"conv{l}.bias"] = np.zeros(widths[l + 1])
    params["unwind.weight"] = _glorot(rng, 2 * widths[-1], dim)
    params["unwind.bias"] = np.zeros(dim)
    params["head.weight"] = _glorot(rng, 2 * dim, 2)
    params["head.bias"] = np.zeros(2)
    return SdGcnModel(widths, dim, real_weights, params)


def complex_relu(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pass ``z`` where ``-pi/2 <= arg z <= pi/2`` (i.e. ``Re z >= 0``), zero elsewhere."""
    mask = z.real >= 0
    return np.where(mask, z, 0), mask


def unwind(x: np.ndarray) -> np.ndarray:
    """Real ``N x 2F`` matrix ``[Re x | Im x]``; the imaginary channel is ``(i Im x)(-i)``."""
    return np.concatenate([x.real, x.imag], axis=1)


@dataclass
class GradientTape:
    operator: sp.csr_matrix
    propagated: list = field(default_factory=list)  # Y @ H_{l-1} per layer
    masks: list = field(default_factory=list)
    unwound: np.ndarray | None = None
    z_pre: np.ndarray | None = None
    z: np.ndarray | None = None
    pairs: np.ndarray | None = None
    pair_features: np.ndarray | None = None


def forward(model: SdGcnModel, operator, x: np.ndarray) -> tuple[np.ndarray, GradientTape]:
    """Node embeddings ``Z`` (real ``N x D``) and the tape needed for :func:`backward`."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[1] != model.widths[0]:
        raise ValueError(f"features have {x.shape[1]} columns, model expects {model.widths[0]}")
    tape = GradientTape(operator)
    h = x
    for l in range(model.num_layers):
        w = model.params[f"conv{l}.weight"]
        b = model.params[f"conv{l}.bias"]
        m = operator @ h
        tape.propagated.append(m)
        pre = m @ w + b * (1 + 1j)
        h, mask = complex_relu(pre)
        tape.masks.append(mask)
    tape.unwound = unwind(h)
    tape.z_pre = tape.unwound @ model.params["unwind.weight"] + model.params["unwind.bias"]
    tape.z = np.maximum(tape.z_pre, 0.0)
    return tape.z, tape


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict_link(model: SdGcnModel, z: np.ndarray, u, v, tape: GradientTape | None = None) -> np.ndarray:
    """Class probabilities ``(positive, negative)`` for edges ``u -> v`` from ``[Z_u | Z_v]``.

    Scalar ``u, v`` return a length-2 vector; arrays return ``(B, 2)``.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=np.int64))
    v = np.atleast_1d(np.asarray(v, dtype=np.int64))
    feats = np.concatenate([z[u], z[v]], axis=1)
    probs = _softmax(feats @ model.params["head.weight"] + model.params["head.bias"])
    if tape is not None:
        tape.pairs = np.column_stack([u, v])
        tape.pair_features = feats
    return probs[0] if scalar else probs


def _targets(labels) -> np.ndarray:
    # label 1 (positive edge) -> class 0
    return 1 - np.asarray(labels, dtype=np.int64)


def loss(probs: np.ndarray, labels) -> float:
    """Mean negative log-likelihood; ``labels`` are 1 for positive edges, 0 for negative."""
    probs = np.atleast_2d(probs)
    t = _targets(labels)
    p = probs[np.arange(len(t)), t]
    return float(-np.mean(np.log(np.maximum(p, np.finfo(float).tiny))))


def loss_grad(probs: np.ndarray, labels) -> np.ndarray:
    """Gradient of :func:`loss` with respect to the head logits."""
    probs = np.atleast_2d(probs)
    t = _targets(labels)
    g = probs.copy()
    g[np.arange(len(t)), t] -= 1.0
    return g / len(t)


def backward(model: SdGcnModel, tape: GradientTape, dlogits: np.ndarray) -> dict:
    """Parameter gradients given ``dL/dlogits`` for the pairs recorded on the tape."""
    if tape is None or tape.pairs is None:
        raise ValueError("backward needs a tape from forward() and predict_link(..., tape=tape)")
    p = model.params
    grads = {}
    grads["head.weight"] = tape.pair_features.T @ dlogits
    grads["head.bias"] = dlogits.sum(axis=0)
    dfeat = dlogits @ p["head.weight"].T
    d = model.dim
    dz = np.zeros_like(tape.z)
    np.add.at(dz, tape.pairs[:, 0], dfeat[:, :d])
    np.add.at(dz, tape.pairs[:, 1], dfeat[:, d:])
    dz_pre = dz * (tape.z_pre > 0)
    grads["unwind.weight"] = tape.unwound.T @ dz_pre
    grads["unwind.bias"] = dz_pre.sum(axis=0)
    dun = dz_pre @ p["unwind.weight"].T
    f = model.widths[-1]
    dh = dun[:, :f] + 1j * dun[:, f:]
    y_h = tape.operator.conj().T.tocsr()
    for l in reversed(range(model.num_layers)):
        dpre = np.where(tape.masks[l], dh, 0)
        grads[f"conv{l}.bias"] = dpre.real.sum(axis=0) + dpre.imag.sum(axis=0)
        w = p[f"conv{l}.weight"]
        gw = tape.propagated[l].conj().T @ dpre
        if model.real_weights:
            gw = gw.real.astype(np.complex128)
        grads[f"conv{l}.weight"] = gw
        if l:
            dh = y_h @ (dpre @ w.conj().T)
    return grads


def loss_and_grad(model: SdGcnModel, operator, x: np.ndarray, edges: np.ndarray) -> tuple[float, dict]:
    """Mean NLL on ``edges`` rows ``(u, v, sign)`` and its parameter gradients."""
    z, tape = forward(model, operator, x)
    probs = predict_link(model, z, edges[:, 0], edges[:, 1], tape=tape)
    labels = (edges[:, 2] > 0).astype(np.int64)
    return loss(probs, labels), backward(model, tape, loss_grad(probs, labels))
