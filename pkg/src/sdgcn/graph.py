"""Signed directed graphs: ingestion, stratified splits and training-batch sampling."""
from __future__ import annotations

import gzip
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (0, 10, 20, 30, 40, 50, 60, 70, 80, 90)
DEFAULT_RATIOS = (0.6, 0.2, 0.2)
MIN_EDGES_PER_SIGN = 5


class ParseError(ValueError):
    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyGraphError(ValueError):
    pass


class StratificationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SignedDigraph:
    """Node count plus an ``(E, 3)`` int array of ``(source, target, sign)`` rows.

    ``node_ids`` holds the original identifier of each dense node index when
    the graph came from a file.
    """

    num_nodes: int
    edges: np.ndarray
    node_ids: tuple = ()
    duplicates: int = 0

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        if len(e):
            if e[:, :2].min() < 0 or e[:, :2].max() >= self.num_nodes:
                raise ValueError("node id out of range")
            if not np.all(np.isin(e[:, 2], (-1, 1))):
                raise ValueError("signs must be +1 or -1")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            keys = e[:, 0] * self.num_nodes + e[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate (source, target) pair")

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable) -> "SignedDigraph":
        return cls(num_nodes, np.array(list(edges), dtype=np.int64).reshape(-1, 3))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_positive(self) -> int:
        return int(np.sum(self.edges[:, 2] > 0))

    @property
    def num_negative(self) -> int:
        return int(np.sum(self.edges[:, 2] < 0))

    def subgraph(self, edge_index) -> "SignedDigraph":
        """Same node set, restricted to the given edge rows."""
        return SignedDigraph(self.num_nodes, self.edges[np.asarray(edge_index, dtype=np.int64)], self.node_ids)

    def induced(self, nodes) -> "SignedDigraph":
        """Subgraph induced by ``nodes`` with ids relabelled to ``0..len(nodes)-1``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = -np.ones(self.num_nodes, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        e = self.edges
        keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
        e = e[keep]
        new = np.column_stack([remap[e[:, 0]], remap[e[:, 1]], e[:, 2]])
        ids = tuple(self.node_ids[i] for i in nodes) if self.node_ids else ()
        return SignedDigraph(len(nodes), new, ids)


def _open_text(path) -> TextIO:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def parse_edge_list(stream: TextIO | Iterable[str], fmt: str = "auto") -> SignedDigraph:
    """Parse a signed edge list.

    Accepts the SNAP signed-network CSV form ``source,target,weight[,timestamp]``
    and the whitespace form ``source target sign``. Lines starting with ``#``
    or ``%`` are comments. Positive weights become ``+1`` and negative weights
    ``-1``; a zero weight is an error. Node ids are remapped densely in order
    of first appearance and repeated ``(source, target)`` pairs keep the first
    record.

    Args:
        stream: text stream or iterable of lines.
        fmt: ``"csv"``, ``"tsv"`` (any whitespace) or ``"auto"`` (per line).
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    ids: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, int]] = []
    duplicates = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        if fmt == "csv" or (fmt == "auto" and "," in line):
            parts = [p.strip() for p in line.split(",")]
        else:
            parts = line.split()
        if len(parts) < 3:
            raise ParseError(f"expected at least 3 fields, got {len(parts)}: {line!r}", lineno)
        src, dst = parts[0], parts[1]
        try:
            weight = float(parts[2])
        except ValueError:
            raise ParseError(f"weight is not a number: {parts[2]!r}", lineno) from None
        if not math.isfinite(weight):
            raise ParseError(f"weight is not finite: {parts[2]!r}", lineno)
        if weight == 0:
            raise ParseError("zero weight has no sign", lineno)
        if src == dst:
            raise ParseError(f"self-loop on node {src!r}", lineno)
        u = ids.setdefault(src, len(ids))
        v = ids.setdefault(dst, len(ids))
        if (u, v) in seen:
            duplicates += 1
            continue
        seen.add((u, v))
        edges.append((u, v, 1 if weight > 0 else -1))
    if not edges:
        raise EmptyGraphError("edge list contains no edges")
    if duplicates:
        log.warning("dropped %d duplicate (source, target) records", duplicates)
    return SignedDigraph(len(ids), np.array(edges, dtype=np.int64), tuple(ids), duplicates)


def load_edge_list(path, fmt: str = "auto") -> SignedDigraph:
    """Read an edge-list file; ``.gz`` files are decompressed transparently."""
    with _open_text(path) as fh:
        return parse_edge_list(fh, fmt)


def serialize_edge_list(g: SignedDigraph, fmt: str = "csv") -> str:
    """Inverse of :func:`parse_edge_list` (uses original node ids when known)."""
    sep = "," if fmt == "csv" else "\t"
    names = g.node_ids or tuple(str(i) for i in range(g.num_nodes))
    return "".join(f"{names[u]}{sep}{names[v]}{sep}{s}\n" for u, v, s in g.edges)


def write_id_map(g: SignedDigraph, path) -> None:
    names = g.node_ids or tuple(str(i) for i in range(g.num_nodes))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("original_id\tdense_id\n")
        for dense, orig in enumerate(names):
            fh.write(f"{orig}\t{dense}\n")


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    """Index arrays into ``graph.edges`` for the train/validation/test partition."""

    graph: SignedDigraph
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int
    ratios: tuple = DEFAULT_RATIOS

    def edges(self, part: str) -> np.ndarray:
        return self.graph.edges[getattr(self, part)]

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
        }

    def write_manifest(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh)


def _rng(*key: int) -> np.random.Generator:
    # PCG64 seeded through SeedSequence: a documented, platform-independent stream
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def _cut(n: int, ratios) -> tuple[int, int]:
    # cumulative floors: each part stays within one edge of its exact share
    a = math.floor(ratios[0] * n + 1e-9)
    b = math.floor((ratios[0] + ratios[1]) * n + 1e-9)
    return a, b


def split_edges(g: SignedDigraph, seed: int, ratios=DEFAULT_RATIOS) -> EdgeSplit:
    """Stratified train/validation/test split.

    Positive and negative edges are shuffled and cut independently, then
    merged per part. Cut points are ``floor(r0 * n)`` and ``floor((r0 + r1) * n)``.
    """
    if g.num_edges == 0:
        raise EmptyGraphError("cannot split an empty graph")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    rng = _rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for sign in (1, -1):
        idx = np.flatnonzero(g.edges[:, 2] == sign)
        if len(idx) < MIN_EDGES_PER_SIGN:
            raise StratificationError(
                f"need at least {MIN_EDGES_PER_SIGN} edges of sign {sign:+d}, got {len(idx)}")
        idx = idx[rng.permutation(len(idx))]
        a, b = _cut(len(idx), ratios)
        for part, chunk in zip(parts, (idx[:a], idx[a:b], idx[b:])):
            part.append(chunk)
    train, val, test = (np.sort(np.concatenate(p)) for p in parts)
    return EdgeSplit(g, train, val, test, seed, tuple(ratios))


@dataclass(frozen=True, eq=False)
class SampledBatch:
    edges: np.ndarray  # (B, 3) rows of (u, v, sign)
    positive_ratio: float

    @property
    def labels(self) -> np.ndarray:
        """1 for positive edges, 0 for negative."""
        return (self.edges[:, 2] > 0).astype(np.int64)


def sample_training_batch(split: EdgeSplit, positive_ratio: float, seed: int, epoch: int) -> SampledBatch:
    """All negative training edges plus ``ceil(ratio * #neg)`` positives drawn without replacement."""
    if positive_ratio <= 0:
        raise ValueError("positive_ratio must be > 0")
    train = split.edges("train")
    pos = train[train[:, 2] > 0]
    neg = train[train[:, 2] < 0]
    want = min(math.ceil(positive_ratio * len(neg) - 1e-9), len(pos))
    rng = _rng(seed, epoch)
    chosen = np.sort(rng.choice(len(pos), size=want, replace=False)) if want else np.zeros(0, dtype=np.int64)
    edges = np.concatenate([pos[chosen], neg])
    return SampledBatch(edges, positive_ratio)


def adjacency(g: SignedDigraph) -> sp.csr_matrix:
    """Binary directed adjacency, ``A(u, v) = 1`` iff ``u -> v``."""
    e = g.edges
    m = sp.csr_matrix((np.ones(len(e), dtype=np.complex128), (e[:, 0], e[:, 1])),
                      shape=(g.num_nodes, g.num_nodes))
    m.sort_indices()
    return m


def sign_matrix(g: SignedDigraph) -> sp.csr_matrix:
    e = g.edges
    m = sp.csr_matrix((e[:, 2].astype(np.complex128), (e[:, 0], e[:, 1])),
                      shape=(g.num_nodes, g.num_nodes))
    m.sort_indices()
    return m


def random_signed_digraph(n: int, edge_prob: float = 0.2, sign_prob: float = 0.5, seed: int = 0) -> SignedDigraph:
    """Erdos-Renyi style signed digraph: each ordered pair u != v is an edge with ``edge_prob``."""
    rng = _rng(seed)
    mask = rng.random((n, n)) < edge_prob
    np.fill_diagonal(mask, False)
    u, v = np.nonzero(mask)
    signs = np.where(rng.random(len(u)) < sign_prob, 1, -1)
    return SignedDigraph(n, np.column_stack([u, v, signs]))
