import math
import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from sdgcn.graph import SignedDigraph

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parent.parent

DATASETS = {
    "bitcoin_alpha": ("SDGCN_BITCOIN_ALPHA", "soc-sign-bitcoinalpha.csv"),
    "bitcoin_otc": ("SDGCN_BITCOIN_OTC", "soc-sign-bitcoinotc.csv"),
}


def dataset_path(name: str) -> Path | None:
    """Location of a SNAP file: env var first, then ``data/`` (plain or .gz)."""
    env, filename = DATASETS[name]
    if os.environ.get(env):
        p = Path(os.environ[env])
        return p if p.exists() else None
    for candidate in (ROOT / "data" / filename, ROOT / "data" / (filename + ".gz")):
        if candidate.exists():
            return candidate
    return None


@pytest.fixture
def two_node_positive():
    return SignedDigraph.from_edges(2, [(0, 1, 1)])


@pytest.fixture
def trust_graph():
    """12 nodes, every ordered pair rated; a rating is positive iff the target is even."""
    edges = [(u, v, 1 if v % 2 == 0 else -1) for u in range(12) for v in range(12) if u != v]
    return SignedDigraph.from_edges(12, edges)


Q_VALUES = (0.0, 0.1 * math.pi, 0.25 * math.pi, 0.5 * math.pi)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def record_criterion(label: str, status: str, detail: str) -> None:
    ACCEPTANCE_LINES[label] = f"criterion {label:<6} {status:<7} {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for label in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split("-")[0]), k)):
            terminalreporter.write_line(ACCEPTANCE_LINES[label])
