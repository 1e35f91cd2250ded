from pathlib import Path

import pytest

from fibm.graph import CommunityPartition, Graph

DATA = Path(__file__).resolve().parents[1] / "src" / "fibm" / "data"


def chain(weights=(1.0, 1.0)):
    """A->B->C as nodes 0->1->2."""
    return Graph.from_arcs(3, [(0, 1, weights[0]), (1, 2, weights[1])], labels=["A", "B", "C"])


def one_community(n):
    return CommunityPartition.from_assignment([0] * n)


@pytest.fixture
def path_graph():
    return chain()


@pytest.fixture
def karate_paths():
    return DATA / "karate.txt", DATA / "karate_communities.txt"


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p
    return _write


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
