from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from ifsgraph.config import load_config
from ifsgraph.field import ParameterContext
from ifsgraph.graph import build_graph, contract_single_child
from ifsgraph.ifs import IFS, Similarity

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

RHO, R = Fraction(1, 2), Fraction(3, 10)
P_FIG = (Fraction(1, 5), Fraction(1, 2), Fraction(3, 10))

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def rational_ifs(maps, probs, normalize=True) -> IFS:
    ifs = IFS(tuple(Similarity(Fraction(a), Fraction(b)) for a, b in maps),
              tuple(Fraction(p) for p in probs), ParameterContext(()))
    return ifs.normalize_hull() if normalize else ifs


def exifs(rho=RHO, r=R, probs=P_FIG) -> IFS:
    return rational_ifs([(rho, 0), (r, rho * (1 - r)), (r, 1 - r)], probs)


@pytest.fixture(scope="session")
def exifs_graph():
    return build_graph(exifs())


@pytest.fixture(scope="session")
def exifs_contracted(exifs_graph):
    return contract_single_child(exifs_graph)


@pytest.fixture(scope="session")
def cantor_graph():
    return build_graph(rational_ifs([("1/3", 0), ("1/3", "2/3")], ["1/4", "3/4"]))


@pytest.fixture(scope="session")
def cantor_uniform_graph():
    return build_graph(rational_ifs([("1/3", 0), ("1/3", "2/3")], ["1/2", "1/2"]))


@pytest.fixture(scope="session")
def convolution_graph():
    return build_graph(load_config(str(CONFIGS / "cantor_convolution.toml")).build_ifs())


@pytest.fixture(scope="session")
def golden_graph():
    return build_graph(load_config(str(CONFIGS / "golden.toml")).build_ifs())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
