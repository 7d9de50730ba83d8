from __future__ import annotations

import functools

import pytest

from sturm_attractor import build_connection_graph, build_sturm_data, builtin_chafee_infante, equilibria

ACCEPTANCE_LINES: list = []


@functools.lru_cache(maxsize=None)
def chafee_infante_run(lam: float, form: str = "fully_nonlinear"):
    """(spec, curve, eqs, data, graph) for a Chafee-Infante instance, cached per session."""
    spec = builtin_chafee_infante(lam, form)
    curve, eqs = equilibria(spec)
    data = build_sturm_data(spec, curve, eqs)
    graph = build_connection_graph(data, eqs)
    return spec, curve, eqs, data, graph


@pytest.fixture(scope="session")
def ci():
    return chafee_infante_run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
