import time
from contextlib import contextmanager

import pytest

from helpers import burgers_problem
from symflux.modeq import DifferentialApproximation, differential_approximation


@pytest.fixture(scope="session")
def problem():
    return burgers_problem()


@pytest.fixture(scope="session")
def das(problem):
    """Pi-forms of every scheme in the Burgers file, keyed by scheme name."""
    return {
        s.name: differential_approximation(s.expr, problem.pde_rhs, name=s.name)
        for s in problem.schemes
    }


@pytest.fixture(scope="session")
def continuous(problem):
    return DifferentialApproximation.continuous(problem.pde_rhs)


# -- acceptance summary -----------------------------------------------------

ACCEPTANCE_TITLES = {
    1: "modified equations match the hand-expanded displays",
    2: "continuous Burgers algebra is 6-dimensional",
    3: "FTCS algebra is 4-dimensional",
    4: "Lax-Wendroff and Crank-Nicolson share the FTCS algebra",
    5: "Galilean and projective symmetries are lost",
    6: "every emitted generator has zero residual",
    7: "kernel property suite (1000 cases each)",
    8: "error gradings and differential approximation orders",
}
_acceptance_key = pytest.StashKey[dict]()


class AcceptanceRecorder:
    def __init__(self, store: dict):
        self.store = store

    @contextmanager
    def criterion(self, n: int, budget: float):
        """Time the block; record PASS only if it neither fails nor overruns."""
        start = time.perf_counter()
        notes: list = []
        try:
            yield notes
        except BaseException as exc:
            self.store[n] = (False, f"{type(exc).__name__}: {exc}".splitlines()[0][:160])
            raise
        elapsed = time.perf_counter() - start
        detail = "; ".join(notes + [f"{elapsed:.2f}s (budget {budget:g}s)"])
        ok = elapsed < budget
        self.store[n] = (ok, detail)
        assert ok, f"criterion {n} exceeded its time budget: {detail}"


@pytest.fixture(scope="session")
def acceptance(request):
    return AcceptanceRecorder(request.config.stash.setdefault(_acceptance_key, {}))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_acceptance_key, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in store:
            ok, detail = store[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {title} [{detail}]")
        else:
            terminalreporter.write_line(f"criterion {n}: FAIL - {title} [not run]")
