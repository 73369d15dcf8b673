import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def lse_oracle(z):
    """ln sum exp, pure Python, no shift."""
    return math.log(sum(math.exp(v) for v in z))


def softmax_oracle(z):
    s = sum(math.exp(v) for v in z)
    return [math.exp(v) / s for v in z]


def random_simplex(rng, k, floor=1e-3):
    p = rng.dirichlet(np.ones(k)) + floor
    return p / p.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


def nll_total_oracle(Q, atoms, probs):
    """E over (z_hat, Y) of -ln softmax_Y(z_hat), by enumeration."""
    total = 0.0
    for z, w in zip(atoms, probs):
        p = softmax_oracle(list(z))
        total += w * sum(-q * math.log(py) for q, py in zip(Q, p))
    return total


def random_logit_ensemble(rng, k, max_atoms=8, scale=2.0):
    n = int(rng.integers(1, max_atoms + 1))
    return rng.normal(scale=scale, size=(n, k)), rng.dirichlet(np.ones(n))


# --------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# --------------------------------------------------------------------------

ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
