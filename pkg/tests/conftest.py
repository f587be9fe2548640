import itertools

import numpy as np
import pytest


def brute_force(instance):
    """Independent oracle: energies of all 2^n states by plain Python products."""
    n = instance.n_spins
    terms = [(t.sites, t.coupling) for t in instance.terms]
    best = None
    argmins = []
    for bits in itertools.product((1, -1), repeat=n):
        e = 0.0
        for sites, c in terms:
            p = 1
            for i in sites:
                p *= bits[i]
            e += c * p
        if best is None or e < best - 1e-9:
            best, argmins = e, [bits]
        elif abs(e - best) <= 1e-9:
            argmins.append(bits)
    return best, np.array(argmins, dtype=np.int8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""

    def report(label: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip("."))):
            terminalreporter.write_line(line)
