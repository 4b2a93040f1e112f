from __future__ import annotations

import numpy as np
import pytest

from mlqec import five_qubit_code, hamming_parity_check, hypergraph_product_code


@pytest.fixture(scope="session")
def five():
    return five_qubit_code()


@pytest.fixture(scope="session")
def hamming():
    return hamming_parity_check(3)


@pytest.fixture(scope="session")
def hgp58(hamming):
    return hypergraph_product_code(hamming, name="hamming74_hgp")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in range(1, 12):
        parts = mod.RESULTS.get(criterion)
        if not parts:
            terminalreporter.write_line(f"CRITERION {criterion:>2}: NOT RUN")
            continue
        ok = all(p for p, _ in parts)
        detail = " | ".join(d for _, d in parts)
        terminalreporter.write_line(f"CRITERION {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
