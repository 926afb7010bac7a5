import functools

import numpy as np
import pytest

from qsemi import catalog
from qsemi.idem import SolverConfig, find_idempotents


@functools.lru_cache(maxsize=None)
def qs_named(name):
    return catalog.build(name)


@functools.lru_cache(maxsize=None)
def idempotents_of(name, starts=64, seed=42):
    return tuple(find_idempotents(qs_named(name), SolverConfig(starts=starts, rng_seed=seed)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# quantum semigroups with weak cancellation, i.e. where the theorems apply
CANCELLATIVE = tuple(n for n in catalog.CATALOG_NAMES if n not in ("leftzero2", "rightzero2", "null3", "mult01"))


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
