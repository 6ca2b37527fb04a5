import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion.

    Lines are printed immediately (visible with ``-s``) and repeated in the
    terminal summary at the end of the run.
    """
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: str, ok: bool, detail: str = "") -> bool:
        line = f"{criterion}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_complex(rng, r, c=None):
    c = r if c is None else c
    return rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))


def random_hermitian(rng, d):
    g = random_complex(rng, d)
    return (g + g.conj().T) / 2
