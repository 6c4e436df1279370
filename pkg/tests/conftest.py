import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def reference_cache(tmp_path_factory):
    """Cache directory shared by every test that needs the default GinUE reference."""
    return tmp_path_factory.mktemp("ginue_cache")


@pytest.fixture(scope="session")
def ginue_default(reference_cache):
    """Pooled CSR statistics of 50 GinUE matrices at N=2000 (about ten minutes on one core)."""
    from ginspectra.csr_stats import ginue_reference

    return ginue_reference(cache_dir=reference_cache)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
