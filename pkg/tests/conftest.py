import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number: int, checks: dict, elapsed: float, limit: float):
        checks = {**checks, f"runtime {elapsed:.1f}s < {limit:g}s": elapsed < limit}
        ok = all(bool(v) for v in checks.values())
        failed = [name for name, v in checks.items() if not v]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (failed: " + "; ".join(failed) + ")"
        lines.append((number, line))
        print(line)
        return ok, failed

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
