import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def acceptance_log(request):
    """Collects case reports per criterion for the end-of-run summary."""
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(log):
        reports = log[criterion]
        status = "PASS" if all(r.passed for r in reports) else "FAIL"
        runtime = sum(r.runtime for r in reports)
        parts = []
        for r in reports:
            shown = r.failures() or r.checks[:2]
            parts.append(f"{r.name}: " + "; ".join(
                f"{c.name}={c.measured:.6g} (expected {c.expected:.6g})" for c in shown))
        terminalreporter.write_line(
            f"criterion {criterion:>2} {status} [{runtime:.1f}s] " + " | ".join(parts))
