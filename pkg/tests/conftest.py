import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance line, then fail the test if the criterion failed."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        request.config._acceptance[number] = (title, ok, detail)
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} {detail}")
        assert ok, f"criterion {number} failed: {title} {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = getattr(config, "_acceptance", {})
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(rows):
        title, ok, detail = rows[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title} {detail}".rstrip())
