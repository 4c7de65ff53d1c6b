import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criteria results, filled by tests/test_acceptance.py
ACCEPTANCE = {}
ACCEPTANCE_COUNT = 11


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for i in range(1, ACCEPTANCE_COUNT + 1):
        entry = ACCEPTANCE.get(i)
        if entry is None:
            terminalreporter.write_line(f"AC{i:<2} NOT RUN")
            continue
        ok, title, detail = entry
        terminalreporter.write_line(f"AC{i:<2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
