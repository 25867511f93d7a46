import os
import sys

from hypothesis import HealthCheck, settings

# derandomized so reruns see the same examples
settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(results):
        ok, detail = results[i]
        terminalreporter.write_line(mod._line(i, ok, detail))
