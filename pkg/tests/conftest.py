from helpers import ACCEPTANCE

CRITERIA = 10


def pytest_terminal_summary(terminalreporter):
    ran = {r.nodeid for key in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(key, [])
           if "test_acceptance.py::test_" in getattr(r, "nodeid", "")}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, CRITERIA + 1):
        if n in ACCEPTANCE:
            title, ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {n:2d} {title}: {detail}")
        elif any(f"::test_{n}_" in nodeid for nodeid in ran):
            terminalreporter.write_line(f"FAIL {n:2d} errored before reaching a verdict")
        else:
            terminalreporter.write_line(f"SKIP {n:2d} not selected in this run")
