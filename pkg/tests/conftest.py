import re


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", nodeid)
            if m and rep.when == "call" or (m and outcome == "error"):
                lines.append((int(m.group(1)), outcome, m.group(2)))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, outcome, name in sorted(lines):
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{tag}  criterion {num:2d}  {name.replace('_', ' ')}")
