import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (sub-check, passed, detail)
ACCEPTANCE = defaultdict(list)


def record(criterion, name, passed, detail=""):
    ACCEPTANCE[criterion].append((name, bool(passed), detail))
    print(f"criterion {criterion} [{name}]: {'PASS' if passed else 'FAIL'} {detail}")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        failed = [name for name, ok, _ in checks if not ok]
        flag = "FAIL" if failed else "PASS"
        tail = f" (failing: {'; '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {crit}: {flag} [{len(checks) - len(failed)}/{len(checks)} sub-checks]{tail}")
        for name, ok, detail in checks:
            terminalreporter.write_line(f"    {'PASS' if ok else 'FAIL'}  {name}  {detail}")
