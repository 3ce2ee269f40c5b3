import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# acceptance bookkeeping: criterion number -> title, node ids, outcomes, details
_CRITERIA: dict[int, dict] = {}
_NODE_CRITERION: dict[str, int] = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is None:
            continue
        number, title = mark.args
        entry = _CRITERIA.setdefault(number, {"title": title, "outcomes": [], "details": []})
        _NODE_CRITERION[item.nodeid] = number
        entry["expected"] = entry.get("expected", 0) + 1


def pytest_runtest_logreport(report):
    number = _NODE_CRITERION.get(report.nodeid)
    if number is None:
        return
    entry = _CRITERIA[number]
    if report.when == "call" or report.outcome != "passed":
        entry["outcomes"].append(report.outcome)
    if report.when == "call":
        entry["details"].extend(f"{k}={v}" for k, v in report.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        ran = outcomes.count("passed")
        if not outcomes:
            status = "NOT RUN"
        elif ran == entry["expected"] and all(o == "passed" for o in outcomes):
            status = "PASS"
        elif "failed" in outcomes:
            status = "FAIL"
        else:
            status = "INCOMPLETE"
        detail = f"  [{', '.join(entry['details'])}]" if entry["details"] else ""
        terminalreporter.write_line(f"{status:<10} criterion {number}: {entry['title']}{detail}")
