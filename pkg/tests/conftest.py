"""Shared pytest hooks: acceptance-criterion PASS/FAIL summary lines."""

CRITERIA = {
    "01": "Sphere-2D hybrid convergence rate and evaluation budget",
    "02": "Booth hybrid vs plain-GA convergence separation",
    "03": "Beale hybrid vs plain-GA convergence separation",
    "04": "Rastrigin-25D mean best cost at fixed budget",
    "05": "Rosenbrock-25D mean best cost at fixed budget",
    "06": "Simplex move equations, involution, volume, monotonicity",
    "07": "Degeneracy guard firing and corrective orthogonality",
    "08": "Landau oscillator baseline, integrator order, control runs",
    "09": "Program semantics: introns, determinism, finiteness",
    "10": "Weighted-combination simplex vs brute-force weight grid",
    "11": "Stepped runs: seeded stage hand-off and paired wins",
    "12": "Checkpoint replay, external protocol, k-fold harness",
}

_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    number = report.nodeid.split("test_criterion_")[1][:2]
    if report.when == "call":
        _results[number] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _results[number] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        name = CRITERIA.get(number, "")
        terminalreporter.write_line(
            f"criterion {number} [{_results[number]}] {name}")
