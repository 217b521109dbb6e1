"""Shared Monte Carlo fixtures and the acceptance summary."""
import pytest

from toeplitz_lab.bergman import MCParams, orthonormal_basis, sample_domain

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def mc3():
    """n=3, lambda=4, 10^6 samples, seed 0, with the degree-4 orthonormal basis."""
    params = MCParams(3, 4.0, 10**6, seed=0)
    samples = sample_domain(params)
    basis = orthonormal_basis(3, 4, params, samples)
    return params, samples, basis


@pytest.fixture(scope="session")
def mc_small():
    params = MCParams(3, 4.0, 20_000, seed=3, chunk=4096)
    return params, sample_domain(params)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance report of this test."""

    def add(text):
        request.node.user_properties.append(("detail", text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, label = marker.args
        if hasattr(report, "wasxfail"):
            status = "FAIL (expected, recorded in the decisions ledger)"
        elif report.outcome == "passed":
            status = "PASS"
        else:
            status = "FAIL"
        notes = [v for k, v in item.user_properties if k == "detail"]
        _ACCEPTANCE.append((number, label, status, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, status, notes in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"criterion {number:>2} {status}: {label}"
        if notes:
            line += f" [{notes}]"
        terminalreporter.write_line(line)

