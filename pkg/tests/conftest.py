import pytest

from tcldpc.codes import make_code
from tcldpc.gf2 import BitWord

T_HEX = "5555 5556 AAAA AAAA 5555 5555 5555 5555"
T_PRIME_HEX = "AA6C CB0C C243 AC5F 39DC 7AF4 640B 5D95"
START_HEX = "0347 76C7 2728 95B0"

# the three codewords at distance 15 from t'
NEAR_T_PRIME = (
    "AE6C EF4C C057 BC7F 1DDC FBF4 641B 5D85",
    "AAEC 8F0C CA43 2C5F 3F58 78F4 048B 1DB5",
    "0A4C 8B0C C34B ACDD 29DD FEF4 250B 5D97",
)


ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: long Monte Carlo campaigns (tens of minutes)")
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = mark.args
        status = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number}: {title}" + (f" -- {detail}" if detail else "")))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def code128():
    return make_code("ccsds-128-64")


@pytest.fixture(scope="session")
def t_word():
    return BitWord.from_hex(T_HEX)


@pytest.fixture(scope="session")
def t_prime():
    return BitWord.from_hex(T_PRIME_HEX)


@pytest.fixture(scope="session")
def near_codewords():
    return [BitWord.from_hex(h) for h in NEAR_T_PRIME]
