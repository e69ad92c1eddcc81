import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Reference study detection counts: exchange, pair, alleged, distance, density, hybrid
REFERENCE_COUNTS = [
    ("Lbank", "DBC/NEO", 13, 8, 5, 9),
    ("Kucoin", "CAPP/BTC", 11, 7, 4, 11),
    ("Lbank", "TKY/ETH", 10, 10, 3, 11),
    ("Bittrex", "DCT/BTC", 10, 2, 4, 4),
    ("Bittrex", "BRX/BTC", 9, 5, 7, 8),
    ("Binance", "MDA/ETH", 9, 3, 4, 5),
    ("Bittrex", "EMC/BTC", 8, 10, 4, 11),
    ("Kucoin", "ADB/BTC", 7, 2, 3, 3),
    ("Bittrex", "GNT/ETH", 7, 4, 7, 7),
]

# Reference study per-pair statistics: exchange, pair, max density, threshold, common, impact
REFERENCE_STATS = [
    ("Lbank", "DBC/NEO", 9, 8000, 4, "Distance"),
    ("Kucoin", "CAPP/BTC", 8, 500, 0, "Distance"),
    ("Lbank", "TKY/ETH", 8, 4000, 2, "Distance"),
    ("Bittrex", "DCT/BTC", 8, 1400, 2, "Density"),
    ("Bittrex", "BRX/BTC", 8, 4, 4, "Density"),
    ("Binance", "MDA/ETH", 8, 210, 2, "Density"),
    ("Bittrex", "RBV/BTC", 8, 100, 2, "Density"),
    ("Bittrex", "EMC/BTC", 8, 18, 3, "Distance"),
    ("Kucoin", "ADB/BTC", 8, 3000, 2, "Density"),
    ("Bittrex", "GNT/ETH", 7, 95, 4, "Density"),
]


def joined_rows():
    """Pairs present in both reference tables: counts plus common count and impact."""
    t3 = {(e, p): (c, imp) for e, p, _, _, c, imp in REFERENCE_STATS}
    return [(*row, *t3[row[:2]]) for row in REFERENCE_COUNTS if row[:2] in t3]


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
