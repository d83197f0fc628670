import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pigeonkit.formulas import gen_erphp, gen_php, gen_tphp
from pigeonkit.resolution import construct_erphp_refutation, saturate_bounded

from helpers import ACCEPTANCE, unit_clash


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def clash():
    return unit_clash()


@pytest.fixture(scope="session")
def php3_refutation():
    f = gen_php(3)
    r = saturate_bounded(f, want_proof=True)
    return f, r.proof


@pytest.fixture(scope="session")
def tphp4_refutation():
    f = gen_tphp(4)
    r = saturate_bounded(f, subsumption=True, want_proof=True)
    return f, r.proof


@pytest.fixture(scope="session")
def erphp44_refutation():
    return gen_erphp(4, 4), construct_erphp_refutation(4, 4)


@pytest.fixture(scope="session")
def refutation_suite(clash, php3_refutation, erphp44_refutation):
    return {"unit-clash": clash, "php3": php3_refutation, "erphp44": erphp44_refutation}
