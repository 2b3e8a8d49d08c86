"""Acceptance criteria at full scale, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities and the time budget; the assertion is the criterion itself.
Expect roughly fifteen minutes on one core.
"""
import pytest

from lerw3d import acceptance as A

CRITERIA = [
    (1, lambda d: A.loop_erasure_exact()),
    (2, lambda d: A.laplacian_ground_truth()),
    (3, lambda d: A.domain_markov()),
    (4, lambda d: A.wilson_uniformity(d)),
    (5, lambda d: A.green_check(d)),
    (6, lambda d: A.growth_exponent(d)),
    (7, lambda d: A.tails(d)),
    (8, lambda d: A.l2_trend(d)),
    (9, lambda d: A.quasi_loop_decay(d)),
    (10, lambda d: A.metric_axioms(d)),
    (11, lambda d: A.exit_increments(d)),
    (12, lambda d: A.ilerw_truncation(d)),
    (13, lambda d: A.determinism(d)),
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.slow
@pytest.mark.parametrize("number,check", CRITERIA, ids=[f"criterion_{n:02d}" for n, _ in CRITERIA])
def test_criterion(number, check, workdir, capsys):
    result = check(workdir)
    with capsys.disabled():
        print("\n" + result.line(), flush=True)
    assert result.number == number
    assert result.passed, result.line()
