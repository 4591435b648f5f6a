"""The eight acceptance criteria at their stated tolerances, one test each."""

import pytest

from rabikernel.acceptance import CHECKS


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, acceptance_report):
    result = CHECKS[number]()
    line = result.summary_line()
    acceptance_report.append(line)
    print(line)
    failed = [s for s in result.subchecks if not s.passed]
    assert not failed, "\n".join(f"{s.label}: {s.error:.3g} (limit {s.limit:g})" for s in failed)
