"""Acceptance criteria 1-10 at full resolution (nx = 1024).

Each test prints one ``CRITERION n: PASS|FAIL`` line; the lines are also
collected in the pytest terminal summary.
"""

import subprocess
import sys
import time

import pytest

from pilot_dirac import verify

S = verify.FULL


def _judge(record, number, title, checks):
    ok = all(c.passed for c in checks)
    detail = "; ".join(" ".join(c.line().split()[1:]) for c in checks)
    record(f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {title} | {detail}")
    failed = [c.name for c in checks if not c.passed]
    assert ok, f"failed checks: {failed}"


def test_criterion_01_clifford_and_bilinears(acceptance_line):
    _judge(acceptance_line, 1, "Clifford identities, real non-spacelike currents", verify.check_clifford(S))


def test_criterion_02_generalized_momentum_oracle(acceptance_line):
    _judge(acceptance_line, 2, "p^a vs finite-difference -dL/du_a", verify.check_momentum_oracle(S))


def test_criterion_03_dL_dj_oracle(acceptance_line):
    _judge(acceptance_line, 3, "dL/dj vs finite differences", verify.check_current_oracle(S))


def test_criterion_04_continuity(acceptance_line):
    _judge(acceptance_line, 4, "continuity residual and 2nd-order decay", verify.check_continuity(S))


def test_criterion_05_gauge_equivalence(acceptance_line):
    _judge(acceptance_line, 5, "phase-sourced vs free evolution", verify.check_gauge(S))


def test_criterion_06_plane_wave_action(acceptance_line):
    _judge(acceptance_line, 6, "plane-wave S, curl, rest closed form", verify.check_plane_wave_action(S))


def test_criterion_07_guidance_and_equivariance(acceptance_line):
    _judge(acceptance_line, 7, "boosted plane wave, KS equivariance, wrong-field control",
           verify.check_guidance(S))


def test_criterion_08_energy_momentum(acceptance_line):
    _judge(acceptance_line, 8, "divergence identities and total energy", verify.check_tensor(S))


def test_criterion_09_field_residuals(acceptance_line):
    _judge(acceptance_line, 9, "field-equation residuals and noise control", verify.check_residuals(S))


def _verify_fast():
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "pilot_dirac", "verify", "--fast"],
                         capture_output=True, check=False)
    return out, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_10_determinism(acceptance_line):
    (a, ta), (b, tb) = _verify_fast(), _verify_fast()
    identical = a.stdout == b.stdout
    ok = identical and a.returncode == 0 and b.returncode == 0 and max(ta, tb) < 60
    acceptance_line(f"CRITERION 10: {'PASS' if ok else 'FAIL'}  verify --fast determinism | "
                    f"byte_identical={identical} exit=({a.returncode},{b.returncode}) "
                    f"wall=({ta:.1f} s, {tb:.1f} s)")
    assert ok
