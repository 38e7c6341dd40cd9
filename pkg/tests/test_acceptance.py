"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Every criterion runs the registered CLI checks for its area with the full
(non-quick) configuration, so this file and `ukzb all` agree by construction.
"""
import time
import warnings

import pytest

from ukzb import cli

CRITERIA = {
    1: ("scalar identity suite", ("theta.",), 30),
    2: ("presentation engine", ("lie.witt", "lie.presentations"), 120),
    3: ("delta_2m derivation suite", ("lie.delta",), 120),
    4: ("universal flatness", ("kzb.sum", "kzb.flat"), 300),
    5: ("associator", ("assoc.",), 120),
    6: ("elliptic generator identities", ("ell.commutator", "ell.A_", "ell.B_", "ell.mixed",
                                          "ell.empty", "ell.images", "ell.psi"), 300),
    7: ("monodromy", ("mono.",), 600),
    8: ("realization suite", ("real.",), 300),
    9: ("Cherednik suite", ("cher.", "daha."), 600),
    10: ("Theta~ relation suite (experimental)", ("ell.theta.",), 300),
}


def _select(prefixes, experimental):
    out = [c for c in cli.REGISTRY if c.id.startswith(prefixes) and c.experimental == experimental]
    assert out, "no checks registered for %s" % (prefixes,)
    return out


def _run(number):
    name, prefixes, limit = CRITERIA[number]
    cfg = cli.RunConfig("all", seed=0)
    t0 = time.time()
    records = [cli.run_check(c, cfg) for c in _select(prefixes, number == 10)]
    elapsed = time.time() - t0
    return name, limit, records, elapsed


def _line(capsys, number, name, ok, records, elapsed, limit, word=None):
    bad = [r.id for r in records if not r.passed]
    status = word or ("PASS" if ok else "FAIL")
    with capsys.disabled():
        print("\n[criterion %2d] %s  %s: %d checks, %.1fs (limit %ds)%s"
              % (number, status, name, len(records), elapsed, limit,
                 "" if not bad else "; failing: " + ", ".join(bad)))


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    name, limit, records, elapsed = _run(number)
    ok = all(r.passed for r in records) and elapsed < limit
    _line(capsys, number, name, ok, records, elapsed, limit)
    for r in records:
        assert r.passed, "%s residual %.3g >= %g %s" % (r.id, r.residual, r.tolerance, r.error or "")
    assert elapsed < limit, "runtime %.1fs exceeds %ds" % (elapsed, limit)


def test_criterion_10_warns_only(capsys):
    name, limit, records, elapsed = _run(10)
    bad = [r for r in records if not r.passed]
    for r in bad:
        warnings.warn("%s residual %.3g exceeds %g" % (r.id, r.residual, r.tolerance))
    _line(capsys, 10, name, not bad, records, elapsed, limit, None if not bad else "WARN")
