"""Acceptance criteria 1-11, evaluated on 100-point default runs of every built-in metric.

Each criterion yields one pass/fail line.  Under pytest the lines are printed in
the terminal summary; run this file directly to print them without pytest.
"""

from __future__ import annotations

import sys
import time
from functools import lru_cache

import numpy as np

from cartanv.connections import REINHART_THRESHOLD, reinhart_residual
from cartanv.metrics import BUILTIN_LABELS, builtin
from cartanv.report import to_json
from cartanv.sampling import RunConfig, sample_points
from cartanv.suite import CheckReport, run_suite

SAMPLES = 100
QUADRATIC = ("euclidean", "quadratic-diag", "quadratic-offdiag")
CURVED = ("randers-dual", "quartic-root")


@lru_cache(maxsize=None)
def full_run(label: str) -> tuple[CheckReport, float]:
    start = time.perf_counter()
    report = run_suite(RunConfig(metric=label, dim=3, samples=SAMPLES))
    return report, time.perf_counter() - start


def worst(names, labels=BUILTIN_LABELS) -> float:
    out = 0.0
    for label in labels:
        report, _ = full_run(label)
        for c in report.checks:
            if c.name in names:
                if c.samples == 0:
                    return float("inf")
                out = max(out, c.max_residual)
    return out


def passed(names, labels=BUILTIN_LABELS) -> bool:
    return all(c.verdict == "pass" for label in labels for c in full_run(label)[0].checks if c.name in names)


def _line(k: int, ok: bool, detail: str) -> str:
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


# -- criteria ----------------------------------------------------------------------

def criterion_1():
    start = time.perf_counter()
    residual = 0.0
    counts = []
    for label in BUILTIN_LABELS:
        rep = run_suite(RunConfig(metric=label, samples=SAMPLES, checks=("fundamental_identities",)))
        (c,) = rep.checks
        residual = max(residual, c.max_residual)
        counts.append(c.samples)
    elapsed = time.perf_counter() - start
    ok = residual <= 1e-10 and min(counts) >= SAMPLES and elapsed <= 5.0
    return ok, f"identities max {residual:.2e} <= 1e-10 over {min(counts)}+ points x 5 metrics in {elapsed:.2f} s (<= 5 s)"


def criterion_2():
    alg = worst({"nonlinear_connection"})
    fd = worst({"oracle_tensors", "oracle_connection_dp"})
    ok = alg <= 1e-10 and fd <= 1e-5
    return ok, f"symmetry/homogeneity {alg:.2e} <= 1e-10, oracle agreement {fd:.2e} <= 1e-5"


def criterion_3():
    r = worst({"almost_kaehler", "symplectic_closed"})
    return r <= 1e-9, f"almost-Kaehler structure {r:.2e} <= 1e-9"


def criterion_4():
    r = worst({"integrability"})
    return r <= 1e-9, f"Liouville integrability {r:.2e} <= 1e-9 on all metrics"


def criterion_5():
    r = worst({"fiber_lemma", "radial_geodesic", "umbilic", "fiber_levi_civita"})
    return r <= 1e-9, f"fiber lemma, geodesics, umbilicity, Levi-Civita {r:.2e} <= 1e-9"


def criterion_6():
    curved = worst({"flat_section"}, CURVED)
    control = worst({"flat_section"}, QUADRATIC)
    ok = curved <= 1e-7 and control <= 1e-12
    return ok, f"flat sections {curved:.2e} <= 1e-7 (curved), quadratic control {control:.2e} <= 1e-12"


def criterion_7():
    r = worst({"liouville_fields", "projector", "reduced_basis", "t_identities", "bracket_identities", "full_frame"})
    fd = worst({"oracle_t_dp"})
    ok = r <= 1e-10 and fd <= 1e-5
    return ok, f"Liouville frame suites {r:.2e} <= 1e-10, FD of t {fd:.2e} <= 1e-5"


def criterion_8():
    cr = worst({"cr_structure", "xi_line", "indicatrix_tangency"})
    nu = worst({"nu_identity"})
    closed = worst({"pullback_closed"})
    mini = worst({"minimality"})
    ok = cr <= 1e-9 and nu <= 1e-8 and closed <= 1e-8 and mini <= 1e-6
    return ok, (f"CR {cr:.2e}, volume-form identity {nu:.2e} <= 1e-8, "
                f"pullback closed {closed:.2e} <= 1e-8, minimality {mini:.2e} <= 1e-6")


def reinhart_separation() -> tuple[float, float]:
    """Largest residual on quadratic metrics and smallest on randers-dual."""
    yes, no = 0.0, np.inf
    for label in QUADRATIC + ("randers-dual",):
        d = builtin(label, 3)
        pts = sample_points(RunConfig(metric=label, samples=SAMPLES), d.structure).points
        vals = [reinhart_residual(d.structure, z) for z in pts]
        if d.reinhart_expected:
            yes = max(yes, max(vals))
        else:
            no = min(no, min(vals))
    return yes, no


def criterion_9():
    tor = worst({"vranceanu_torsion"})
    axioms = worst({"vaisman_axioms"})
    verdicts = passed({"reinhart"})
    yes, no = reinhart_separation()
    margin_low = REINHART_THRESHOLD / yes if yes > 0 else np.inf
    margin_high = no / REINHART_THRESHOLD
    unique = passed({"vaisman_uniqueness"})
    ok = tor <= 1e-9 and axioms <= 1e-9 and verdicts and min(margin_low, margin_high) >= 1e3 and unique
    return ok, (f"torsion {tor:.2e}, axioms {axioms:.2e} <= 1e-9; flat-leaf verdicts match flags; "
                f"residual max {yes:.1e} on quadratic vs min {no:.1e} on randers-dual around threshold "
                f"{REINHART_THRESHOLD:g} (margin >= 1e3); perturbations detected: {unique}")


def criterion_10():
    r = worst({"basic_liouville", "basic_horizontal", "basic_perp", "triple_compatibility", "adapted_triple"})
    curv = worst({"line_curvature"})
    ok = r <= 1e-9 and curv <= 1e-10
    return ok, f"basic connections {r:.2e} <= 1e-9, curvature along the radial line {curv:.2e} <= 1e-10"


def criterion_11():
    report, elapsed = full_run("randers-dual")
    small = RunConfig(metric="randers-dual", samples=10, seed=42)
    a = to_json(run_suite(small))
    b = to_json(run_suite(RunConfig(metric="randers-dual", samples=10, seed=42, threads=2)))
    identical = a == b
    oracles = passed({"oracle_tensors", "oracle_connection_dp", "oracle_t_dp"})
    ok = report.passed and elapsed <= 60.0 and identical and oracles
    return ok, (f"randers-dual default suite {'passed' if report.passed else 'FAILED'} in {elapsed:.1f} s (<= 60 s); "
                f"byte-identical reports: {identical}; oracle checks pass: {oracles}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def _run(k: int, record=None) -> bool:
    ok, detail = CRITERIA[k - 1]()
    line = _line(k, ok, detail)
    if record is not None:
        record(line)
    else:
        print(line, flush=True)
    return ok


def test_criterion_01(acceptance_record):
    assert _run(1, acceptance_record)


def test_criterion_02(acceptance_record):
    assert _run(2, acceptance_record)


def test_criterion_03(acceptance_record):
    assert _run(3, acceptance_record)


def test_criterion_04(acceptance_record):
    assert _run(4, acceptance_record)


def test_criterion_05(acceptance_record):
    assert _run(5, acceptance_record)


def test_criterion_06(acceptance_record):
    assert _run(6, acceptance_record)


def test_criterion_07(acceptance_record):
    assert _run(7, acceptance_record)


def test_criterion_08(acceptance_record):
    assert _run(8, acceptance_record)


def test_criterion_09(acceptance_record):
    assert _run(9, acceptance_record)


def test_criterion_10(acceptance_record):
    assert _run(10, acceptance_record)


def test_criterion_11(acceptance_record):
    assert _run(11, acceptance_record)


if __name__ == "__main__":
    results = [_run(k) for k in range(1, len(CRITERIA) + 1)]
    sys.exit(0 if all(results) else 1)
