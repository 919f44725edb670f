import numpy as np

from edgeburst import lattice, verification


def test_short_chain_suite_passes():
    report = verification.run_verification(["fig4b", "fig4d"])
    assert report["passed"]
    assert report["counts"]["fail"] == 0
    names = {c["name"] for c in report["checks"]}
    assert {"chiral-residual", "decay-conservation", "biorthogonality",
            "series-parity", "final-step-closure"} <= names


def test_lossless_preset_skips_decay(monkeypatch):
    report = verification.run_verification(["hermitian"])
    assert report["passed"]
    skipped = {c["name"] for c in report["checks"]
               if c["status"] == "skip"}
    assert "decay-conservation" in skipped


def test_defective_preset_reports_detection():
    report = verification.run_verification(["fig3e"])
    assert report["passed"]
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["exceptional-point-detected"]["status"] == "pass"
    assert by_name["biorthogonality"]["status"] == "skip"


def test_injected_sign_flip_fails_chiral(monkeypatch):
    build = lattice.build_walk_hamiltonian

    def corrupted(params):
        h = build(params)
        h[0, 1] = -h[0, 1]
        return h

    monkeypatch.setattr(lattice, "build_walk_hamiltonian", corrupted)
    report = verification.run_verification(["fig4d"])
    assert not report["passed"]
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["chiral-residual"]["status"] == "fail"
