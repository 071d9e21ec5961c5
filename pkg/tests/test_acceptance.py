"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, criterion1_datasets, forms_data
from pluriminimal.exact import GaussRational
from pluriminimal.expr import to_polynomial
from pluriminimal.family import FamilyInput, self_intersect, solve_family, split_pairs
from pluriminimal.relations import PolyBasis, build_mu, diagonalize, emit_map, kernel, relation_from_six
from pluriminimal.weierstrass import (
    Tolerances,
    check_closed,
    check_conformal,
    check_rank,
    conformality_matrices,
    immerse,
    j_invariance_residual,
    line_mean_curvature_fd,
    metric_blocks,
    sample_polydisk,
    second_fundamental_form,
    verify_data,
)


def report(label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def condition_checks(data, seed, conf_tol=1e-12):
    """Closedness, conformality, rank at 100 points; FD mean curvature on 10 lines."""
    rng = np.random.default_rng(seed)
    Z = sample_polydisk(rng, 100, data.m, 2.0)
    closed = check_closed(data, Z, 1e-10)
    conf = check_conformal(data, Z, conf_tol)
    rank = check_rank(data, Z, 1e-9)
    idx = rng.integers(0, 100, 10)
    V = sample_polydisk(rng, 10, data.m, 1.0)
    mc = max(line_mean_curvature_fd(data, Z[i], v / np.linalg.norm(v)) for i, v in zip(idx, V))
    ok = closed.passed and conf.passed and rank.passed and mc < 1e-6
    return ok, dict(closed=closed.worst, conformality=conf.worst, min_rank=rank.detail["min_rank"], mean_curvature=mc)


def kaehler_checks(data, seed):
    rng = np.random.default_rng(seed)
    worst = dict(ABt=0.0, BAt=0.0, AAt_BBt=0.0, min_eig=np.inf, J=0.0)
    for z in sample_polydisk(rng, 100, data.m, 2.0):
        mb = metric_blocks(data, z)
        worst["ABt"] = max(worst["ABt"], np.linalg.norm(mb.ABt))
        worst["BAt"] = max(worst["BAt"], np.linalg.norm(mb.BAt))
        worst["AAt_BBt"] = max(worst["AAt_BBt"], np.linalg.norm(mb.AAt - mb.BBt))
        worst["min_eig"] = min(worst["min_eig"], np.linalg.eigvalsh(mb.metric)[0])
        worst["J"] = max(worst["J"], j_invariance_residual(mb.metric))
    parts = {
        "ABt,BAt<1e-10": worst["ABt"] < 1e-10 and worst["BAt"] < 1e-10,
        "AAt=BBt": worst["AAt_BBt"] < 1e-10,
        "pos.def": worst["min_eig"] > 0,
        "J-invariant": worst["J"] < 1e-10,
    }
    return parts, worst


def circularity_checks(data, seed):
    rng = np.random.default_rng(seed)
    circ = mc = 0.0
    for z in sample_polydisk(rng, 20, data.m, 2.0):
        sf = second_fundamental_form(data, z, sample_polydisk(rng, 10, data.m, 1.0))
        circ = max(circ, sf.circularity_residual)
        mc = max(mc, float(np.max(sf.mean_curvature_norms)))
    return circ < 1e-9 and mc < 1e-9, circ, mc


@pytest.fixture(scope="module")
def c1_data():
    return criterion1_datasets(seed=0)


def test_criterion_1_forward_direction(c1_data):
    t0 = time.perf_counter()
    data = criterion1_datasets(seed=0)
    results = [condition_checks(d, seed=k) for k, d in enumerate(data)]
    elapsed = time.perf_counter() - t0
    worst = {key: max(r[1][key] for r in results) for key in ("closed", "conformality", "mean_curvature")}
    ok = all(r[0] for r in results) and elapsed < 30
    assert report(
        1,
        ok,
        f"{sum(r[0] for r in results)}/{len(results)} data sets pass; worst closed {worst['closed']:.2g}, "
        f"conformality {worst['conformality']:.2g}, FD mean curvature {worst['mean_curvature']:.2g}; "
        f"{elapsed:.1f} s",
    )


def test_criterion_2_necessity():
    cases = {
        # the non-closed form z2 dz1 with its isotropic partner and a flat chart,
        # so that only closedness can fail
        "closed": forms_data([["z2", "0"], ["1i*z2", "0"], ["1", "0"], ["1i", "0"], ["0", "1"], ["0", "1i"]]),
        "rank": forms_data([["1", "0"], ["1i", "0"]]),
        "conformality": forms_data([["1", "0"], ["0", "1"]]),
    }
    lines, ok = [], True
    for designed, data in cases.items():
        reps = {r.name: r for r in verify_data(data, np.random.default_rng(0))}
        failed = {name for name, r in reps.items() if not r.passed}
        exact = failed == {designed}
        ok &= exact
        lines.append(f"{designed}-example fails {sorted(failed)}")
    assert report(2, ok, "; ".join(lines))


def test_criterion_3_kaehler(c1_data):
    agg = {"ABt,BAt<1e-10": True, "AAt=BBt": True, "pos.def": True, "J-invariant": True}
    worst_ab = 0.0
    for k, d in enumerate(c1_data):
        parts, worst = kaehler_checks(d, seed=100 + k)
        worst_ab = max(worst_ab, worst["ABt"], worst["BAt"])
        for key, v in parts.items():
            agg[key] &= v
    detail = ", ".join(f"{k} {'ok' if v else 'FAILS'}" for k, v in agg.items())
    assert report(3, all(agg.values()), f"{detail} (max |ABt|,|BAt| = {worst_ab:.3g})")


def test_criterion_4_circularity(c1_data):
    res = [circularity_checks(d, seed=200 + k) for k, d in enumerate(c1_data)]
    circ = max(r[1] for r in res)
    mc = max(r[2] for r in res)
    assert report(4, all(r[0] for r in res), f"circularity {circ:.2g}, per-direction mean curvature {mc:.2g}")


def test_criterion_5_furuhata(tmp_path):
    from pluriminimal.cli import main
    from pluriminimal.weierstrass import data_from_json

    out = tmp_path / "fur.json"
    assert main(["family", "--f", "z1^3", "--g", "0", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    six = solve_family(FamilyInput.parse("z1^3", "0"))
    want = {1: {(0, 2): -1.5}, 3: {(0, 3): -0.5}, 5: {(1, 2): -1.5}}
    exact = all(
        to_polynomial(six.P[i]) == {k: GaussRational.coerce(v) for k, v in w.items()} for i, w in want.items()
    )
    exact &= doc["family"]["P"][1] == "-1.5*z2^2" and doc["family"]["P"][3] == "-0.5*z2^3"
    data = data_from_json(doc)
    c1, _ = condition_checks(data, seed=5)
    parts, worst = kaehler_checks(data, seed=5)
    c4, circ, mc = circularity_checks(data, seed=5)
    ok = exact and c1 and all(parts.values()) and c4
    failing = [k for k, v in parts.items() if not v]
    assert report(
        5,
        ok,
        f"P2, P4, P6 exact: {exact}; criterion-1 checks {c1}; criterion-3 parts failing {failing}; "
        f"criterion-4 {c4}",
    )


def test_criterion_6_non_embedding():
    fur = split_pairs(solve_family(FamilyInput.parse("z1^3", "0")))[1]
    triv = split_pairs(solve_family(FamilyInput.parse("0", "0")))[1]
    hit = self_intersect(fur, starts=64, seed=0)
    none = self_intersect(triv, starts=64, seed=0)
    ok = (
        hit is not None
        and hit.separation >= 0.1
        and hit.certified_distance < 1e-8
        and np.linalg.norm(immerse(fur, hit.p) - immerse(fur, hit.q)) < 1e-8
        and none is None
    )
    detail = "no Furuhata pair" if hit is None else (
        f"Furuhata pair |p-q| = {hit.separation:.3f}, certified distance {hit.certified_distance:.2g}"
    )
    assert report(6, ok, f"{detail}; trivial family: {'none' if none is None else 'pair found'}")


def test_criterion_7_relation_finder():
    t0 = time.perf_counter()
    dims = {}
    mus = {}
    for n in (1, 2, 3, 4):
        mus[n] = build_mu(PolyBasis(2, n))
        dims[n] = len(kernel(mus[n]))
    rel = relation_from_six(solve_family(FamilyInput.parse("z1^3", "0")), 3)
    member = not rel.is_zero() and all(x == 0 for x in mus[3].apply(rel.vector()))
    elapsed = time.perf_counter() - t0
    monotone = all(dims[n] <= dims[n + 1] for n in (1, 2, 3))
    ok = dims[1] == 0 and member and monotone and elapsed < 60
    assert report(7, ok, f"kernel dims {dims}; Furuhata relation exact member: {member}; {elapsed:.1f} s")


def test_criterion_8_pipeline():
    rel = kernel(build_mu(PolyBasis(2, 3)))[0]
    diag = diagonalize(rel)
    bare = emit_map(diag.primitives(), 2)
    full = emit_map(diag.primitives(), 2, ensure_immersion=True)
    c1, worst = condition_checks(full, seed=8, conf_tol=1e-10)
    Z = sample_polydisk(np.random.default_rng(8), 100, 2)
    change = abs(
        np.max(np.abs(conformality_matrices(full, Z))) - np.max(np.abs(conformality_matrices(bare, Z)))
    )
    ok = diag.certified and c1 and change < 1e-14
    assert report(
        8,
        ok,
        f"rank {diag.rank}, appended {full.n - bare.n} forms; conformality {worst['conformality']:.2g}, "
        f"FD mean curvature {worst['mean_curvature']:.2g}; residual change {change:.2g}",
    )


def test_criterion_9_path_independence(c1_data):
    rng = np.random.default_rng(9)
    worst = 0.0
    for k in range(50):
        data = c1_data[k % len(c1_data)].without_primitives()
        q = sample_polydisk(rng, 1, 2, 2.0)[0]
        corner = sample_polydisk(rng, 1, 2, 2.0)[0]
        a = immerse(data, q, method="quadrature")
        b = immerse(data, q, method="quadrature", via=[corner])
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert report(9, worst < 1e-9, f"max straight-vs-dogleg difference {worst:.2g} over 50 pairs")


def test_criterion_10_determinism(tmp_path):
    exe = [sys.executable, "-m", "pluriminimal"]
    fur = tmp_path / "fur.json"
    subprocess.run(exe + ["family", "--f", "z1^3", "--g", "0", "--out", str(fur)], check=True)
    commands = {
        "verify": ["verify", str(fur), "--seed", "4"],
        "family": ["family", "--f", "exp(z1)", "--g", "sin(z1)"],
        "relations": ["relations", "--m", "2", "--n", "3", "--emit", "1", "--ensure-immersion"],
        "mesh": ["mesh", str(fur), "--curve", "z1,z1", "--resolution", "11"],
        "selfintersect": ["selfintersect", str(fur), "--starts", "16", "--seed", "7"],
    }
    same = {}
    for name, args in commands.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{name}{k}.out"
            extra = ["--data-out", str(tmp_path / f"{name}{k}.data")] if name == "relations" else []
            subprocess.run(exe + args + ["--out", str(out)] + extra, check=True, capture_output=True)
            blob = out.read_bytes()
            if extra:
                blob += (tmp_path / f"{name}{k}.data").read_bytes()
            outs.append(blob)
        same[name] = outs[0] == outs[1]
    assert report(10, all(same.values()), ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
