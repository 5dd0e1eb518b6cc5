"""Fast invariant checks behind ``tpslab selftest``.

Each check returns ``(name, passed, detail)``; nothing here raises on a
failed check.
"""

from __future__ import annotations

import math

import numpy as np

from .entangle import basis_state, entropy_profile, pure_state, separability_persistence_test
from .lab import PRESETS, ExperimentConfig, random_local_symmetry, run_counterexample_family, run_dimension_scan
from .numkernel import make_rng
from .spectrum import cluster_spectrum, commutant_dimension, commutant_oracle_dimension, planted_hamiltonian
from .entangle import probe_family
from .tps import certify_nonequivalence, local_unitary_group_dimension, standard_tps, transform_tps

LN2 = math.log(2)


def _random_multiplicities(dim, rng):
    mult, left = [], dim
    while left:
        m = int(rng.integers(1, left + 1))
        mult.append(m)
        left -= m
    return mult


def check_commutant_oracle(n=10, seed=2024):
    rng = make_rng(seed)
    bad = 0
    for _ in range(n):
        dim = int(rng.integers(4, 9))
        ham = cluster_spectrum(planted_hamiltonian(_random_multiplicities(dim, rng), rng))
        bad += commutant_dimension(ham).dimension != commutant_oracle_dimension(ham)
    return "commutant_oracle", bad == 0, f"{n - bad}/{n} agree"


def check_gap_scan(max_dim=64):
    rows = run_dimension_scan(max_dim)
    ok = all(r["gap"] > 0 for r in rows)
    return "dimension_gap", ok, f"{len(rows)} factorizations up to {max_dim}"


def check_local_dimension():
    cases = [(2, 2), (2, 3), (2, 2, 2)]
    got = [local_unitary_group_dimension(standard_tps(c)) for c in cases]
    want = [sum(d * d for d in c) - len(c) + 1 for c in cases]
    return "local_unitary_dimension", got == want, f"numeric {got} vs formula {want}"


def check_entropy_ground_truth():
    tps = standard_tps((2, 2))
    rep = separability_persistence_test(basis_state(0, 4), PRESETS["ising2"], tps, [math.pi / 4])
    bell = entropy_profile(pure_state([1, 0, 0, 1]), tps)
    err = max(abs(rep.max_entropy - LN2), *(abs(s - LN2) for s in bell.per_factor),
              abs(bell.mutual_information[0, 1] - 2 * LN2))
    return "entropy_ground_truth", err <= 1e-9 and rep.entangling, f"max error {err:.2e}"


def check_invariance(trials=50, seed=7):
    rng = make_rng(seed)
    tps = standard_tps((2, 2, 2))
    probes = probe_family(tps.dim, rng)
    hits = sum(
        certify_nonequivalence(tps, transform_tps(tps, random_local_symmetry(tps.factor_dims, rng)), probes).certified
        for _ in range(trials)
    )
    return "local_invariance", hits == 0, f"{hits} false certificates in {trials}"


def check_counterexample_family(seed=1):
    rec = run_counterexample_family(ExperimentConfig("selftest", seed))
    v = rec.verdicts
    return "counterexample_family", bool(v["success"]), f"{v['evolution_certified']}/{v['evolution_total']} certified"


def run_selftest():
    checks = [
        check_commutant_oracle,
        check_gap_scan,
        check_local_dimension,
        check_entropy_ground_truth,
        check_invariance,
        check_counterexample_family,
    ]
    out = []
    for c in checks:
        try:
            out.append(c())
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            out.append((c.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
