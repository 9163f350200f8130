"""
Tests for the experiment kernels
"""

import asyncio
import math

import numpy as np
import pytest
from pydantic import ValidationError

from rebits.accum import FoldPolicy, exact_round, exact_sum, sum_with_policy
from rebits.arith import RebitsArithmetic
from rebits.errors import UsageError
from rebits.models import RunConfig
from rebits.opcount import OpCounters
from rebits.softfp import BINARY16, BINARY32, BINARY64, E5M2, FloatFormat, RoundingMode

from kernels import (
    AdderVerificationKernel,
    DoubleDoubleKernel,
    Grid,
    GridKernel,
    IntegrationKernel,
    MarketParams,
    MonteCarloKernel,
    NBodyKernel,
    NormKernel,
    Scheme,
    SchemeKind,
    SumKernel,
    parse_schemes,
)
from kernels.integration_kernel import closed_form
from kernels.schemes import FINALIZE_NOTE, max_error

ALL_SCHEMES = ["naive", "rebits", "kahan", "kahan:variant=rebits", "priest", "priest:variant=rebits", "two_sum", "dd", "dd_rebits", "oracle"]


def by_scheme(records):
    return {r.scheme: r for r in records}


# ===== SCHEMES =====


def test_scheme_parse_and_labels():
    assert Scheme.parse("rebits:fold=1000").label == "rebits:fold=1000"
    assert Scheme.parse("rebits").label == "rebits:fold=none"
    assert Scheme.parse("rebits", FoldPolicy.every_k(10)).label == "rebits:fold=10"
    assert Scheme.parse("kahan:variant=rebits").label == "kahan:variant=rebits"
    assert Scheme.parse("kahan:variant=rebits").uses_fperr
    assert not Scheme.parse("priest").uses_fperr
    assert Scheme.parse("dd_rebits").kind is SchemeKind.DD_REBITS
    assert [s.label for s in parse_schemes(["naive", " ", "oracle"])] == ["naive", "oracle"]


@pytest.mark.parametrize("text", ["fast", "naive:fold=10", "kahan:fold=3", "rebits:variant=rebits"])
def test_scheme_parse_rejects(text):
    with pytest.raises(ValueError):
        Scheme.parse(text)


# ===== SUMMATION =====


def test_skewed_vector():
    kernel = SumKernel()
    v = kernel.gen_skewed_positive(8, 1, BINARY32)
    assert len(v) == 8
    assert all(2.0**20 <= x < 2.0**21 for x in v[:6])
    assert all(2.0**-6 <= x < 2.0**-5 for x in v[6:])
    assert all(isinstance(x, np.float32) for x in v)
    assert v == kernel.gen_skewed_positive(8, 1, BINARY32)

    v64 = kernel.gen_skewed_positive(4, 1, BINARY64)
    assert all(isinstance(x, float) for x in v64)
    assert 2.0**49 <= v64[0] < 2.0**50

    with pytest.raises(ValueError):
        kernel.gen_skewed_positive(3, 1)
    with pytest.raises(ValueError):
        kernel.gen_skewed_positive(8, 1, E5M2)


def test_sum_experiment_accuracy_and_counts():
    n = 100_000
    schemes = parse_schemes(["naive", "rebits:fold=1", "rebits:fold=100", "rebits:fold=1000", "rebits", "oracle"])
    records = by_scheme(asyncio.run(SumKernel().sum_experiment(n, 1, BINARY32, schemes, engine="host")))

    oracle = records["oracle"].value
    v = SumKernel().gen_skewed_positive(n, 1, BINARY32)
    assert oracle == float(exact_round(exact_sum(v), BINARY32))
    assert records["rebits:fold=1000"].value == oracle

    errors = [records[s].abs_err for s in ("rebits:fold=1", "rebits:fold=100", "rebits:fold=1000", "rebits:fold=none", "naive")]
    assert errors == sorted(errors)
    assert records["naive"].abs_err > 0

    assert records["naive"].counters == OpCounters(fpadd=n)
    assert records["rebits:fold=none"].counters == OpCounters(fpadd=2 * n + 1, move_fperr=n)
    assert records["rebits:fold=1000"].counters == OpCounters(fpadd=2 * n + 1 + 100, move_fperr=n + 100)
    assert records["rebits:fold=1000"].policy == "fold=1000"
    assert records["naive"].n == n and records["naive"].seed == 1


def test_every_scheme_agrees_on_exact_inputs():
    """Small integers: every scheme is exact"""
    terms = [np.float32(i) for i in range(1, 101)]
    for scheme in parse_schemes(ALL_SCHEMES):
        acc = scheme.accumulator(BINARY32, engine="host").extend(terms)
        assert acc.result() == np.float32(5050.0), scheme.label


def test_parallel_sum_single_partition_is_sequential():
    kernel = SumKernel()
    v = kernel.gen_skewed_positive(2000, 3, BINARY32)
    policy = FoldPolicy.every_k(100)
    value, counts = asyncio.run(kernel.parallel_sum(v, 1, policy, BINARY32, engine="host"))
    expected, stats = sum_with_policy(v, policy, RebitsArithmetic(BINARY32, engine="host"))
    assert value == expected
    assert counts == stats.counters


def test_parallel_sum_is_deterministic():
    kernel = SumKernel()
    v = kernel.gen_skewed_positive(4000, 5, BINARY32)
    first = asyncio.run(kernel.parallel_sum(v, 4, FoldPolicy.none(), BINARY32, engine="host"))
    second = asyncio.run(kernel.parallel_sum(v, 4, FoldPolicy.none(), BINARY32, engine="host"))
    assert first == second
    oracle = exact_round(exact_sum(v), BINARY32)
    assert abs(float(first[0]) - float(oracle)) <= 2 * float(np.spacing(oracle))

    zeros, _ = asyncio.run(kernel.parallel_sum([np.float32(0.0)] * 16, 4, FoldPolicy.none(), BINARY32))
    assert zeros == 0.0


def test_parallel_sum_ignores_worker_count():
    kernel = SumKernel()
    v = kernel.gen_skewed_positive(4000, 6, BINARY32)
    results = [
        asyncio.run(kernel.parallel_sum(v, 7, FoldPolicy.every_k(50), BINARY32, engine="host", workers=workers))
        for workers in (1, 2, 4, 8)
    ]
    assert all(result == results[0] for result in results)


def test_parallel_experiment():
    kernel = SumKernel()
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(kernel.parallel_experiment(4000, 1, BINARY32, 4, schemes, "host")))
    assert set(records) == {"naive", "rebits:fold=none", "oracle"}
    assert all(r.partitions == 4 for r in records.values())
    assert records["rebits:fold=none"].abs_err <= records["naive"].abs_err

    with pytest.raises(UsageError):
        asyncio.run(kernel.parallel_experiment(100, 1, BINARY32, 2, parse_schemes(["kahan"]), "host"))



def test_rebits_records_note_the_terminal_fold():
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(SumKernel().sum_experiment(400, 1, BINARY32, schemes, "host")))
    assert records["rebits:fold=none"].note == FINALIZE_NOTE
    assert records["naive"].note == "" and records["oracle"].note == ""


def test_execute_dispatches_on_kernel_id():
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    cfg = RunConfig(kernel="parallel-sum", n=400, partitions=3, workers=1, engine="host")
    records = asyncio.run(SumKernel().execute(cfg, BINARY32, schemes))
    assert len(records) == 3 and all(r.partitions == 3 and r.n == 400 for r in records)

    cfg = RunConfig(kernel="sum", n=400, engine="host")
    records = asyncio.run(SumKernel().execute(cfg, BINARY32, schemes))
    assert all(r.kernel == "sum" for r in records)

    cfg = RunConfig(kernel="nbody", n=20, engine="host")
    records = asyncio.run(NBodyKernel().execute(cfg, BINARY32, schemes))
    assert [r.n for r in records] == [20, 20, 20]

# ===== GRID =====


def test_constant_grid_is_order_independent():
    kernel = GridKernel()
    grid = kernel.constant_grid(4, 5)
    schemes = parse_schemes(["naive", "rebits", "kahan", "oracle"])
    records = asyncio.run(kernel.grid_sum_orders(grid, schemes, BINARY64, engine="host"))
    assert len(records) == 16
    assert all(r.value == 20.0 for r in records)


def test_grid_orders():
    kernel = GridKernel()
    grid = kernel.gen_grid(seed=1)
    assert grid.condition_number() >= 1e14
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = asyncio.run(kernel.grid_sum_orders(grid, schemes, BINARY64, seed=1, engine="host"))
    assert len(records) == 12
    assert {r.order for r in records} == {"row", "reverse-row", "col", "reverse-col"}

    oracle = [r.value for r in records if r.scheme == "oracle"]
    rebits = [r.value for r in records if r.scheme == "rebits:fold=none"]
    assert len(set(oracle)) == 1
    assert rebits == oracle
    assert kernel.spread(records, "rebits:fold=none") == 0.0
    assert kernel.spread(records, "naive") > 0.0


def test_grid_traverse():
    grid = Grid(np.arange(6, dtype=np.float64).reshape(2, 3))
    assert grid.traverse("row").tolist() == [0, 1, 2, 3, 4, 5]
    assert grid.traverse("col").tolist() == [0, 3, 1, 4, 2, 5]
    assert grid.traverse("reverse-col").tolist() == [5, 2, 4, 1, 3, 0]
    with pytest.raises(ValueError):
        grid.traverse("diagonal")


# ===== 2-NORM =====


def test_norm_simple_vectors():
    kernel = NormKernel()
    for scheme in parse_schemes(["naive", "rebits", "kahan", "oracle"]):
        assert kernel.two_norm([3.0, 4.0], scheme, BINARY64) == 5.0
        assert kernel.two_norm([0.0, 0.0, 1.0], scheme, BINARY64) == 1.0


def test_norm_recovers_stalled_squares():
    """4096^2 = 2^24, after which binary32 drops every 1.0"""
    v = [np.float32(4096.0)] + [np.float32(1.0)] * 1000
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(NormKernel().norm_experiment(v, schemes, BINARY32, engine="host")))
    assert records["naive"].value == 4096.0
    assert records["naive"].rel_err > 0
    assert records["rebits:fold=none"].rel_err == 0.0
    assert records["oracle"].value == float(np.sqrt(np.float32(16778216.0)))
    assert records["naive"].fpmult == len(v)


def test_norm_on_skewed_vector():
    v = SumKernel().gen_skewed_positive(10_000, 1, BINARY32)
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(NormKernel().norm_experiment(v, schemes, BINARY32, engine="host")))
    assert records["rebits:fold=none"].rel_err <= 1e-2
    assert records["rebits:fold=none"].abs_err <= records["naive"].abs_err


# ===== INTEGRATION =====


def test_single_panel_is_the_same_for_every_scheme():
    kernel = IntegrationKernel()
    terms = kernel.panel_terms(1.0, 1, BINARY32)
    records = asyncio.run(kernel.trapezoid_integrate(1.0, 1, parse_schemes(ALL_SCHEMES), BINARY32, engine="host"))
    assert all(r.value == float(terms[0]) for r in records)


def test_trapezoid_matches_closed_form():
    records = by_scheme(asyncio.run(IntegrationKernel().trapezoid_integrate(10.0, 100_000, parse_schemes(["rebits", "oracle"]), BINARY64, "host")))
    expected = closed_form(10.0)
    for record in records.values():
        assert abs(record.value - expected) / abs(expected) <= 1e-6
    assert records["oracle"].fpadd == 2 * 100_001 + 100_000


def test_trapezoid_profile_error_growth():
    kernel = IntegrationKernel()
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = kernel.trapezoid_profile(100.0, 100_000, 50, schemes, BINARY32, "host")
    assert len(records) == 150
    assert max(r.n for r in records) == 100_000
    assert kernel.max_abs_err(records, "oracle") == 0.0
    assert kernel.max_abs_err(records, "rebits:fold=none") * 10 <= kernel.max_abs_err(records, "naive")


def test_panel_terms_rejects_bad_input():
    with pytest.raises(ValueError):
        IntegrationKernel().panel_terms(1.0, 0, BINARY64)


# ===== N-BODY =====


def test_two_charges():
    kernel = NBodyKernel()
    positions = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]
    for scheme in parse_schemes(ALL_SCHEMES):
        assert kernel.potential(positions, [1.0, 1.0], scheme, BINARY32, engine="host") == 2.0


def test_oracle_is_permutation_invariant():
    kernel = NBodyKernel()
    positions, charges = kernel.gen_particles(50, 3)
    perm = np.random.default_rng(0).permutation(50)
    oracle = Scheme(SchemeKind.ORACLE)
    assert kernel.potential(positions, charges, oracle) == kernel.potential(positions[perm], charges[perm], oracle)


def test_nbody_potential_matches_the_experiment():
    kernel = NBodyKernel()
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(kernel.nbody_experiment(60, 4, schemes, BINARY32, "host")))
    for scheme in schemes:
        value = kernel.nbody_potential(60, 4, scheme, BINARY32, engine="host")
        assert float(value) == records[scheme.label].value, scheme.label


def test_coincident_particles():
    with pytest.raises(ValueError):
        NBodyKernel().pair_terms(np.zeros((2, 3)), np.ones(2), BINARY32)
    with pytest.raises(ValueError):
        NBodyKernel().gen_particles(1, 1)


def test_nbody_sweep():
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = asyncio.run(NBodyKernel().nbody_sweep([100, 200, 300], 1, schemes, BINARY32, "host"))
    assert len(records) == 9
    assert max_error(records, "rebits:fold=none") * 5 <= max_error(records, "naive")
    first = [r for r in records if r.n == 100 and r.scheme == "naive"][0]
    assert first.counters == OpCounters(fpadd=6 * 4950, fpmult=4 * 4950, fpdiv=4950)


# ===== MONTE CARLO =====


def test_zero_shocks_give_identical_payoffs():
    kernel = MonteCarloKernel()
    terms = kernel.payoff_terms(8, 1, MarketParams(), BINARY32, normals=lambda rng, size: np.zeros(size))
    assert len(set(terms)) == 1
    assert math.isclose(float(terms[0]), 100.0 * math.exp(0.06875) - 100.0, rel_tol=1e-5)


def test_single_path_is_the_same_for_every_scheme():
    kernel = MonteCarloKernel()
    prices = {kernel.mc_euro_price(1, 2, scheme=s, engine="host") for s in parse_schemes(ALL_SCHEMES)}
    assert len(prices) == 1


def test_mc_experiment():
    schemes = parse_schemes(["naive", "rebits", "oracle"])
    records = by_scheme(asyncio.run(MonteCarloKernel().mc_experiment(20_000, 1, schemes, BINARY32, engine="host")))
    rebits, naive = records["rebits:fold=none"], records["naive"]
    assert rebits.rel_err <= 1e-6
    assert rebits.abs_err * 5 <= naive.abs_err
    assert 5.0 < records["oracle"].value < 25.0
    assert naive.counters == OpCounters(fpadd=3 * 20_000, fpmult=2 * 20_000 + 1, fpdiv=1, fpcomp=20_000)


def test_market_params_validation():
    with pytest.raises(ValidationError):
        MarketParams(sigma=0.0)
    with pytest.raises(ValueError):
        MonteCarloKernel().payoff_terms(0, 1, MarketParams(), BINARY32)


# ===== DOUBLE-DOUBLE =====


def test_dd_workload_counts():
    records = by_scheme(DoubleDoubleKernel().dd_workload(300, 1, "softfp"))
    assert records["dd_add:native"].counters == OpCounters(fpadd=6000)
    assert records["dd_add:rebits"].counters == OpCounters(fpadd=1800, move_fperr=1200)
    assert all(r.note == "PASS" for r in records.values())


def test_dd_equivalence():
    records = DoubleDoubleKernel().dd_equivalence(300, 1, "softfp")
    assert [r.scheme for r in records] == ["dd_add", "dd_mul", "dd_div"]
    assert all(r.value == 0 and r.note == "PASS" for r in records)


def test_dd_operands_are_normalized():
    operands = DoubleDoubleKernel().gen_operands(100, 1)
    assert all(x.is_normalized() and x.hi != 0 for x in operands)


# ===== ADDER VERIFICATION =====


def test_exhaustive_verification_tiny_format():
    records = AdderVerificationKernel().verify_adder(FloatFormat(3, 2))
    assert len(records) == 4
    assert all(r.n == 64 * 64 and r.value == 0 and r.note == "PASS" for r in records)


def test_exhaustive_verification_e5m2():
    records = AdderVerificationKernel().verify_adder(E5M2)
    assert {r.scheme for r in records} == {"softfp:rne", "softfp:rtz", "softfp:rup", "softfp:rdn"}
    assert all(r.n == 65536 and r.note == "PASS" for r in records)


@pytest.mark.parametrize("fmt", [BINARY16, BINARY32, BINARY64])
def test_random_verification(fmt):
    records = AdderVerificationKernel().verify_adder(fmt, pairs=2000, seed=1)
    assert len(records) == 1
    assert records[0].note == "PASS"
    assert records[0].n > 2000


def test_verification_scope():
    kernel = AdderVerificationKernel()
    with pytest.raises(UsageError):
        kernel.verify_adder(BINARY32, RoundingMode.TOWARD_ZERO, pairs=10)
    with pytest.raises(UsageError):
        kernel.verify_exhaustive(BINARY16)
