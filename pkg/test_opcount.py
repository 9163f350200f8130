"""
Tests for operation accounting
"""

import pytest

from rebits.opcount import CountScope, OpCounters, OpKind, record, report


def test_record_and_report():
    scope = CountScope("root")
    scope.record(OpKind.FPADD)
    scope.record(OpKind.FPADD, 4)
    scope.record(OpKind.MOVE_FPERR, 2)
    assert scope.report() == OpCounters(fpadd=5, move_fperr=2)


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        CountScope().record(OpKind.FPMULT, -1)


def test_child_scopes_sum_into_parents():
    root = CountScope("root")
    child = root.child("child")
    grandchild = child.child("grandchild")
    grandchild.record(OpKind.FPDIV, 3)
    child.record(OpKind.FPCOMP)
    assert grandchild.report() == OpCounters(fpdiv=3)
    assert child.report() == OpCounters(fpdiv=3, fpcomp=1)
    assert root.report() == OpCounters(fpdiv=3, fpcomp=1)


def test_merge_worker_snapshots():
    root = CountScope("root")
    workers = [CountScope(f"worker-{i}") for i in range(3)]
    for i, worker in enumerate(workers):
        worker.record(OpKind.FPADD, i + 1)
    for worker in workers:
        root.merge(worker.report())
    assert root.report() == OpCounters(fpadd=6)


def test_counters_add_and_describe():
    total = OpCounters(fpadd=6) + OpCounters(fpadd=1, move_fperr=4)
    assert total == OpCounters(fpadd=7, move_fperr=4)
    assert total.describe() == "7 fpadd, 4 move_fperr"
    assert OpCounters().describe() == "0"
    assert total.as_dict() == {"fpadd": 7, "fpmult": 0, "fpdiv": 0, "fpcomp": 0, "move_fperr": 4}


def test_uninstrumented_scope():
    record(None, OpKind.FPADD, 10)
    assert report(None) == OpCounters()
