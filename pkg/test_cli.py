"""
Tests for the REBits command line
"""

import pytest

from main import CONFIG_PREFIX, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, load_output, main


def run_to_file(tmp_path, name, *argv):
    path = tmp_path / name
    status = main([*argv, "--output", str(path)])
    return status, path.read_text(encoding="utf-8") if path.exists() else ""


SUM_ARGS = ("run", "--kernel", "sum", "--n", "2000", "--format", "f32", "--scheme", "naive,rebits:fold=1000,oracle", "--engine", "host")


def test_sum_run_csv(tmp_path):
    status, text = run_to_file(tmp_path, "sum.csv", *SUM_ARGS)
    assert status == EXIT_OK
    assert text.startswith(CONFIG_PREFIX)

    cfg, records = load_output(text)
    assert cfg.kernel == "sum" and cfg.n == 2000 and cfg.format == "f32"
    assert [r.scheme for r in records] == ["naive", "oracle", "rebits:fold=1000"]
    by_scheme = {r.scheme: r for r in records}
    assert by_scheme["oracle"].abs_err == 0.0
    assert by_scheme["rebits:fold=1000"].abs_err <= by_scheme["naive"].abs_err
    assert by_scheme["rebits:fold=1000"].policy == "fold=1000"
    assert by_scheme["naive"].fpadd == 2000


def test_csv_and_json_carry_the_same_records(tmp_path):
    _, csv_text = run_to_file(tmp_path, "sum.csv", *SUM_ARGS)
    _, json_text = run_to_file(tmp_path, "sum.json", *SUM_ARGS, "--out", "json")
    assert json_text.lstrip().startswith("{")
    _, from_csv = load_output(csv_text)
    cfg, from_json = load_output(json_text)
    assert cfg.out == "json"
    assert from_csv == from_json


def test_output_is_deterministic(capsys):
    assert main(list(SUM_ARGS)) == EXIT_OK
    first = capsys.readouterr().out
    assert main(list(SUM_ARGS)) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    assert first.startswith(CONFIG_PREFIX)


def test_parallel_sum_is_deterministic(capsys):
    argv = ["run", "--kernel", "parallel-sum", "--n", "4000", "--partitions", "4", "--scheme", "rebits,oracle", "--engine", "host"]
    assert main(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out == first


def test_parallel_sum_output_ignores_worker_count(capsys):
    argv = ["run", "--kernel", "parallel-sum", "--n", "4000", "--partitions", "8", "--scheme", "naive,rebits:fold=100,oracle", "--engine", "host"]
    outputs = []
    for workers in ("1", "4"):
        assert main([*argv, "--workers", workers]) == EXIT_OK
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


def test_table8(tmp_path):
    status, text = run_to_file(tmp_path, "table8.csv", "table8")
    assert status == EXIT_OK
    _, records = load_output(text)
    notes = {r.scheme: r.note for r in records}
    assert len(records) == 14
    assert notes["priest:native"].startswith("DOCUMENTED-DEVIATION")
    assert all(note == "MATCH" for scheme, note in notes.items() if scheme != "priest:native")

    counts = {r.scheme: r.counters for r in records}
    assert counts["knuth:native"].fpadd == 6
    assert counts["dd_div:rebits"].move_fperr == 13


def test_verify_adder_small_format(tmp_path):
    status, text = run_to_file(tmp_path, "verify.csv", "run", "--kernel", "verify-adder", "--format", "e5m2", "--mode", "rne")
    assert status == EXIT_OK
    _, records = load_output(text)
    assert len(records) == 1
    assert records[0].n == 65536 and records[0].note == "PASS"


def test_dd_equivalence_run(tmp_path):
    status, text = run_to_file(tmp_path, "dd.json", "run", "--kernel", "dd-equivalence", "--n", "200", "--engine", "host", "--out", "json")
    assert status == EXIT_OK
    _, records = load_output(text)
    assert [r.scheme for r in records] == ["dd_add", "dd_div", "dd_mul"]
    assert all(r.note == "PASS" for r in records)


def test_unknown_kernel_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--kernel", "bogus"])
    assert excinfo.value.code == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scheme", "fancy"],
        ["run", "--n", "0"],
        ["run", "--kernel", "parallel-sum", "--workers", "0", "--n", "100"],
        ["run", "--policy", "sometimes"],
        ["run", "--kernel", "sum", "--format", "e5m2", "--n", "100"],
        ["run", "--kernel", "verify-adder", "--format", "f32", "--mode", "rtz", "--n", "10"],
        ["run", "--kernel", "parallel-sum", "--scheme", "kahan", "--n", "100"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_every_record_failing_exits_with_failure(tmp_path):
    """binary16 panel sums overflow: the rebits sum is poisoned and the oracle rejects infinities"""
    status, text = run_to_file(
        tmp_path,
        "overflow.csv",
        "run",
        "--kernel",
        "trapezoid",
        "--format",
        "f16",
        "--x-max",
        "100",
        "--steps",
        "1000",
        "--scheme",
        "rebits,oracle",
        "--engine",
        "host",
    )
    assert status == EXIT_FAILURE
    _, records = load_output(text)
    assert len(records) == 2
    assert all(r.error for r in records)
