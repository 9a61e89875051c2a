import json
from fractions import Fraction

import pytest

import maxbv
from analysis import make_divergence_N
from functions import StepFunction, canonicalize, plf_from_dict
from maxbv import (
    SWEEP_SCHEMA,
    InputError,
    RunConfig,
    dump_step_function,
    emit_csv,
    load_inputs,
    main,
    resolve_seed,
    run,
)

CHI = StepFunction.indicator(-1, 0)


@pytest.fixture
def chi_file(tmp_path):
    path = tmp_path / "chi.json"
    dump_step_function(CHI, path)
    return str(path)


def write_json(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_load_valid_function(chi_file):
    inputs = load_inputs(chi_file)
    assert inputs.f == CHI
    assert len(inputs.f.breakpoints) == 2
    assert inputs.N is None


def test_dump_then_load_is_canonical(tmp_path):
    f = StepFunction((0, 1, 2, 3), (2, 2, Fraction(-1, 3)))
    path = tmp_path / "f.json"
    dump_step_function(f, path)
    assert load_inputs(str(path)).f == canonicalize(f)


def test_load_reports_field(tmp_path):
    path = write_json(tmp_path, "bad.json", {"breakpoints": ["0", "1", "2"], "values": ["1"]})
    with pytest.raises(InputError, match="values"):
        load_inputs(path)


def test_load_rejects_negative_radius(tmp_path, chi_file):
    path = write_json(tmp_path, "n.json", {"breakpoints": ["0", "1"], "values": ["1", "-1"]})
    with pytest.raises(InputError, match="truncation radius must be nonnegative"):
        load_inputs(chi_file, path)


def test_load_echoes_lipschitz_constant(tmp_path):
    path = write_json(tmp_path, "n.json", {"breakpoints": ["0", "4/5"], "values": ["1", "2/5"]})
    assert load_inputs(None, path).lipschitz == Fraction(3, 4)


def test_load_reports_json_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "breakpoints": ["0", "1"],\n  "values": [1,\n}\n', encoding="utf-8")
    with pytest.raises(InputError, match="line"):
        load_inputs(str(path))


def test_eval_prints_value_and_witness(chi_file, capsys):
    code = main(["eval", "--operator", "cone", "--alpha", "1", "--x", "1", "--input", chi_file])
    out = capsys.readouterr().out
    assert code == 0
    assert "= 1/2" in out
    assert "(-1, 1)" in out


def test_eval_csv(chi_file, tmp_path):
    out = tmp_path / "eval.csv"
    code = main(["eval", "--alpha", "0", "--x", "1", "--input", chi_file, "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,value,witness,a,b,x_decimal,value_decimal,a_decimal,b_decimal"
    assert lines[1] == "1,1/4,interval,-1,3,1,0.25,-1,3"


def test_missing_input_is_exit_2(tmp_path, capsys):
    assert main(["eval", "--x", "1", "--input", str(tmp_path / "nope.json")]) == 2
    assert "file not found" in capsys.readouterr().err


def test_missing_radius_is_exit_2(chi_file):
    assert main(["eval", "--operator", "truncated", "--x", "0", "--input", chi_file]) == 2


def test_bad_flag_value_exits_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["eval", "--alpha", "1/0"])
    assert excinfo.value.code == 2


def test_resolve_seed():
    assert resolve_seed(5, {"MAXBV_SEED": "9"}) == 5
    assert resolve_seed(None, {"MAXBV_SEED": "9"}) == 9
    assert resolve_seed(None, {}) == 0
    with pytest.raises(InputError):
        resolve_seed(None, {"MAXBV_SEED": "abc"})


def test_emit_csv_empty_rows(tmp_path):
    path = tmp_path / "sweep.csv"
    emit_csv([], SWEEP_SCHEMA, path)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("alpha,variation_f,variation_Mf_lower,variation_Mf_struct,ratio,")
    assert text.count("\n") == 1


def test_certificate_csv_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        code = main(["counterexample", "lipschitz", "--beta", "3/4", "--bumps", "10",
                     "--format", "csv", "--out", str(path)])
        assert code == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("K,x_prime,value,x_k,zero_value,S,")
    assert lines[2].startswith("1,24/5,5/29,26/5,0,")
    assert len(lines) == 12


def test_cone_spike_counterexample(capsys):
    assert main(["counterexample", "cone-spike", "--alpha", "1/5", "--n", "100", "--format", "csv"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[1].startswith("100,1/5,9/5,2,9/5,9/5,true")


def test_variation_command(chi_file, capsys):
    assert main(["variation", "--input", chi_file, "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("2,1,")


def test_weaktype_command(capsys):
    assert main(["weaktype", "--alpha", "1", "--lambda", "1/2", "--format", "csv"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[0] == "1" and row[1] == "1/2"
    assert abs(Fraction(row[2]) - 3) <= Fraction(1, 10 ** 6)


def test_verify_theorem4_passes(capsys):
    assert main(["verify", "--suite", "theorem4", "--bumps", "60", "--quiet"]) == 0
    assert "✓ theorem4" in capsys.readouterr().out


def test_verify_square_and_bpl_pass():
    assert run(RunConfig("verify", suite="square", samples=5, quiet=True)) == 0
    assert run(RunConfig("verify", suite="bpl", samples=5, quiet=True)) == 0
    assert run(RunConfig("verify", suite="sandwich", samples=3, quiet=True)) == 0


def test_radius_out_writes_truncation_function(tmp_path):
    radius = tmp_path / "N.json"
    assert main(["counterexample", "lipschitz", "--beta", "3/4", "--bumps", "10", "--format", "csv",
                 "--out", str(tmp_path / "cert.csv"), "--radius-out", str(radius)]) == 0
    data = json.loads(radius.read_text(encoding="utf-8"))
    assert plf_from_dict(data) == make_divergence_N(Fraction(3, 4), 10)


@pytest.mark.parametrize("suite", ["extremizer", "monotonicity", "attachment", "oracle"])
def test_verify_added_suites_pass(suite, capsys):
    assert run(RunConfig("verify", suite=suite, samples=2, quiet=True)) == 0
    assert f"✓ {suite}" in capsys.readouterr().out


def test_verify_sharpness_passes():
    assert run(RunConfig("verify", suite="sharpness", samples=2, quiet=True)) == 0


def test_broken_invariant_exits_1(monkeypatch, capsys):
    monkeypatch.setattr(maxbv, "verify_square_lemma", lambda f, R, x: False)
    assert run(RunConfig("verify", suite="square", samples=3, quiet=True)) == 1
    assert "❌" in capsys.readouterr().out


def test_seeded_runs_are_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("MAXBV_SEED", "7")
    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["sweep", "--alphas", "1/2", "--samples", "2", "--quiet", "--tol", "1/1048576",
                     "--format", "csv", "--out", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


@pytest.mark.slow
def test_verify_all_small_corpus():
    assert main(["verify", "--suite", "all", "--seed", "42", "--samples", "3", "--n", "100", "--quiet"]) == 0
