import json
from importlib import resources

import pytest

from curvkit import cli
from curvkit.errors import InfeasibleBasePoint, SchemaError
from curvkit.io import dumps, load, parse_document
from curvkit.selftest import fixture_path

FIXTURES = sorted(p.name[:-5] for p in resources.files("curvkit").joinpath("fixtures").iterdir() if p.name.endswith(".json"))


def fixture_doc(name):
    return json.loads(open(fixture_path(name), encoding="utf-8").read())


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name):
    text = dumps(load(fixture_path(name)))
    again = dumps(parse_document(json.loads(text)))
    assert again == text


def test_unknown_set_type_points_at_node():
    doc = fixture_doc("halfline")
    doc["set"]["type"] = "donut"
    with pytest.raises(SchemaError) as err:
        parse_document(doc)
    assert err.value.pointer == "/set/type"


def test_missing_key_points_at_parent():
    doc = fixture_doc("halfline")
    del doc["point"]
    with pytest.raises(SchemaError) as err:
        parse_document(doc)
    assert err.value.pointer.startswith("/point")


def test_infeasible_point_is_rejected():
    doc = fixture_doc("halfline")
    doc["point"] = [1]
    with pytest.raises(InfeasibleBasePoint):
        parse_document(doc)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_d2(capsys):
    code, out, _ = run(capsys, "d2", fixture_path("soc_boundary"))
    assert code == 0
    assert "d2 = 1.0 [Exact]" in out


def test_cli_certify_writes_report(capsys, tmp_path):
    report = tmp_path / "cert.json"
    code, out, _ = run(capsys, "certify", fixture_path("socp_disk"), "--mode", "sphere:64,7", "--json", report)
    assert code == 0
    assert "CertifiedOnDirections" in out
    doc = json.loads(report.read_text())
    assert doc["exit_code"] == 0 and len(doc["config_hash"]) == 64
    assert doc["result"]["verdict"] == "CertifiedOnDirections"


def test_cli_negative_verdicts_exit_one(capsys):
    assert run(capsys, "certify", fixture_path("flat_composite"))[0] == 1
    assert run(capsys, "growth", fixture_path("flat_composite"), "--eps", "0.01")[0] == 1


def test_cli_growth_uses_certified_constant(capsys):
    code, out, _ = run(capsys, "growth", fixture_path("disjunctive_toy"), "--samples", "5000")
    assert code == 0 and "Holds" in out


def test_cli_errors_exit_two(capsys, tmp_path):
    code, _, err = run(capsys, "d2", fixture_path("socp_disk"))
    assert code == 2 and "function file" in err
    assert run(capsys, "certify", tmp_path / "missing.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "certify", bad)[0] == 2


def test_cli_sphere_probe(capsys):
    code, out, _ = run(capsys, "probe-projection", "--sphere-center", "--k-max", "6")
    assert code == 0 and out.count(",") >= 5


def test_cli_oracle(capsys):
    code, out, _ = run(capsys, "oracle", fixture_path("soc_boundary"), "--levels", "12")
    assert code == 0 and "ConvergesTo" in out


def test_config_hash_depends_on_arguments():
    args = cli.build_parser().parse_args(["d2", str(fixture_path("soc_boundary"))])
    assert cli.config_hash(args, ["a"]) != cli.config_hash(args, ["b"])
