import io
import json
from fractions import Fraction

import pytest
from conftest import CONFIGS

from ifsgraph.cli import EXIT_ERROR, main
from ifsgraph.config import dump_config, load_config, parse_config, parse_expr
from ifsgraph.errors import ParseError, ValidationError
from ifsgraph.field import ALGEBRAIC

F = Fraction
EXIFS = (CONFIGS / "exifs.toml").read_text()


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


# -- expressions and configs ---------------------------------------------------------

@pytest.mark.parametrize("text,value", [("1/2", F(1, 2)), ("-3/4 + 1", F(1, 4)), ("2^-2", F(1, 4)),
                                        ("0.125", F(1, 8)), ("(1 - 1/3)*3", F(2)), ("-(2)^2", F(-4))])
def test_expression_values(text, value):
    assert parse_expr(text).evaluate({}) == value


def test_expression_error_location():
    with pytest.raises(ParseError) as info:
        parse_expr("1 + * 2", line=7, column=10)
    assert info.value.line == 7 and info.value.column == 15


def test_exifs_config_round_trips():
    cfg = parse_config(EXIFS)
    assert [p.name for p in cfg.params] == ["rho", "r"]
    assert cfg.probabilities == [F(1, 3)] * 3
    ifs = cfg.build_ifs()
    assert ifs.maps[1].offset == F(7, 20)
    again = parse_config(dump_config(cfg))
    assert dump_config(again) == dump_config(cfg)
    assert again.build_ifs().maps == ifs.maps and again.build_ifs().probabilities == ifs.probabilities


def test_probability_sum_rejected():
    text = EXIFS.replace('probabilities = ["1/3", "1/3", "1/3"]', 'probabilities = ["3/10", "3/10", "3/10"]')
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    assert any("9/10" in e for e in info.value.errors)


def test_golden_declaration():
    cfg = load_config(str(CONFIGS / "golden.toml"))
    assert cfg.params[0].kind == ALGEBRAIC
    rho = cfg.build_ifs().maps[0].ratio
    assert (rho * rho + rho - 1).is_zero()


def test_ratio_bounds_rejected():
    text = EXIFS.replace('value = "3/10"', 'value = "3/2"')
    with pytest.raises(ValidationError):
        parse_config(text)


def test_toml_error_has_location():
    with pytest.raises(ParseError) as info:
        parse_config("format_version = 1\nprobabilities = [\n")
    assert info.value.line is not None


# -- CLI ------------------------------------------------------------------------------

def test_check_exit_codes():
    assert run("check", str(CONFIGS / "exifs.toml"))[0] == 0
    assert run("check", str(CONFIGS / "cantor.toml"))[0] == 0
    code, out = run("check", str(CONFIGS / "cantor_convolution.toml"))
    assert code == 1 and json.loads(out)["witness"]
    code, out = run("check", str(CONFIGS / "golden.toml"))
    assert code == 1 and json.loads(out)["witness"]
    code, out = run("check", str(CONFIGS / "exifs.toml"), "--max-vertices", "2")
    assert code == 2 and json.loads(out)["verdict"] == "undetermined"


def test_analyze_cantor():
    code, out = run("analyze", str(CONFIGS / "cantor.toml"))
    d = json.loads(out)
    assert code == 0
    assert (d["vertices"], d["edges"], d["fnc"], d["essential_class"]) == (1, 2, "CLOSED", ["v0"])


def test_graph_outputs(tmp_path):
    dot, js = tmp_path / "g.dot", tmp_path / "g.json"
    code, out = run("graph", str(CONFIGS / "exifs.toml"), "--contract", "--dot", str(dot), "--json", str(js))
    assert code == 0 and out == ""
    assert dot.read_text().startswith("digraph")
    assert len(json.loads(js.read_text())["edges"]) == 11
    # byte-identical on a second run
    code, out2 = run("graph", str(CONFIGS / "exifs.toml"), "--contract", "--json", "-")
    assert out2 == js.read_text()


def test_dims_and_lq(tmp_path):
    code, out = run("dims", str(CONFIGS / "exifs.toml"), "--contract", "--max-cycle-len", "4",
                    "--pump-depth", "2", "--family", "e5':e11':e10")
    d = json.loads(out)
    assert code == 0 and d["bounds"]["alpha_min_est"] <= d["bounds"]["alpha_max_est"]
    assert len(d["families"][0]["members"]) == 3
    csv_path = tmp_path / "lq.csv"
    code, out = run("lq", str(CONFIGS / "cantor.toml"), "--q=-1,0,1", "--t-min", "1/531441", "--csv", str(csv_path))
    d = json.loads(out)
    assert code == 0 and d["concave_on_grid"] and abs(d["tau"][1] + 0.6309297535714573) < 1e-9
    assert csv_path.read_text().startswith("kind,x,y")


def test_unknown_edge_in_family():
    code, out = run("dims", str(CONFIGS / "exifs.toml"), "--family", "e99::")
    assert code == EXIT_ERROR and json.loads(out)["error"] == "validation_error"


# -- fuzz corpus -------------------------------------------------------------------

def _corpus() -> list[str]:
    lines = EXIFS.splitlines()
    cases = [
        "", "\x00\x01", "format_version = 2", "[[map]]\nratio = 1", "format_version = 1\nprobabilities = 3",
        EXIFS.replace("format_version = 1", ""), EXIFS.replace("format_version = 1", 'format_version = "1"'),
        EXIFS.replace('"1/3", "1/3", "1/3"', '"1/3", "1/3"'), EXIFS.replace('"1/3", "1/3", "1/3"', '"1/2", "1/2", "0"'),
        EXIFS.replace('"1/3", "1/3", "1/3"', '"a", "b", "c"'), EXIFS.replace('"1/3", "1/3", "1/3"', '[1], 2, 3'),
        EXIFS.replace('"1/3", "1/3", "1/3"', '"1/0", "1/3", "1/3"'), EXIFS.replace('"1/3", "1/3", "1/3"', 'true, 1, 0'),
        EXIFS.replace('value = "1/2"', 'value = "x"'), EXIFS.replace('value = "1/2"', 'value = [1]'),
        EXIFS.replace('kind = "rational"', 'kind = "complex"', 1), EXIFS.replace('name = "rho"', 'name = "1rho"'),
        EXIFS.replace('name = "r"', 'name = "rho"'), EXIFS.replace('ratio = "rho"', 'ratio = "rho +"'),
        EXIFS.replace('ratio = "rho"', 'ratio = "sigma"'), EXIFS.replace('ratio = "rho"', 'ratio = "rho $ 2"'),
        EXIFS.replace('ratio = "rho"', 'ratio = "rho/0"'), EXIFS.replace('ratio = "rho"', 'ratio = "1"'),
        EXIFS.replace('ratio = "rho"', 'ratio = "0"'), EXIFS.replace('ratio = "rho"', 'ratio = "-2"'),
        EXIFS.replace('ratio = "rho"', 'ratio = "rho^x"'), EXIFS.replace('ratio = "rho"', 'ratio = "(rho"'),
        EXIFS.replace('ratio = "rho"', 'ratio = ""'), EXIFS.replace('ratio = "rho"', 'ratio = true'),
        EXIFS.replace('ratio = "rho"', 'ratio = {a = 1}'), EXIFS.replace('offset = "0"', 'offset = "0"\nextra = 1'),
        EXIFS.replace('offset = "0"', ''), EXIFS.replace("[analysis]", "[analysis]\nbogus = 1"),
        EXIFS.replace('t_min = "1/6561"', 't_min = "2"'), EXIFS.replace('t_min = "1/6561"', 't_min = "-1"'),
        EXIFS.replace("q = [-2, -1, 0, 1, 2]", 'q = ["a"]'), EXIFS.replace("q = [-2, -1, 0, 1, 2]", "q = []"),
        EXIFS.replace("max_cycle_len = 8", "max_cycle_len = -1"), EXIFS.replace("pump_depth = 3", "pump_depth = 1.5"),
        EXIFS + "\n[budget]\nmax_vertices = 0\n", EXIFS + "\n[budget]\nnope = 3\n", EXIFS + "\nunknown = 1\n",
        EXIFS + "\n[output]\njson = 3\n", EXIFS + "\n[[param]]\nname = \"z\"\nkind = \"algebraic\"\nminpoly = \"x^2-1\"\ninterval = [\"0\", \"2\"]\n",
        EXIFS + "\n[[param]]\nname = \"z\"\nkind = \"algebraic\"\nminpoly = 5\ninterval = [\"0\", \"2\"]\n",
        EXIFS + "\n[[param]]\nname = \"z\"\nkind = \"algebraic\"\nminpoly = \"x^2-2\"\ninterval = \"0,2\"\n",
        "\n".join(lines[:len(lines) // 2]), EXIFS.replace("[[map]]", "[map]", 1), EXIFS.replace("=", ":", 1),
        EXIFS.replace('"1/3", "1/3", "1/3"', '"1/3", "1/3", "1/3", "0/1"'),
    ]
    return cases


def test_fuzz_corpus_size():
    assert len(_corpus()) == 50


@pytest.mark.parametrize("idx", range(50))
def test_fuzz_structured_errors(idx, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(_corpus()[idx], encoding="utf-8", errors="surrogateescape")
    code, out = run("check", str(path))
    data = json.loads(out)
    assert code == EXIT_ERROR, data
    assert data["error"] in ("parse_error", "validation_error", "invalid_context", "invalid_ifs")
    assert data["message"]


def test_mixed_context_is_flagged(tmp_path):
    path = tmp_path / "mixed.toml"
    path.write_text('format_version = 1\nprobabilities = ["1/2", "1/2"]\n'
                    '[[param]]\nname = "g"\nkind = "algebraic"\nminpoly = "x^2+x-1"\ninterval = ["3/5", "7/10"]\n'
                    '[[param]]\nname = "s"\nkind = "generic"\nvalue = "1/3"\n'
                    '[[map]]\nratio = "s"\noffset = "0"\n[[map]]\nratio = "s"\noffset = "1 - s"\n')
    code, out = run("analyze", str(path))
    assert code == 0 and any("independent" in a for a in json.loads(out)["assumptions"])
    assert json.loads(run("analyze", str(CONFIGS / "golden.toml"))[1])["assumptions"] == []
