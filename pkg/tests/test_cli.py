import math

import numpy as np
import pytest
from scipy import stats

from ggps import EmptyDataset, ParseError
from ggps.cli import (
    SimStudyConfig,
    bundled_path,
    ingest,
    load_bundled,
    main,
    read_report,
    read_table,
    run_simstudy,
)
from ggps.cli.io import OUTPUT_DIR_ENV, fmt_float
from ggps.cli.report import report_to_dict
from ggps.estimation import model_spec


def _table(text):
    cols, rows = read_table(text)
    return cols, np.array([[float(c) for c in r] for r in rows])


# -- ingestion -------------------------------------------------------------------
def test_bundled_datasets():
    g = load_bundled("glass_fibers")
    assert g.n == 63 and g.values.min() == 0.55 and g.values.max() == 2.24
    p = load_bundled("phosphorus")
    assert p.n == 128 and p.values.min() == 0.05 and p.values.max() == 0.28
    assert bundled_path("phosphorus").is_file()


def test_ingest_lines_with_comments(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("# header\n1.5\n\n  2.5  \n# note\n3\n")
    d = ingest(f)
    np.testing.assert_array_equal(d.values, [1.5, 2.5, 3.0])
    assert d.label == "d"


def test_ingest_rejects_bad_lines(tmp_path):
    f = tmp_path / "d.txt"
    for text, line in [("1\n0\n", 2), ("1\n\n-3\n", 3), ("# c\nabc\n", 2), ("1\nnan\n", 2), ("inf\n", 1)]:
        f.write_text(text)
        with pytest.raises(ParseError) as exc:
            ingest(f)
        assert exc.value.line == line
        assert str(exc.value).startswith(f"line {line}:")


def test_ingest_empty(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("# nothing\n\n")
    with pytest.raises(EmptyDataset):
        ingest(f)


def test_ingest_csv(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("id,life\n1,0.5\n2,1.25\n# skipped\n3,2\n")
    np.testing.assert_array_equal(ingest(f, "csv:life").values, [0.5, 1.25, 2.0])
    np.testing.assert_array_equal(ingest(f, "csv:1").values, [0.5, 1.25, 2.0])
    g = tmp_path / "n.csv"
    g.write_text("7,0.5\n8,1.5\n")
    np.testing.assert_array_equal(ingest(g, "csv:1").values, [0.5, 1.5])
    with pytest.raises(ParseError):
        ingest(f, "csv:missing")
    with pytest.raises(ParseError) as exc:
        ingest(f, "csv:4")
    assert exc.value.line == 2


# -- fit ---------------------------------------------------------------------------
def test_fit_report_round_trip(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["fit", "--data", "bundled:glass_fibers", "--models", "gompertz,ggg,ggb", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "ranking by AIC" in text and "ggb(m=5)" in text
    rep = read_report(out)
    assert [m.label for m in rep.models] == ["gompertz", "ggg", "ggb(m=5)"]
    assert sorted(rep.ranking) == sorted(m.label for m in rep.models)
    assert rep.ranking[0] == "ggg"
    for m in rep.models:
        f = m.fit
        assert isinstance(f.estimates, np.ndarray) and f.info_matrix.shape == (f.k, f.k)
    # rebuilt fields are bit-identical: re-encoding gives the same document
    again = tmp_path / "again.json"
    from ggps.cli import write_report
    write_report(rep, again)
    assert again.read_text() == out.read_text()
    assert report_to_dict(rep)["models"][1]["fit"]["loglik"] == rep.models[1].fit.loglik


def test_fit_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["fit", "--data", "bundled:glass_fibers", "--models", "ggp", "--seed", "5", "--out", str(p)]) == 0
    assert paths[0].read_text() == paths[1].read_text()


def test_single_model_report(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["fit", "--data", "bundled:glass_fibers", "--models", "gompertz", "--out", str(out)]) == 0
    assert len(read_report(out).models) == 1


def test_fit_default_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "reports"))
    assert main(["fit", "--data", "bundled:glass_fibers", "--models", "gompertz"]) == 0
    assert (tmp_path / "reports" / "glass_fibers_report.json").is_file()


def test_fit_flags_collapse(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["fit", "--data", "bundled:phosphorus", "--models", "gg,ggp", "--out", str(out)]) == 0
    assert "collapses to GG sub-model" in capsys.readouterr().out
    rep = read_report(out)
    assert any("ggp: theta collapsed" in w for w in rep.warnings)
    gg, ggp = rep.models
    assert ggp.fit.collapsed and ggp.fit.loglik == pytest.approx(gg.fit.loglik, abs=1e-6)


def test_fit_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1\n2\n0\n")
    assert main(["fit", "--data", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["fit", "--data", "bundled:glass_fibers", "--models", "weibull"]) == 1
    assert main(["fit", "--data", "bundled:glass_fibers", "--method", "newton"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["fit", "--data", "bundled:glass_fibers", "--models", "ggg", "--out", str(tmp_path / "x.json"),
                 "--method", "em"]) in (0, 2)


def test_fit_exit_code_two_on_nonconvergence(tmp_path, monkeypatch, capsys):
    from ggps.estimation import fit as real_fit
    from dataclasses import replace
    import importlib

    cli_main = importlib.import_module("ggps.cli.main")

    def unconverged(spec, data, config):
        return replace(real_fit(spec, data, config), converged=False)

    monkeypatch.setattr(cli_main, "fit", unconverged)
    out = tmp_path / "u.json"
    assert main(["fit", "--data", "bundled:glass_fibers", "--models", "gompertz", "--out", str(out)]) == 2
    assert out.is_file()


# -- eval -----------------------------------------------------------------------------
def test_eval_gompertz_hazard(capsys):
    assert main(["eval", "--model", "ggg-ext", "--alpha", "1", "--theta-star", "1", "--beta", "0.5",
                 "--gamma", "0.7", "--x-grid", "0:3:31"]) == 0
    cols, t = _table(capsys.readouterr().out)
    assert cols == ["x", "pdf", "cdf", "sf", "hazard"]
    np.testing.assert_allclose(t[:, 4], 0.5 * np.exp(0.7 * t[:, 0]), rtol=1e-8)
    assert np.all(np.diff(t[:, 2]) >= 0)


def test_eval_quantiles_round_trip(tmp_path):
    out = tmp_path / "q.tsv"
    assert main(["eval", "--model", "ggl", "--alpha", "0.6", "--theta", "0.7", "--q", "0.01,0.5,0.99",
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# model ggl")
    _, t = _table(text)
    model = model_spec("ggl").build([0.6, 1.0, 0.1, 0.7])
    np.testing.assert_allclose(model.cdf(t[:, 1]), t[:, 0], atol=1e-8)
    np.testing.assert_allclose(t[:, 2], t[:, 0], atol=1e-9)


def test_eval_errors(capsys):
    assert main(["eval", "--model", "ggg", "--theta", "1.5", "--q", "0.5"]) == 1
    assert main(["eval", "--model", "ggg", "--theta", "0.5"]) == 1
    assert main(["eval", "--model", "gg", "--theta", "0.5", "--q", "0.5"]) == 1
    assert main(["eval", "--model", "ggg", "--theta", "0.5", "--x-grid", "3:1:4"]) == 1


def test_nine_significant_digits():
    assert fmt_float(math.pi) == "3.14159265"
    assert fmt_float(None) == "NA"


# -- sample ------------------------------------------------------------------------------
def test_sample_reproducible(tmp_path):
    args = ["sample", "--model", "ggp", "--theta", "2", "--n", "200", "--seed", "42"]
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    head = a.read_text().splitlines()[:2]
    assert "theta=2" in head[0] and "seed=42" in head[1]
    assert ingest(a).n == 200


def test_sample_passes_ks(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["sample", "--model", "ggb", "--alpha", "2", "--theta", "1.5", "--n", "10000", "--seed", "3",
                 "--out", str(out)]) == 0
    x = ingest(out).values
    model = model_spec("ggb").build([2.0, 1.0, 0.1, 1.5])
    assert stats.kstest(x, model.cdf).pvalue > 0.01


def test_sample_compound_binomial_one_is_gg(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["sample", "--model", "ggb", "--m", "1", "--theta", "3", "--n", "5000", "--seed", "1",
                 "--method", "compound", "--out", str(a)]) == 0
    assert main(["sample", "--model", "gg", "--n", "5000", "--seed", "2", "--out", str(b)]) == 0
    assert stats.ks_2samp(ingest(a).values, ingest(b).values).pvalue > 0.01


# -- profile ----------------------------------------------------------------------------
def test_profile_command(capsys):
    assert main(["profile", "--data", "bundled:glass_fibers", "--model", "gg", "--param", "gamma",
                 "--grid", "1:5:41"]) == 0
    text = capsys.readouterr().out
    cols, t = _table(text)
    assert cols[:3] == ["gamma", "profile_loglik", "converged"]
    mle_line = [ln for ln in text.splitlines() if ln.startswith("# mle")][0]
    fields = dict(kv.split("=") for kv in mle_line[6:].split())
    best = t[np.argmax(t[:, 1]), 0]
    assert abs(best - float(fields["gamma"])) <= 0.1
    assert np.max(t[:, 1]) <= float(fields["loglik"]) + 1e-8


def test_profile_unknown_parameter(capsys):
    assert main(["profile", "--data", "bundled:glass_fibers", "--model", "gompertz", "--param", "alpha",
                 "--grid", "1:2:3"]) == 1


# -- simstudy ----------------------------------------------------------------------------
def test_simstudy_single_replication_has_no_see(capsys):
    assert main(["simstudy", "--reps", "1", "--sizes", "50", "--seed", "3"]) == 0
    cols, rows = read_table(capsys.readouterr().out)
    see = cols.index("SEE")
    assert all(r[see] == "NA" for r in rows) and len(rows) == 4


def test_simstudy_independent_of_workers():
    cfg = SimStudyConfig(sizes=(30,), replications=6, seed=9)
    serial = run_simstudy(cfg, workers=1)
    parallel = run_simstudy(cfg, workers=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.ae, b.ae)
        np.testing.assert_array_equal(a.see, b.see)


def test_simstudy_see_shrinks_with_n():
    cfg = SimStudyConfig(sizes=(50, 200), replications=60, seed=17)
    small, large = run_simstudy(cfg)
    assert np.all(large.see < small.see)
    for cell in (small, large):
        assert cell.worst_descent <= 1e-10 * 200


def test_simstudy_config_validation():
    from ggps import DomainError

    with pytest.raises(DomainError):
        SimStudyConfig(replications=0)
    with pytest.raises(DomainError):
        SimStudyConfig(thetas=(1.5,))
    with pytest.raises(DomainError):
        SimStudyConfig(sizes=(3,))
