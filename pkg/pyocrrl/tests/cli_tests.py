import io
import os
import json
import tempfile
from unittest import mock

import numpy as np


def _run(argv, environ=None):
    """main() exit code plus the captured stdout and stderr"""
    from pyocrrl.cli import main
    out, err = io.StringIO(), io.StringIO()
    with mock.patch("sys.stdout", out), mock.patch("sys.stderr", err):
        code = main(argv, environ=environ if environ is not None else {})
    return code, out.getvalue(), err.getvalue()


def _write_lines(filename, objs):
    with open(filename, 'w', encoding="utf-8") as f:
        for obj in objs:
            f.write(json.dumps(obj) + '\n')
    return filename


def score_fixture20_test():
    from pyocrrl.tests.fixture_utils import setup_fixture20
    tmp = tempfile.mkdtemp()
    dataset = setup_fixture20(os.path.join(tmp, "data"))
    out = os.path.join(tmp, "report.json")
    code, _, err = _run(["score", "--dataset", dataset, "-o", out,
                         "--workers", "2"])
    assert code == 0, err
    with open(out) as f:
        report = json.load(f)
    assert len(report["per_record"]) == 20
    assert report["schema_version"] == "1.0"
    assert "overall" in report["corpus"]


def score_txt_output_test():
    from pyocrrl.tests.fixture_utils import setup_fixture20
    tmp = tempfile.mkdtemp()
    dataset = setup_fixture20(os.path.join(tmp, "data"))
    out = os.path.join(tmp, "report.txt")
    code, _, err = _run(["score", "--dataset", dataset, "-o", out])
    assert code == 0, err
    with open(out) as f:
        report = json.load(f)
    assert len(report["per_record"]) == 20
    with open(out + ".table.txt") as f:
        assert "overall" in f.read()


def score_text_oracle_test():
    tmp = tempfile.mkdtemp()
    table = "<table><tr><td>1</td><td>2</td></tr></table>"
    dataset = _write_lines(os.path.join(tmp, "three.jsonl"), [
        {"id": "a", "domain": "text_doc", "prediction": "Hello world.",
         "ground_truth": "Hello world."},
        {"id": "b", "domain": "formula", "prediction": "a + b",
         "ground_truth": "a + c"},
        {"id": "c", "domain": "table", "prediction": table,
         "ground_truth": table}])
    out = os.path.join(tmp, "report.json")
    code, _, err = _run(["score", "--dataset", dataset, "--output", out])
    assert code == 0, err
    with open(out) as f:
        report = json.load(f)
    assert sorted(report["per_record"]) == ["a", "b", "c"]
    corpus = report["corpus"]
    bleu = (2.0 / 9.0) ** 0.25
    assert corpus["text_edit_mean"] == 0.0
    assert abs(corpus["formula_score_mean"] - 100.0 * bleu) < 1.0e-9
    assert abs(corpus["table_teds_mean"] - 100.0) < 1.0e-9
    assert abs(corpus["overall"] - (200.0 + 100.0 * bleu) / 3.0) < 1.0e-9
    assert abs(corpus["overall"] - 89.553) < 1.0e-3


def score_vision_oracle_test():
    from pyocrrl.tests.fixture_utils import block_image, centered_unit, \
        write_png, write_config
    tmp = tempfile.mkdtemp()
    rng = np.random.default_rng(11)
    g = rng.integers(0, 256, size=(8, 8))
    p = rng.integers(0, 256, size=(8, 8))
    write_png(block_image(g), os.path.join(tmp, "gt.png"))
    write_png(block_image(p), os.path.join(tmp, "pred.png"))
    _write_lines(os.path.join(tmp, "v.jsonl"), [
        {"id": "v1", "domain": "svg",
         "prediction": '<svg xmlns="http://www.w3.org/2000/svg"></svg>',
         "ground_truth": "<svg/>", "gt_image_path": "gt.png",
         "pred_image_path": "pred.png"}])
    config = write_config(os.path.join(tmp, "run.rcf"),
                          ["* run", "dataset_path v.jsonl",
                           "output_path report.json",
                           "* vision", "grid_rows 2", "grid_cols 2"])
    code, _, err = _run(["score", "-c", config])
    assert code == 0, err

    s_global = max(0.0, float(np.dot(centered_unit(g), centered_unit(p))))
    s_local = []
    for r in (0, 4):
        for c in (0, 4):
            cos = np.dot(centered_unit(g[r:r + 4, c:c + 4]),
                         centered_unit(p[r:r + 4, c:c + 4]))
            s_local.append(max(0.0, float(cos)))
    expected = 0.5 * s_global + 0.5 * np.mean(s_local)
    with open(os.path.join(tmp, "report.json")) as f:
        vision = json.load(f)["per_record"]["v1"]["vision"]
    assert abs(vision["fidelity"] - expected) < 1.0e-9
    assert vision["format_alignment"] == 1.0
    assert vision["rendered"] is False


def score_malformed_line_test():
    tmp = tempfile.mkdtemp()
    dataset = os.path.join(tmp, "bad.jsonl")
    with open(dataset, 'w') as f:
        f.write('{"id": "a", "domain": "table", "prediction": "", ' \
                '"ground_truth": ""}\n')
        f.write('{"id": "b", "domain": \n')
    code, _, err = _run(["score", "--dataset", dataset, "-o",
                         os.path.join(tmp, "r.json")])
    assert code == 3
    payload = json.loads(err.strip().split('\n')[-1])
    assert payload["error"] == "parse"
    assert payload["exit_code"] == 3
    assert "line 2" in payload["message"]
    assert not os.path.exists(os.path.join(tmp, "r.json"))


def score_config_error_test():
    tmp = tempfile.mkdtemp()
    code, _, err = _run(["score", "--dataset",
                         os.path.join(tmp, "missing.jsonl"), "-o",
                         os.path.join(tmp, "r.json")])
    assert code == 2
    assert json.loads(err)["error"] == "config"

    code, _, err = _run(["score", "--dataset",
                         os.path.join(tmp, "missing.jsonl"), "-o",
                         os.path.join(tmp, "r.json"), "--backend", "remote"])
    assert code == 2


def score_transport_error_test():
    from pyocrrl.tests.fixture_utils import setup_fixture20
    tmp = tempfile.mkdtemp()
    dataset = setup_fixture20(os.path.join(tmp, "data"))
    session = mock.MagicMock()
    session.request.return_value.status_code = 503
    with mock.patch("pyocrrl.rv.requests.Session", return_value=session):
        code, _, err = _run(["score", "--dataset", dataset, "-o",
                             os.path.join(tmp, "r.json"), "--backend",
                             "remote", "--retries", "1"],
                            environ={"OCRRL_ENDPOINT": "http://embedder:9"})
    assert code == 4
    payload = json.loads(err)
    assert payload["error"] == "transport"
    assert "status 503" in payload["message"]
    assert session.request.call_count == 2
    assert session.request.call_args[0][1] == "http://embedder:9/health"


def grpo_sim_test():
    import pandas as pd
    tmp = tempfile.mkdtemp()
    out = os.path.join(tmp, "traj.csv")
    code, _, err = _run(["grpo-sim", "--target", "ab", "--iterations", "30",
                         "--seed", "4", "-o", out])
    assert code == 0, err
    df = pd.read_csv(out)
    assert list(df.columns) == ["iteration", "mean_reward", "max_reward"]
    assert len(df) == 30
    with open(out) as f:
        first = f.read()
    _run(["grpo-sim", "--target", "ab", "--iterations", "30", "--seed", "4",
          "-o", out])
    with open(out) as f:
        assert f.read() == first

    code, _, _ = _run(["grpo-sim", "--group-size", "1", "-o", out])
    assert code == 2


def filter_test():
    tmp = tempfile.mkdtemp()
    groups = _write_lines(os.path.join(tmp, "groups.jsonl"), [
        {"input_id": "d", "rewards": [0.5, 0.5]},
        {"input_id": "c", "rewards": [0.2, 0.2, 0.2, 0.8]},
        {"input_id": "a", "rewards": [0.1, 0.1, 0.9, 0.9]},
        {"input_id": "b", "rewards": [0.1, 0.3, 0.6, 0.9]}])
    out = os.path.join(tmp, "kept.txt")
    code, _, err = _run(["filter", "--dataset", groups, "-o", out,
                         "--reward-bins", "4", "--threshold", "0.3"])
    assert code == 0, err
    with open(out) as f:
        assert f.read() == "b\na\nc\n"

    short = _write_lines(os.path.join(tmp, "short.jsonl"), [
        {"input_id": "ok", "rewards": [0.0, 1.0]},
        {"input_id": "lonely", "rewards": [0.5]}])
    code, _, err = _run(["filter", "--dataset", short, "-o", out])
    assert code == 3
    assert "lonely" in json.loads(err)["message"]


def validate_config_test():
    from pyocrrl.tests.fixture_utils import write_config
    tmp = tempfile.mkdtemp()
    open(os.path.join(tmp, "d.jsonl"), 'w').close()
    good = write_config(os.path.join(tmp, "good.rcf"),
                        ["* run", "dataset_path d.jsonl",
                         "output_path r.json",
                         "* renderers", "svg 10 conv {input} {output}"])
    code, out, err = _run(["validate-config", "-c", good])
    assert code == 0, err
    assert "dataset_path" in out
    assert "svg" in out

    bad = write_config(os.path.join(tmp, "bad.rcf"),
                       ["* vision", "omega_global 0.9"])
    code, _, err = _run(["validate-config", "-c", bad])
    assert code == 2
    assert json.loads(err)["error"] == "config"

    code, _, _ = _run(["validate-config"])
    assert code == 2


if __name__ == "__main__":
    score_fixture20_test()
    score_txt_output_test()
    score_text_oracle_test()
    score_vision_oracle_test()
    score_malformed_line_test()
    score_config_error_test()
    score_transport_error_test()
    grpo_sim_test()
    filter_test()
    validate_config_test()
