import io
import json
import subprocess
import sys

from plm_adapter.server import StubBackbone, serve


def toy_instances(n, labeled=True):
    out = []
    for i in range(n):
        positive = i % 2 == 0
        entry = {
            "id": f"s{i}",
            "fused_text": (
                f"please simplify helper_{i} because it repeats [SEP] [ADD] a{i}"
                if positive
                else f"hmm helper_{i} maybe [SEP] [ADD] b{i}"
            ),
        }
        if labeled:
            entry["label"] = positive
        out.append(entry)
    return out


def drive(lines, backbone=None):
    stdin = io.StringIO("".join(json.dumps(l) + "\n" if isinstance(l, dict) else l + "\n"
                                for l in lines))
    stdout = io.StringIO()
    code = serve(backbone or StubBackbone(), stdin=stdin, stdout=stdout)
    return code, [json.loads(line) for line in stdout.getvalue().splitlines()]


def train_line(model_dir, **overrides):
    line = {
        "op": "train",
        "attribute": "Relevance",
        "instances": toy_instances(8),
        "validation": toy_instances(4),
        "seed": 3,
        "model_dir": model_dir,
    }
    line.update(overrides)
    return line


class TestServeLoop:
    def test_train_then_predict(self, tmp_path):
        code, replies = drive([
            train_line(str(tmp_path)),
            {"op": "predict", "attribute": "Relevance",
             "instances": toy_instances(4, labeled=False), "model_dir": str(tmp_path)},
            {"op": "shutdown"},
        ])
        assert code == 0
        assert replies[0]["op"] == "train"
        assert replies[0]["summary"]["best_epoch"] >= 1
        assert [r["id"] for r in replies[1]["results"]] == ["s0", "s1", "s2", "s3"]
        assert replies[2] == {"op": "shutdown", "ok": True}

    def test_malformed_line_then_valid_request(self, tmp_path):
        code, replies = drive([
            "this is not json",
            train_line(str(tmp_path)),
            {"op": "shutdown"},
        ])
        assert code == 0
        assert "invalid JSON" in replies[0]["error"]
        assert "summary" in replies[1]

    def test_unknown_op(self):
        _, replies = drive([{"op": "finetune"}, {"op": "shutdown"}])
        assert "unknown op 'finetune'" in replies[0]["error"]

    def test_non_object_request(self):
        _, replies = drive(["[1, 2, 3]", {"op": "shutdown"}])
        assert replies[0]["error"] == "request must be a JSON object"

    def test_predict_before_train(self, tmp_path):
        _, replies = drive([
            {"op": "predict", "attribute": "Relevance",
             "instances": toy_instances(2, labeled=False),
             "model_dir": str(tmp_path / "cold")},
            {"op": "shutdown"},
        ])
        assert "model not found" in replies[0]["error"]

    def test_validation_error_becomes_response(self, tmp_path):
        _, replies = drive([
            train_line(str(tmp_path), instances=[]),
            {"op": "shutdown"},
        ])
        assert "non-empty" in replies[0]["error"]

    def test_backbone_crash_is_contained(self):
        class Exploding:
            def train(self, request):
                raise RuntimeError("cuda out of memory")

        _, replies = drive(
            [train_line("unused"), {"op": "shutdown"}], backbone=Exploding()
        )
        assert "RuntimeError" in replies[0]["error"]
        assert replies[1] == {"op": "shutdown", "ok": True}

    def test_blank_lines_skipped(self, tmp_path):
        code, replies = drive(["", "   ", {"op": "shutdown"}])
        assert code == 0
        assert len(replies) == 1

    def test_eof_without_shutdown(self):
        code, replies = drive([{"op": "finetune"}])
        assert code == 0
        assert len(replies) == 1


class TestSubprocess:
    def test_end_to_end_over_stdio(self, tmp_path):
        process = subprocess.Popen(
            [sys.executable, "-m", "plm_adapter", "--backbone", "stub"],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1,
        )

        def call(payload):
            process.stdin.write(json.dumps(payload) + "\n")
            process.stdin.flush()
            return json.loads(process.stdout.readline())

        try:
            reply = call(train_line(str(tmp_path)))
            assert reply["op"] == "train" and "summary" in reply

            process.stdin.write("garbage\n")
            process.stdin.flush()
            assert "invalid JSON" in json.loads(process.stdout.readline())["error"]

            reply = call({
                "op": "predict", "attribute": "Relevance",
                "instances": toy_instances(2, labeled=False), "model_dir": str(tmp_path),
            })
            assert len(reply["results"]) == 2

            assert call({"op": "shutdown"}) == {"op": "shutdown", "ok": True}
            assert process.wait(timeout=10) == 0
        finally:
            if process.poll() is None:
                process.kill()

    def test_hf_backbone_without_checkpoint_fails_fast(self):
        completed = subprocess.run(
            [sys.executable, "-m", "plm_adapter", "--backbone", "hf"],
            input="", capture_output=True, text=True, timeout=60,
        )
        assert completed.returncode == 1
        assert "--checkpoint" in completed.stderr
