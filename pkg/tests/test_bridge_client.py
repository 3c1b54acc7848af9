import sys
import textwrap

import pytest

from hadas.bridge_client import BridgeLaunchError, BridgeScorer, PROTOCOL
from hadas.pool import Document, Summary
from hadas.scoring import ScorerError, score_batch


def fake_bridge(tmp_path, body, name="bridge.py", handshake=True):
    lines = ["import json, sys"]
    if handshake:
        lines.append(f"print(json.dumps({{'protocol': '{PROTOCOL}'}}), flush=True)")
    lines.append(textwrap.dedent(body).strip())
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return [sys.executable, str(path)]


ECHO_BODY = """
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({'id': req['id'], 'sf': 0.25, 'disc': 0.5, 'cv': 0.75}), flush=True)
"""


def make_pairs(n):
    docs = [Document(id=f"d{i}", text=f"doc {i}") for i in range(n)]
    return [(d, Summary(doc_id=d.id, text=f"sum {i}")) for i, d in enumerate(docs)]


def test_bridge_scores_a_batch(tmp_path):
    with BridgeScorer(fake_bridge(tmp_path, ECHO_BODY)) as scorer:
        out = score_batch(scorer, make_pairs(4))
    assert [r.as_tuple() for r in out] == [(0.25, 0.5, 0.75)] * 4


def test_bridge_handles_out_of_order_responses(tmp_path):
    body = """
    batch = []
    for line in sys.stdin:
        batch.append(json.loads(line))
        if len(batch) == 3:
            for req in reversed(batch):
                print(json.dumps({'id': req['id'], 'sf': req['id'] / 10, 'disc': 0.5, 'cv': 0.5}), flush=True)
            batch = []
    """
    with BridgeScorer(fake_bridge(tmp_path, body)) as scorer:
        out = score_batch(scorer, make_pairs(3))
    assert [r.sf for r in out] == [0.0, 0.1, 0.2]


def test_bridge_out_of_range_score_is_error_with_index(tmp_path):
    body = """
    for line in sys.stdin:
        req = json.loads(line)
        sf = 1.3 if req['id'] == 0 else 0.5
        print(json.dumps({'id': req['id'], 'sf': sf, 'disc': 0.5, 'cv': 0.5}), flush=True)
    """
    with BridgeScorer(fake_bridge(tmp_path, body)) as scorer:
        with pytest.raises(ScorerError) as err:
            score_batch(scorer, make_pairs(2))
    assert err.value.index == 0


def test_bridge_error_response_raises(tmp_path):
    body = """
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({'id': req['id'], 'error': 'model exploded'}), flush=True)
    """
    with BridgeScorer(fake_bridge(tmp_path, body)) as scorer:
        with pytest.raises(ScorerError, match="model exploded"):
            score_batch(scorer, make_pairs(1))


def test_bridge_death_mid_batch_raises(tmp_path):
    body = """
    sys.stdin.readline()
    sys.exit(3)
    """
    with BridgeScorer(fake_bridge(tmp_path, body)) as scorer:
        with pytest.raises(ScorerError, match="died|exited"):
            score_batch(scorer, make_pairs(2))


def test_bridge_launch_failure():
    with pytest.raises(BridgeLaunchError):
        BridgeScorer("/nonexistent/bridge-binary")


def test_bridge_bad_handshake(tmp_path):
    cmd = fake_bridge(tmp_path, "print('hello')", handshake=False)
    with pytest.raises(BridgeLaunchError, match="handshake"):
        BridgeScorer(cmd)


def test_bridge_wrong_protocol(tmp_path):
    path = tmp_path / "wrong.py"
    path.write_text(
        "import json\nprint(json.dumps({'protocol': 'other/9'}), flush=True)\n"
    )
    with pytest.raises(BridgeLaunchError, match="protocol"):
        BridgeScorer([sys.executable, str(path)])


def test_bridge_empty_command_rejected():
    with pytest.raises(BridgeLaunchError):
        BridgeScorer("")
