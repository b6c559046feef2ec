import numpy as np
import pytest

from ismap import predict, score
from ismap.classify import nearest_centroid_baseline, save_predictions_csv
from ismap.errors import ParameterError


def test_binary_sign_rule():
    R = np.array([[1.0, 0.0], [0.5, -3.0], [-0.1, 4.0]])
    p = predict(R, [0, 2])
    assert p.binary
    assert p.labels.tolist() == [0, 0, 1]
    np.testing.assert_array_equal(p.decision[:, 0], -p.decision[:, 1])


def test_argmax_rule():
    # decision values (-1, 2, 0.5) for the last row
    R = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, 2.0, 0.5]])
    p = predict(R, [0, 1, 2])
    assert p.decision[3].tolist() == [-1.0, 2.0, 0.5]
    assert p.labels[3] == 1
    assert not p.binary


def test_zero_decision_abstains_to_lowest_class():
    R = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [0, 0, 0], [0, 1.0, 1.0]])
    p = predict(R, [0, 1, 2])
    assert p.abstain.tolist() == [False, False, False, True, False]
    assert p.labels[3] == 0
    # ties resolve to the lowest class id
    assert p.labels[4] == 1


def test_invariances(rng):
    R = rng.standard_normal((40, 4))
    anchors = [0, 5, 9]
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    base = predict(R, anchors).labels
    assert np.array_equal(predict(R @ Q, anchors).labels, base)
    assert np.array_equal(predict(3.7 * R, anchors).labels, base)


def test_binary_mode_uses_one_anchor(rng):
    R = rng.standard_normal((10, 3))
    p = predict(R, [2, 7])
    np.testing.assert_allclose(p.decision[:, 0], R @ R[2])


def test_score():
    truth = np.zeros(950, dtype=int)
    pred = truth.copy()
    pred[632:] = 1
    assert score(pred, truth) == pytest.approx(66.52631578947368)
    assert score(truth, truth) == 100.0
    mask = np.zeros(950, dtype=bool)
    mask[:10] = True
    assert score(pred, truth, mask) == 100.0
    with pytest.raises(ParameterError):
        score(pred, truth, np.zeros(950, dtype=bool))


def test_nearest_centroid_baseline():
    X = np.array([[0.0], [0.2], [5.0], [5.3], [0.1], [4.9]])
    labels = np.array([0, 0, 1, 1, -1, -1])
    assert nearest_centroid_baseline(X, labels).tolist() == [0, 0, 1, 1, 0, 1]


def test_export(tmp_path):
    p = predict(np.array([[1.0, 0.0], [-1.0, 0.0]]), [0, 1])
    save_predictions_csv(p, tmp_path / "p.csv", ids=np.array([10, 11]))
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines == ["id,predicted,decision_0,decision_1", "10,0,1.0,-1.0", "11,1,-1.0,1.0"]
