import json

import numpy as np
import pytest

import checkerboard as cb


def random_dataset(seed, classes=3, per_class=6, side=8):
    rng = np.random.default_rng(seed)
    n = classes * per_class
    images = rng.random((n, side, side, 3))
    labels = np.arange(n) % classes
    return images, labels


def test_optimum_3x3():
    r = cb.brute_force_optimum(3, 3)
    assert r["max"] == 48
    assert r["maximizer_count"] == 2
    q = cb.checkerboard_template(3, 3)
    assert any(np.array_equal(m, q) for m in r["maximizers"])
    assert cb.discrete_objective(q) == 48.0


def test_enumeration_guard():
    with pytest.raises(cb.ResourceLimit):
        cb.brute_force_optimum(5, 5)


def test_gen_template_kinds():
    q = cb.gen_template("checkerboard", 4, 6)
    assert q.shape == (4, 6)
    assert set(np.unique(q)) == {-1.0, 1.0}
    assert q[0, 0] == 1.0 and q[0, 1] == -1.0
    a = cb.gen_template("random_noise", 5, 5, seed=3)
    b = cb.gen_template("random_noise", 5, 5, seed=3)
    assert np.array_equal(a, b)
    with pytest.raises(cb.InvalidInput):
        cb.gen_template("random_noise", 5, 5)
    with pytest.raises(cb.InvalidInput):
        cb.gen_template("spiral", 5, 5)


def test_inject_and_amplify():
    x = np.full((4, 4, 3), 0.5)
    q = cb.checkerboard_template(4, 4)
    out = cb.inject(x, q, 10 / 255)
    assert np.array_equal(out, x + 10 / 255 * q[:, :, None])
    amp = cb.amplify(x, q, 10 / 255, 2.0)
    assert np.allclose(np.abs(amp - x), 20 / 255, atol=1e-15)
    assert np.array_equal(cb.amplify(x, q, 10 / 255, 1.0), out)
    with pytest.raises(cb.InvalidInput):
        cb.amplify(x, q, 10 / 255, 30.0)
    ones = cb.inject(np.ones((4, 4, 3)), q, 0.1)
    assert ones.max() == 1.0 and np.isclose(ones.min(), 0.9)


def test_cge_constant_and_shift():
    assert cb.cge_score(np.full((6, 6, 3), 0.3)) == 0.0
    rng = np.random.default_rng(1)
    x = rng.random((6, 6, 3)) * 0.5
    assert np.isclose(cb.cge_score(x + 0.25), cb.cge_score(x), rtol=0, atol=1e-12)


def test_poison_dataset_random_and_css():
    images, labels = random_dataset(2)
    poisoned, manifest = cb.poison_dataset(images, labels, target=1, p_num=3, seed=5)
    idx = manifest["poisoned_indices"]
    assert idx == sorted(idx) and len(idx) == 3
    assert all(labels[i] == 1 for i in idx)
    assert idx == cb.select_random(labels, 1, 3, 5)
    untouched = np.setdiff1d(np.arange(len(labels)), idx)
    assert np.array_equal(poisoned[untouched], images[untouched])
    assert np.abs(poisoned - images).max() <= 10 / 255
    assert manifest["dataset_fingerprint"] == cb.dataset_fingerprint(images, labels)

    _, m2 = cb.poison_dataset(images, labels, target=2, p_num=2, selection="css")
    assert m2["poisoned_indices"] == sorted(cb.select_css(images, labels, 2, 2))
    with pytest.raises(cb.InvalidInput):
        cb.poison_dataset(images, labels, target=0, p_num=0)


def test_notch_removes_checkerboard():
    rng = np.random.default_rng(7)
    base = 0.3 + 0.4 * rng.random((8, 8, 3))
    q = cb.checkerboard_template(8, 8)
    x = base + 0.02 * q[:, :, None]
    clean = cb.notch_sanitize(x)
    assert abs(cb.checkerboard_coefficient(clean, q)) < 1e-9
    small = np.full((8, 8, 3), 0.5)
    assert np.array_equal(cb.notch_sanitize(small, tau=0.5), small)


def test_filters():
    q = cb.checkerboard_template(9, 9)
    x = 0.5 + 0.1 * q[:, :, None] * np.ones((1, 1, 3))
    m = cb.mean_filter(x, 3)
    assert np.isclose(m[4, 4, 0] - 0.5, 0.1 / 9 * q[4, 4], atol=1e-12)
    k = cb.gaussian_kernel(1.0, 5)
    assert k.shape == (5, 5) and np.isclose(k.sum(), 1.0)
    plane = np.random.default_rng(3).random((6, 5))
    assert np.allclose(cb.idct2(cb.dct2(plane)), plane, atol=1e-12)
    assert np.allclose(cb.dct_suppress(x, 0), x, atol=1e-12)
    with pytest.raises(cb.InvalidInput):
        cb.dct_suppress(x, 10)
    with pytest.raises(cb.InvalidInput):
        cb.mean_filter(x, 4)


def test_detect_from_scores():
    scores = [float(v) for v in range(20)] * 2
    labels = [0] * 20 + [1] * 20
    scores[39] = 1000.0
    scores[38] = 900.0
    r = cb.detect_from_scores(scores, labels, 2)
    assert r["flagged_class"] == 1
    assert [c["s"] for c in r["classes"]] == [0.0, 0.1]


def test_cge_detect_shapes():
    images, labels = random_dataset(4)
    r = cb.cge_detect(images, labels)
    assert len(r["classes"]) == 3
    assert r["z_scores"].shape == (len(labels),)


def test_separability_report():
    rng = np.random.default_rng(0)
    clean = rng.normal(size=(400, 4))
    poisoned = rng.normal(size=(400, 4)) + np.array([1.0, -1.0, 1.0, -1.0])
    r = cb.analyze_separability(clean, poisoned)
    assert r["direction"].shape == (4,)
    assert np.isclose(np.linalg.norm(r["direction"]), 1.0)
    assert r["empirical_fdr"] > 0
    assert r["sample_count"] == 800


def test_bundle_and_manifest_round_trip(tmp_path):
    images, labels = random_dataset(9)
    images = images.astype(np.float32).astype(np.float64)
    cb.save_bundle(str(tmp_path / "b"), images, labels, source="smoke")
    got, got_labels, classes, meta = cb.load_bundle(str(tmp_path / "b"))
    assert np.array_equal(got, images)
    assert np.array_equal(got_labels, labels)
    assert classes == 3 and meta["source"] == "smoke"

    _, manifest = cb.poison_dataset(images, labels, target=0, p_num=2, seed=1)
    path = str(tmp_path / "manifest.json")
    cb.write_manifest(manifest, path)
    assert cb.read_manifest(path) == manifest
    with open(path) as f:
        assert json.load(f)["selection"] == "random"

    t = np.arange(12, dtype=np.float32).reshape(3, 4)
    cb.save_tensor(str(tmp_path / "t.f32t"), t)
    assert np.array_equal(cb.load_tensor(str(tmp_path / "t.f32t")), t)
    with pytest.raises(cb.FormatError):
        cb.load_tensor(str(tmp_path / "manifest.json"))
