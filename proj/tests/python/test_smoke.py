import math

import numpy as np
import pytest

import lowshot as ls


@pytest.fixture(scope="module")
def small():
    spec = ls.SyntheticSpec()
    spec.num_classes = 20
    spec.per_class_train = 8
    spec.per_class_test = 4
    spec.input_dim = 16
    data = ls.gen_synthetic(spec)
    split = ls.split_base_novel(data.train, 10)
    return data, split


def make_model(input_dim, classes, dim=8, seed=1):
    cfg = ls.EmbedderConfig()
    cfg.input_dim = input_dim
    cfg.hidden_dims = [16]
    cfg.embedding_dim = dim
    cfg.activation = ls.Activation.tanh
    cfg.seed = seed
    return ls.Model(ls.EmbeddingNet(cfg), ls.CosineHead.random(dim, classes, seed + 1))


def test_dataset_layout(small):
    data, split = small
    assert data.train.inputs.shape == (16, 160)
    assert len(data.train) == 160 and len(data.test) == 80
    assert split.base == list(range(10)) and split.novel == list(range(10, 20))


def test_scale_example():
    phi = np.array([1.0, 0.0, 0.0])
    w = np.column_stack([phi] + [-phi] * 99)
    head = ls.CosineHead(w, list(range(100)), 1.0)
    assert ls.softmax(head.logits(phi))[0] == pytest.approx(0.069, abs=1e-3)


def test_proxy_matches_cross_entropy():
    rng = np.random.default_rng(0)
    p = rng.normal(size=(5, 7))
    p /= np.linalg.norm(p, axis=0)
    x = p[:, 2] + 0.1 * rng.normal(size=5)
    x /= np.linalg.norm(x)
    head = ls.CosineHead(p, list(range(7)), 2.0)
    proxy, _ = ls.nca_proxy_loss(x, p, 2)
    ce, grad = ls.cross_entropy_from_logits(head.logits(x), 2)
    assert proxy == pytest.approx(ce, abs=1e-10)
    assert grad.shape == (7,)


def test_imprint_single_is_the_embedding(small):
    data, split = small
    model = make_model(16, split.base)
    x = data.train.example(data.train.indices_of(15)[0])
    out = ls.imprint_single(model, x, 15)
    col = out.head.column_of(15)
    assert col == 10
    np.testing.assert_array_equal(out.head.weights[:, col], model.embed(x))
    np.testing.assert_array_equal(out.head.weights[:, :10], model.head.weights)
    assert out.parameter_count() == model.parameter_count() + 8
    assert ls.imprint_average(model, ls.SupportSet(15, [x])).head.weights.tobytes() == out.head.weights.tobytes()


def test_train_imprint_evaluate(small):
    data, split = small
    base = data.train.filter_classes(split.base)
    cfg = ls.TrainConfig()
    cfg.epochs = 4
    res = ls.train_base(make_model(16, split.base), base, cfg)
    assert len(res.loss_history) == 4 and res.loss_history[-1] < res.loss_history[0]
    support = ls.sample_support(data.train, split.novel, 2, 3)
    assert len(support) == 10 and all(len(s.examples) == 2 for s in support)
    imp = ls.imprint_all(res.model, support)
    acc = ls.top1_accuracy(imp, data.test, split.novel)
    assert 0.0 <= acc <= 1.0
    preds = imp.predict_batch(data.test.inputs)
    assert len(preds) == len(data.test)
    ft = ls.finetune(imp, base, support, cfg)
    assert len(ft.loss_history) == 4


def test_lr_schedule():
    cfg = ls.TrainConfig()
    assert ls.lr_at_epoch(cfg, 0, ls.ParamGroup.pretrained) == 1e-4
    assert ls.lr_at_epoch(cfg, 4, ls.ParamGroup.fresh) == pytest.approx(9.4e-4)


def test_checkpoint_round_trip(tmp_path, small):
    data, split = small
    model = make_model(16, split.base)
    path = tmp_path / "m.ckpt"
    ls.save_checkpoint(path, model)
    back = ls.load_checkpoint(path)
    x = data.test.example(0)
    assert back.logits(x).tobytes() == model.logits(x).tobytes()
    blob = bytearray(path.read_bytes())
    blob[-3] ^= 1
    path.write_bytes(bytes(blob))
    with pytest.raises(ls.LowshotError) as err:
        ls.load_checkpoint(path)
    assert err.value.category == "CorruptPayload"


def test_errors_carry_category():
    with pytest.raises(ls.LowshotError) as err:
        ls.average_template([np.array([1.0, 0.0]), np.array([-1.0, 0.0])])
    assert err.value.category == "DegenerateMean"
    assert isinstance(err.value, RuntimeError)


def test_benchmark(small):
    data, split = small
    opts = ls.BenchmarkOptions()
    opts.embedder.hidden_dims = [16]
    opts.embedder.embedding_dim = 8
    opts.base_train.epochs = 3
    report = ls.run_benchmark(data, split, [1], ["Imprinting", "NearestNeighbor"], [0, 1], opts)
    assert report.seeds == [0, 1]
    assert report.values("Imprinting", 1) == report.values("NearestNeighbor", 1)
    s = report.summary("Imprinting", 1)
    assert s["count"] == 2 and s["min"] <= s["mean"] <= s["max"]
    assert report.to_csv().splitlines()[0] == "config,n,seed,metric,value"
    assert "Imprinting" in report.to_table()
    assert {r[0] for r in report.rows} == {"Imprinting", "NearestNeighbor"}
    assert "AllClassJoint" in ls.config_names()
    assert not math.isnan(report.runtime_seconds)
