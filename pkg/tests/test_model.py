import json

import numpy as np
import pytest

import helpers
from bisyn.config import ModelConfig
from bisyn.model import SentimentModel, load_instances, prepare_instance
from bisyn.intra import ToyEncoder
from bisyn.treebank import AspectSpan, Sentence


def _config(**kw):
    base = dict(dim=8, heads=2, blocks=1, layers_per_block=3, ff_mult=2,
                fusion_mode="cond_add", inter_variant="bi", inter_blocks=1,
                inter_layers=2, dropout_io=0.0, dropout_between=0.0, seed=0)
    base.update(kw)
    return ModelConfig(**base)


def _two_clause_instance(config):
    sent, con, dep = helpers.two_clause_sentence()
    return prepare_instance(sent, con, dep, config)


def _vocab(*instances):
    return ToyEncoder.build_vocab([i.sentence.tokens for i in instances])


def test_probability_rows_sum_to_one():
    config = _config()
    inst = _two_clause_instance(config)
    model = SentimentModel(config, _vocab(inst))
    probs = model.forward_sentence(inst)
    assert len(probs) == 3
    for p in probs:
        assert abs(float(p.data.sum()) - 1.0) < 1e-6
        assert (p.data > 0).all()


def test_single_aspect_bi_equals_off_bitwise():
    config_bi = _config(inter_variant="bi")
    config_off = _config(inter_variant="off")
    sent, con, dep = helpers.mini_sentence()
    solo = Sentence("solo", sent.tokens, [AspectSpan(0, 1, "positive")])
    inst_bi = prepare_instance(solo, con, dep, config_bi)
    inst_off = prepare_instance(solo, con, dep, config_off)
    vocab = _vocab(inst_bi)
    model_bi = SentimentModel(config_bi, vocab)
    model_off = SentimentModel(config_off, vocab)
    for name, tensor in model_off.store.items():
        tensor.data[...] = model_bi.store[name].data
    out_bi = model_bi.forward_sentence(inst_bi)
    out_off = model_off.forward_sentence(inst_off)
    np.testing.assert_array_equal(out_bi[0].data, out_off[0].data)


def test_zeroed_relation_params_reproduce_off_variant():
    config_bi = _config(inter_variant="bi")
    config_off = _config(inter_variant="off")
    inst_bi = _two_clause_instance(config_bi)
    inst_off = _two_clause_instance(config_off)
    vocab = _vocab(inst_bi)
    model_bi = SentimentModel(config_bi, vocab)
    for name, tensor in model_bi.store.items():
        if name.startswith("inter."):
            tensor.data[...] = 0.0
    model_off = SentimentModel(config_off, vocab)
    for name, tensor in model_off.store.items():
        tensor.data[...] = model_bi.store[name].data
    got = [p.data for p in model_bi.forward_sentence(inst_bi)]
    want = [p.data for p in model_off.forward_sentence(inst_off)]
    for g, w in zip(got, want):
        np.testing.assert_allclose(g, w, atol=1e-7)


def test_off_variant_multi_aspect_equals_isolated_aspects():
    config = _config(inter_variant="off")
    sent, con, dep = helpers.two_clause_sentence()
    inst_all = prepare_instance(sent, con, dep, config)
    vocab = _vocab(inst_all)
    model = SentimentModel(config, vocab)
    together = [p.data for p in model.forward_sentence(inst_all)]
    for k, aspect in enumerate(sent.aspects):
        solo = Sentence(sent.id, sent.tokens, [aspect])
        inst_solo = prepare_instance(solo, con, dep, config)
        alone = model.forward_sentence(inst_solo)[0].data
        np.testing.assert_array_equal(alone, together[k])


def test_forward_invariant_to_record_aspect_order(tmp_path):
    sent, con, dep = helpers.two_clause_sentence()
    from bisyn.treebank import record_to_json
    rec = json.loads(record_to_json(sent, con, dep))
    rec["aspects"] = list(reversed(rec["aspects"]))
    path = tmp_path / "data.jsonl"
    path.write_text(json.dumps(rec) + "\n" + record_to_json(sent, con, dep) + "\n")
    config = _config()
    insts = load_instances(path, config)
    model = SentimentModel(config, _vocab(*insts))
    a = [p.data for p in model.forward_sentence(insts[0])]
    b = [p.data for p in model.forward_sentence(insts[1])]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_multi_word_aspects_collapse_inside_pipeline():
    config = _config()
    tokens = ["the", "main", "courses", "were", "great", "but", "the",
              "service", "was", "awful"]
    con_text = ("(S (S (NP (DT the) (NN main) (NN courses)) (VP (VBD were) "
                "(JJ great))) (CC but) (S (NP (DT the) (NN service)) "
                "(VP (VBD was) (JJ awful))))")
    from bisyn.treebank import DependencyTree, parse_bracketed
    sent = Sentence("mw", tokens, [AspectSpan(1, 3, "positive"),
                                   AspectSpan(7, 8, "negative")])
    con = parse_bracketed(con_text, tokens)
    dep = DependencyTree([2, 2, 4, 4, -1, 9, 7, 9, 9, 4])
    inst = prepare_instance(sent, con, dep, config)
    assert inst.sentence.tokens[1] == "main courses"
    assert [a.start for a in inst.sentence.aspects] == [1, 6]
    model = SentimentModel(config, _vocab(inst))
    probs = model.forward_sentence(inst)
    assert len(probs) == 2
    assert all(np.isfinite(p.data).all() for p in probs)


def test_archive_mode_end_to_end(tmp_path):
    from bisyn.archive import ArchiveWriter
    sent, con, dep = helpers.two_clause_sentence()
    dim = 8
    rng = np.random.default_rng(4)
    base = str(tmp_path / "emb")
    with ArchiveWriter(base) as w:
        for suffix in ("0", "1", "2", "ctx"):
            w.add(f"tc#{suffix}", rng.normal(size=dim).astype(np.float32),
                  rng.normal(size=(12, dim)).astype(np.float32))
    config = _config(encoder_mode="archive", encoder_archive=base)
    inst = prepare_instance(sent, con, dep, config)
    model = SentimentModel(config, None)
    probs = model.forward_sentence(inst)
    assert len(probs) == 3
    for p in probs:
        assert abs(float(p.data.sum()) - 1.0) < 1e-6


def test_stacks_layout_per_variant():
    inst_cfg = _config()
    inst = _two_clause_instance(inst_cfg)
    vocab = _vocab(inst)
    names_bi = set(SentimentModel(_config(inter_variant="bi"), vocab).store.names())
    assert any(n.startswith("inter.fwd.") for n in names_bi)
    assert any(n.startswith("inter.bwd.") for n in names_bi)
    names_und = set(SentimentModel(_config(inter_variant="undirected"),
                                   vocab).store.names())
    assert any(n.startswith("inter.uni.") for n in names_und)
    assert not any(n.startswith("inter.fwd.") for n in names_und)
    names_off = set(SentimentModel(_config(inter_variant="off"), vocab).store.names())
    assert not any(n.startswith("inter.") for n in names_off)
