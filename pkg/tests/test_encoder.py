import hashlib

import numpy as np
import pytest

from nestex.nn.encoder import EncoderConfig, SentenceEncoder, TokenVocab, encode_sentence, prompt_summary
from nestex.nn.nnkit import ModelParams, grad_check
from nestex.utils.errors import ShapeError

TOKENS = ("Mary", "said", "that", "John", "paid", "the", "bill")


def _encoder(vocab, use_prompt=True, seed=0):
    config = EncoderConfig(embed_dim=4, window=1, repr_dim=5, hidden_dim=6, layers=2, dropout=0.0,
                           hash_buckets=3, use_prompt=use_prompt)
    encoder = SentenceEncoder(config, TokenVocab(TOKENS[:5], buckets=3), vocab)
    params = ModelParams(seed=seed)
    encoder.init_params(params)
    return encoder, params


class TestTokenVocab:
    def test_ranked_by_frequency(self, nested_sentence):
        vocab = TokenVocab.build([nested_sentence, nested_sentence], buckets=2)
        assert vocab.tokens == sorted(nested_sentence.tokens)
        assert len(vocab) == len(nested_sentence.tokens) + 2

    def test_unknown_tokens_hash_into_buckets(self):
        vocab = TokenVocab(["a", "b"], buckets=4)
        assert vocab.row("b") == 1
        assert 2 <= vocab.row("zebra") < 6
        assert vocab.row("zebra") == TokenVocab(["a", "b"], buckets=4).row("zebra")

    def test_unknown_rows_are_process_independent(self):
        vocab = TokenVocab(["a", "b"], buckets=7)
        for token in ("zebra", "Quetzalcoatl", "\u00e9t\u00e9"):
            digest = int.from_bytes(hashlib.md5(token.encode("utf-8")).digest()[:8], "little")
            assert vocab.row(token) == 2 + digest % 7

    def test_save_load(self, tmp_path):
        vocab = TokenVocab(["x", "y"], buckets=5)
        path = str(tmp_path / "tokens.txt")
        vocab.save(path)
        loaded = TokenVocab.load(path, buckets=5)
        assert loaded.tokens == ["x", "y"] and loaded.buckets == 5


class TestEncoder:
    def test_output_shape(self, vocab):
        encoder, params = _encoder(vocab)
        assert encode_sentence(TOKENS, encoder, params).shape == (len(TOKENS), 5)

    def test_single_token_sentence(self, vocab):
        encoder, params = _encoder(vocab)
        assert encode_sentence(("Mary",), encoder, params).shape == (1, 5)

    def test_empty_sentence(self, vocab):
        encoder, params = _encoder(vocab)
        with pytest.raises(ShapeError):
            encode_sentence((), encoder, params)

    def test_window_features(self, vocab):
        encoder, params = _encoder(vocab)
        x, rows = encoder.features(TOKENS[:3], params)
        table = params["enc.embed"]
        np.testing.assert_array_equal(x[0, :4], 0.0)  # left padding
        np.testing.assert_array_equal(x[0, 4:8], table[rows[0]])
        np.testing.assert_array_equal(x[0, 8:12], table[rows[1]])
        np.testing.assert_array_equal(x[:, 12], [0.0, 1.0, 0.0])

    def test_prompt_slot(self, vocab):
        encoder, params = _encoder(vocab)
        x, _ = encoder.features(TOKENS, params)
        np.testing.assert_allclose(x[3, 13:], prompt_summary(vocab, params))
        np.testing.assert_allclose(prompt_summary(vocab, params), params["enc.prompt"].mean(axis=0))

    def test_prompt_off_leaves_slot_empty_and_shares_init(self, vocab):
        on, p_on = _encoder(vocab, use_prompt=True)
        off, p_off = _encoder(vocab, use_prompt=False)
        assert "enc.prompt" not in p_off
        x, _ = off.features(TOKENS, p_off)
        np.testing.assert_array_equal(x[:, 13:], 0.0)
        for name in p_off.names():
            np.testing.assert_array_equal(p_on[name], p_off[name])

    @pytest.mark.parametrize("use_prompt", [True, False])
    def test_gradients(self, vocab, use_prompt):
        encoder, params = _encoder(vocab, use_prompt, seed=4)
        weights = np.random.default_rng(0).normal(size=(len(TOKENS), 5))

        def loss_fn(p):
            H, cache = encoder.encode(TOKENS, p)
            encoder.backward(cache, weights, p)
            return float(np.sum(H * weights))

        report = grad_check(loss_fn, params, samples=80, seed=1)
        assert report.ok, report.failures

    def test_token_order_matters(self, vocab):
        encoder, params = _encoder(vocab, seed=2)
        H = encode_sentence(TOKENS, encoder, params)
        order = np.array([2, 0, 5, 1, 6, 3, 4])
        H_shuffled = encode_sentence([TOKENS[i] for i in order], encoder, params)
        # row j of the shuffled sentence holds token order[j]; its context has changed
        assert not np.allclose(H_shuffled, H[order])
