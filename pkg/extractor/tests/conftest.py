"""Builds a tiny deterministic checkpoint for extraction tests.

The sandbox has no model-hub access, so a small randomly initialized
GPT-2-style model and a whitespace word-level tokenizer are constructed
locally and saved with save_pretrained; loading them exercises the same
AutoModel/AutoTokenizer code paths as a published checkpoint.
"""

import json
import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest
import torch

VOCAB_WORDS = [
    "[UNK]", "joe", "biden", "donald", "trump", "paris", "london", "berlin",
    "who", "is", "the", "president", "capital", "of", "france", "multi",
    "token", "answer", "string", "single", "what", "city",
]

N_EMBD = 8


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory):
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import Whitespace
    from transformers import GPT2Config, GPT2Model, PreTrainedTokenizerFast

    out = tmp_path_factory.mktemp("checkpoint")
    torch.manual_seed(20240811)
    config = GPT2Config(
        vocab_size=len(VOCAB_WORDS),
        n_positions=16,
        n_embd=N_EMBD,
        n_layer=1,
        n_head=2,
        bos_token_id=0,
        eos_token_id=0,
    )
    GPT2Model(config).save_pretrained(out)

    vocab = {word: i for i, word in enumerate(VOCAB_WORDS)}
    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    PreTrainedTokenizerFast(tokenizer_object=tok, unk_token="[UNK]").save_pretrained(out)
    return out


@pytest.fixture(scope="session")
def dataset_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "data.jsonl"
    rows = [
        {
            "id": "k1",
            "prompt": "who is the president",
            "target": "joe biden",
            "old": "donald trump",
            "new": "joe biden",
        },
        {
            "id": "k2",
            "prompt": "what is the capital of france",
            "target": "paris",
            "old": "london",
            "new": "berlin",
        },
        {
            "id": "k3",
            "prompt": "what city",
            "target": "multi token answer string",
            "old": "single",
        },
    ]
    out.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return out


@pytest.fixture(scope="session")
def adapter_dir(tmp_path_factory):
    from safetensors.torch import save_file

    out = tmp_path_factory.mktemp("adapter")
    torch.manual_seed(7)
    tensors = {
        "h.0.attn.c_attn.lora_A.weight": torch.randn(4, 16),
        "h.0.attn.c_attn.lora_B.weight": torch.randn(16, 4),
        "h.0.mlp.c_fc.bias": torch.randn(16),  # 1-D, not dumpable as SMAT
    }
    save_file(tensors, str(out / "adapter_model.safetensors"))
    return out
