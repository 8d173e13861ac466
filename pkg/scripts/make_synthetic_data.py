#!/usr/bin/env python3
"""Generate a small synthetic corpus for the decode/eval CLI walkthrough.

Writes a character vocabulary, a biasing word list, one log-probability
matrix per utterance, and a JSONL manifest with reference texts. Roughly
half of the utterances containing a biasing word get their peaks corrupted
so the greedy decode garbles the word; spotting with a positive word bonus
should win most of them back.

Example:
    python3 scripts/make_synthetic_data.py --out-dir /tmp/demo --utterances 40
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ctcspot import LogProbMatrix, Vocabulary, write_logprobs

LETTERS = "abcdefghijklmnopqrstuvwxyz"
BIASING = ["nvidia", "cuda", "pytorch", "tensor", "kernel"]
FILLERS = [
    "run", "the", "model", "on", "a", "fast", "machine",
    "with", "new", "code", "and", "profile", "it",
]


def _log_softmax(rows: np.ndarray) -> np.ndarray:
    shifted = rows - rows.max(axis=1, keepdims=True)
    norm = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return norm.astype(np.float32)


def _confusable(ch: str) -> str:
    return LETTERS[(LETTERS.index(ch) + 1) % 26]


def synth_utterance(rng, vocab: Vocabulary, text: str, garble: str | None):
    """Peaky frame sequence for `text`; `garble` names a word to corrupt."""
    blank = vocab.blank_id
    rows = []

    def frames(tok_id, peak, count, rival=None, rival_p=0.0):
        for _ in range(count):
            probs = np.full(vocab.size, 0.02 / vocab.size)
            probs[tok_id] = peak
            if rival is not None:
                probs[rival] = rival_p
            probs[blank] += 1.0 - probs.sum()
            rows.append(probs)

    def silence(count):
        for _ in range(count):
            probs = np.full(vocab.size, 0.03 / vocab.size)
            probs[blank] = 1.0 - probs.sum() + probs[blank]
            rows.append(probs)

    silence(int(rng.integers(1, 3)))
    for w_i, word in enumerate(text.split()):
        if w_i:
            frames(vocab.space_id, 0.9, int(rng.integers(1, 3)))
        corrupt = word == garble
        for c_i, ch in enumerate(word):
            tok = vocab.token_to_id[ch]
            n = int(rng.integers(2, 4))
            # corrupt interior characters only, so the word stays spottable
            if corrupt and 0 < c_i < len(word) - 1 and rng.random() < 0.7:
                rival = vocab.token_to_id[_confusable(ch)]
                frames(tok, 0.30, n, rival=rival, rival_p=0.45)
            else:
                frames(tok, 0.9, n)
            if c_i + 1 < len(word) and word[c_i + 1] == ch:
                silence(1)  # repeated letters need a separating blank
        silence(int(rng.integers(1, 3)))
    return LogProbMatrix(values=_log_softmax(np.log(np.vstack(rows))), normalized=True)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", required=True, help="directory to create the corpus in")
    ap.add_argument("--utterances", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--garble-rate", type=float, default=0.6,
                    help="fraction of biasing occurrences whose peaks get corrupted")
    args = ap.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    tokens = tuple(LETTERS) + (" ", "<b>")
    vocab = Vocabulary(tokens=tokens, blank_id=len(tokens) - 1)
    (out / "vocab.txt").write_text("\n".join(tokens) + "\n", encoding="utf-8")
    (out / "context.txt").write_text("\n".join(BIASING) + "\n", encoding="utf-8")

    garbled = 0
    with open(out / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for i in range(args.utterances):
            words = [FILLERS[int(k)] for k in rng.integers(0, len(FILLERS), size=rng.integers(2, 5))]
            garble = None
            if rng.random() < 0.5:
                hot = BIASING[int(rng.integers(0, len(BIASING)))]
                words.insert(int(rng.integers(0, len(words) + 1)), hot)
                if rng.random() < args.garble_rate:
                    garble = hot
                    garbled += 1
            text = " ".join(words)
            lp = synth_utterance(rng, vocab, text, garble)
            name = f"utt{i:03d}.bin"
            write_logprobs(lp, str(out / name))
            fh.write(json.dumps({"id": f"utt{i:03d}", "logprobs": name, "text": text}) + "\n")

    print(f"wrote {args.utterances} utterances ({garbled} garbled) to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
