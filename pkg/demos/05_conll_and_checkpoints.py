"""Round-trip tour of the file formats: CoNLL corpora and binary checkpoints.

Run:  python3 demos/05_conll_and_checkpoints.py
"""
import os
import tempfile

import numpy as np

from memtag.data import load_checkpoint, load_conll, save_checkpoint, write_conll
from memtag.tagger import forward_sequence, init_model

SAMPLE = """\
book\tO
a\tO
flight\tO
from\tO
hong_kong\tDpt-city
to\tO
seattle\tArv-city

list\tO
morning\tDep-time
flights\tO
"""

workdir = tempfile.mkdtemp()
conll_path = os.path.join(workdir, "sample.conll")
with open(conll_path, "w") as fh:
    fh.write(SAMPLE)

corpus = load_conll(conll_path)
print(f"loaded {len(corpus.sequences)} sentences, "
      f"labels: {corpus.label_vocab.tokens}")

# round trip is content-exact
copy_path = os.path.join(workdir, "copy.conll")
write_conll(corpus, copy_path)
again = load_conll(copy_path)
assert [s.raw_tokens for s in again.sequences] == \
       [s.raw_tokens for s in corpus.sequences]
print("CoNLL round trip: exact")

# checkpoints restore tensors bit-exactly
model = init_model("rnn_em", vocab_size=len(corpus.word_vocab),
                   n_labels=len(corpus.label_vocab), d=8, p=10, window_k=1,
                   rng=np.random.default_rng(0), m=6, n=4)
ckpt_path = os.path.join(workdir, "model.bin")
save_checkpoint(model, None, ckpt_path, corpus.word_vocab, corpus.label_vocab)
restored, _, wv, lv = load_checkpoint(ckpt_path)

seq = corpus.sequences[0]
a, _, _, _ = forward_sequence(model, seq.words)
b, _, _, _ = forward_sequence(restored, seq.words)
print("checkpoint forward pass identical:", bool(np.array_equal(a, b)))
print("files in", workdir)
