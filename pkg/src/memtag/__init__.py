"""memtag: sequence tagging with a memory-augmented recurrent network.

A from-scratch numpy implementation of a simple recurrent network extended
with an external memory addressed by cosine similarity, alongside simple-RNN,
LSTM, and GRNN baselines.  All gradients are hand-derived and verified
against finite differences.
"""

from .cells import CELL_KINDS, CellState, Dims, count_params, init_params, init_state
from .config import TrainConfig
from .data import Corpus, SynthConfig, generate_synthetic, load_conll, write_conll
from .evaluation import EntropyTracker, F1Report, RunSummary, score_f1, summarize_runs
from .memory import AddressingParams, ExternalMemory, address, interpolate_weight, read, reset, write
from .optim import AdaDeltaState, ClipConfig, adadelta_step, clip_gradients
from .tagger import TaggerModel, backward_sequence, forward_sequence, init_model, window_input
from .training import (evaluate_corpus, gradcheck_all, gradient_check,
                       matched_hidden_size, run_training, sweep_slots, train_model)

__version__ = "0.1.0"
