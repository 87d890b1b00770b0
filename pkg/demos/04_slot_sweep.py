"""Memory-capacity sweep: vary the number of memory slots n with the slot
width fixed, and compare final training entropy and test F1.

More slots help up to a point; capacity is not increased simply by adding
slots.  This is a scaled-down version of the full sweep (use the CLI
`memtag sweep-slots` for the real thing).

Run:  python3 demos/04_slot_sweep.py          (about 5 minutes)
"""
from memtag.config import TrainConfig
from memtag.training import sweep_slots, write_sweep_csv

cfg = TrainConfig(cell="rnn_em", d=16, p=32, m=16, epochs=5, seed=0,
                  synth_n_train=800, synth_n_test=200,
                  out_dir="runs/demo_sweep")

rows = sweep_slots(cfg, [1, 2, 8], log=print)
write_sweep_csv(rows, "runs/demo_sweep/sweep.csv")

print(f"\n{'n':>4s} {'F1':>8s} {'entropy':>10s}")
for row in rows:
    print(f"{row['n']:>4d} {row['f1']:>8.2f} {row['entropy']:>10.5f}")
