"""From raw study files to training examples.

Generates a small on-disk study, ingests it back, labels the blocks for
both fatigue targets, and slices them into feature and sequence examples
with subject-disjoint splits.
"""
import tempfile
from pathlib import Path

import fatiguelab.dataset as ds
from fatiguelab.eval import summarize_vas
from fatiguelab.signals import WindowPlan
from fatiguelab.synth import gen_study

out = Path(tempfile.mkdtemp(prefix="fatiguelab_demo_"))
manifest, truth = gen_study(out, n_subjects=5, seed=8)
print(f"wrote study to {out}")
print(f"manifest {manifest.name}: {truth['n_subjects']} subjects, "
      f"{len(truth['blocks'])} blocks")

blocks = ds.ingest(manifest)
b = blocks[0]
print(f"\nfirst block {b.block_id}: task {b.task_tag}, "
      f"{len(b.signals)} channels, vas {dict(b.vas)}")

vas = summarize_vas(blocks)
print("\nsurvey bands for the tiredness question by reading index:")
for reading in sorted(vas):
    print(f"  reading {reading}: {vas[reading]['tiredness']}")

print()
for target in ("CF", "PF"):
    labeled = ds.label_blocks(blocks, ds.policy_for_target(target))
    pos = sum(lb.label for lb in labeled)
    note = " (readings after the treadmill run are excluded)" if target == "PF" else ""
    print(f"{target}: {len(labeled)} labeled blocks, {pos} positive{note}")

labeled = ds.label_blocks(blocks, ds.CF_POLICY)
contexts = {lb.block.block_id: ds.prepare_block(lb, ds.MODALITY_ALL) for lb in labeled}

features = ds.make_examples(
    labeled, WindowPlan(10.0), ds.MODE_FEATURE, ds.MODALITY_ALL, contexts=contexts
)
print(f"\nfeature mode, 10 s windows: {len(features.examples)} examples x "
      f"{len(features.names)} features")

sequences = ds.make_examples(
    labeled, WindowPlan.full_block(), ds.MODE_SEQUENCE, ds.MODALITY_ALL,
    contexts=contexts,
)
shapes = {e.values.shape for e in sequences.examples}
print(f"sequence mode, full blocks: {len(sequences.examples)} examples, "
      f"shapes {sorted(shapes)[:2]} (time steps x channels)")

subject_labels = {}
for lb in labeled:
    subject_labels.setdefault(lb.block.subject_id, []).append(lb.label)
plan = ds.split_subjects(subject_labels, seed=0)
print(f"\nsubject split: train {sorted(plan.train)}")
print(f"               val   {sorted(plan.validation)}")
print(f"               test  {sorted(plan.test)}")
folds = ds.cv_folds(sorted(plan.train), k=3, seed=0)
print(f"3-fold CV over training subjects: {folds}")
