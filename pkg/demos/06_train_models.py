"""Training the four classifiers on one study.

Fits logistic regression, linear SVM, random forest, and the LSTM on a
small synthetic study and compares their block-vote accuracy on held-out
subjects. Also shows PCA preprocessing and the model artifact format.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

import fatiguelab.dataset as ds
from fatiguelab.models import (
    LogRegConfig,
    LSTMConfig,
    RFConfig,
    SVMConfig,
    load_model,
    predict_blocks,
    save_model,
    train_logreg,
    train_lstm,
    train_rf,
    train_svm,
)
from fatiguelab.signals import WindowPlan
from fatiguelab.synth import gen_study

out = Path(tempfile.mkdtemp(prefix="fatiguelab_demo_"))
manifest, _ = gen_study(out, n_subjects=6, seed=14)
blocks = ds.ingest(manifest)
labeled = ds.label_blocks(blocks, ds.PF_POLICY)

subject_labels = {}
for lb in labeled:
    subject_labels.setdefault(lb.block.subject_id, []).append(lb.label)
split = ds.split_subjects(subject_labels, seed=0)
fit_ids = sorted(split.train | split.validation)
print(f"fitting on {fit_ids}, testing on {sorted(split.test)}")

contexts = {lb.block.block_id: ds.prepare_block(lb, ds.MODALITY_PHYSIO) for lb in labeled}
feats = ds.make_examples(
    labeled, WindowPlan(10.0), ds.MODE_FEATURE, ds.MODALITY_PHYSIO, contexts=contexts
)
seqs = ds.make_examples(
    labeled, WindowPlan(10.0), ds.MODE_SEQUENCE, ds.MODALITY_PHYSIO, contexts=contexts
)

print(f"{len(feats.examples)} windows, {len(feats.names)} features, "
      f"{seqs.examples[0].values.shape[1]} sequence channels\n")

trainers = {
    "logreg": (feats, lambda s: train_logreg(
        s.feature_matrix(), s.labels(), s.names, LogRegConfig(seed=0))),
    "svm": (feats, lambda s: train_svm(
        s.feature_matrix(), s.labels(), s.names, SVMConfig(seed=0))),
    "rf": (feats, lambda s: train_rf(
        s.feature_matrix(), s.labels(), s.names, RFConfig(seed=0))),
    "svm+pca8": (feats, lambda s: train_svm(
        s.feature_matrix(), s.labels(), s.names, SVMConfig(seed=0, pca_k=8))),
    "lstm": (seqs, lambda s: train_lstm(
        s.sequences(), s.labels(), s.names,
        LSTMConfig(hidden_size=12, epochs=10, learning_rate=0.02, seed=0))),
}

artifact_dir = out / "artifacts"
for name, (examples, fit) in trainers.items():
    model = fit(examples.subset(fit_ids))
    bp = predict_blocks(model, examples.subset(sorted(split.test)))
    acc = np.mean(np.asarray(bp.predicted) == np.asarray(bp.actual))
    extra = ""
    if model.pca is not None:
        extra = f", pca {model.pca.components.shape[0]} components"
    if "oob_accuracy" in model.params:
        extra = f", oob {model.params['oob_accuracy']:.2f}"
    print(f"  {name:>8}: test block accuracy {acc:.2f} "
          f"({len(bp.block_ids)} blocks{extra})")
    path = artifact_dir / f"{name}.json"
    artifact_dir.mkdir(exist_ok=True)
    save_model(path, model)

print("\nartifacts are self-describing JSON:")
doc = json.loads((artifact_dir / "rf.json").read_text())
print(f"  keys: {sorted(doc)}")
reloaded = load_model(artifact_dir / "rf.json")
print(f"  rf.json reloads as variant={reloaded.variant!r} with "
      f"{len(reloaded.params['trees'])} trees")
