"""Running an evaluation grid and rendering the report.

Runs a restricted experiment grid (one table, two windows, two models)
on a small synthetic study, prints the rendered report, and shows the
saved-report round trip.
"""
import tempfile
from pathlib import Path

import fatiguelab.dataset as ds
import fatiguelab.eval as ev
from fatiguelab.models import LSTMConfig, RFConfig
from fatiguelab.signals import WindowPlan
from fatiguelab.synth import gen_study

out = Path(tempfile.mkdtemp(prefix="fatiguelab_demo_"))
manifest, _ = gen_study(out, n_subjects=6, seed=30)
blocks = ds.ingest(manifest)

config = ev.ExperimentConfig(
    tables=(ev.TableSpec("PF", ds.MODALITY_PHYSIO),),
    windows=(WindowPlan(10.0), WindowPlan.full_block()),
    models=("rf", "lstm"),
    n_folds=2,
    seed=1,
    model_configs={
        "rf": RFConfig(n_trees=40, seed=1),
        "lstm": LSTMConfig(hidden_size=12, epochs=8, learning_rate=0.02, seed=1),
    },
)
report = ev.run_experiment(blocks, config)

print(ev.render_report(report))

print("\nper-cell detail:")
for cell in report.cells:
    print(f"  {cell.model}@{cell.window_label}: "
          f"fold recalls {[round(r, 2) for r in cell.fold_recalls]}, "
          f"test slices {cell.slice_metrics.accuracy:.2f}, "
          f"test blocks {cell.block_metrics.accuracy:.2f}")

path = out / "report.json"
ev.save_report(path, report)
loaded = ev.load_report(path)
match = ev.report_digest(loaded) == ev.report_digest(report)
print(f"\nsaved to {path}")
print(f"round-trip digest matches: {match}")

csv_path = out / "predictions.csv"
ev.write_predictions_csv(csv_path, report)
print(f"plot-ready block predictions: {csv_path.name}, "
      f"{len(csv_path.read_text().splitlines()) - 1} rows")
