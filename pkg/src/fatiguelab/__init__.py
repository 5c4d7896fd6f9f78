"""Multimodal physiological fatigue detection toolkit.

Subpackages and modules:
    signals   core types, IIR filtering, resampling, windowing
    ecg       R-peak detection and heart-rate-variability features
    eda       tonic/phasic decomposition and SCR event features
    emg       time- and frequency-domain muscle-activity features
    eeg       band-envelope features over four electrodes
    dataset   study ingestion, labeling, feature registry, example
              building, subject splits
    errors    shared exception types
    models    from-scratch classifiers and preprocessing
    eval      metrics, experiment runner, report generation
    synth     deterministic synthetic study generator
    cli       command-line entry point
"""

__version__ = "0.1.0"
