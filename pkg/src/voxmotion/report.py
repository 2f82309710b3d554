"""Classification report documents.

Reports are JSON with a stable field order so runs diff cleanly; the
parameter echo is complete enough to reproduce the run, and timing sits in
its own top-level field so everything else is byte-deterministic.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .classifier import ClassifierParams, FrameDecision, MotionKey, SequenceVerdict
from .errors import IoError
from .preprocess import PreprocessParams
from .registration import IcpParams


def key_to_dict(key: MotionKey) -> dict:
    return {"qbins": list(key.qbins), "tbins": list(key.tbins)}


def decision_to_dict(decision: FrameDecision) -> dict:
    return {
        "pair": list(decision.pair),
        "label": decision.label.value,
        "key_count": decision.key_count,
        "kept": decision.kept,
        "skipped": decision.skipped,
        "eligible": decision.eligible,
        "keys": [
            {**key_to_dict(key), "regions": len(cells)}
            for key, cells in decision.keys.items()
        ],
    }


def build_report(
    verdict: SequenceVerdict,
    classifier_params: ClassifierParams,
    icp_params: IcpParams,
    preprocess_params: PreprocessParams | None,
    source: str,
    stride: int | None,
    workers: int,
    elapsed_seconds: float | None = None,
) -> dict:
    report = {
        "verdict": verdict.label.value,
        "probabilities": verdict.probabilities,
        "no_reliable_pairs": verdict.no_reliable_pairs,
        "filtered": [label.value for label in verdict.filtered],
        "pairs": [decision_to_dict(d) for d in verdict.decisions],
        "params": {
            "source": source,
            "classifier": asdict(classifier_params),
            "icp": asdict(icp_params),
            "preprocess": asdict(preprocess_params) if preprocess_params is not None else None,
            "stride": stride,
            "workers": workers,
        },
    }
    if elapsed_seconds is not None:
        report["timing"] = {"seconds": elapsed_seconds}
    return report


def write_report(report: dict, path) -> None:
    try:
        Path(path).write_text(json.dumps(report, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
