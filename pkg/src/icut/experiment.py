"""Seeded end-to-end experiment runs, ablation sweeps, and report files.

One run = for each seed: obtain data, corrupt labels, represent, select
a subset, train the downstream model on it, evaluate on the test split.
Reports come out as a full-precision CSV plus an aligned text table with
rounded percentages; both are byte-identical across reruns.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import io
from .baselines import entropy_select, forget_select, herding_select, random_select
from .core import (METHODS, REPRESENTATION_KINDS, LabeledDataset, Metrics,
                   SelectionResult, subset_accuracy, summarize_runs)
from .cutstats import CutstatsConfig, cutstats_scores, select_smallest
from .datagen import NoiseSpec, SyntheticSpec, generate_synthetic, inject_label_noise
from .knn import build_neighbor_table
from .mlp import MlpConfig, entropy_scores, evaluate, forgetting_counts, train_mlp
from .representation import (compute_representation, load_external_representation,
                             perturb_representation)

ABLATION_KINDS = ("invariance_error", "dimension_sweep", "k_sweep", "tau_sweep")

METRIC_FIELDS = ("subset_accuracy", "classifier_accuracy", "balanced_error",
                 "alpha_hat", "gamma_hat", "nonabstain_rate")


class StageError(RuntimeError):
    """An experiment stage failed; carries the stage name for reporting."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


def _staged(stage: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one end-to-end run needs; exactly one data source."""

    synthetic: Optional[SyntheticSpec] = None
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    noise: NoiseSpec = NoiseSpec(flip_probability=0.45)
    representation_kind: str = "l2norm"
    embedding_path: Optional[str] = None
    method: str = "cutstats"
    cutstats: CutstatsConfig = CutstatsConfig()
    mlp: MlpConfig = MlpConfig()
    seeds: Tuple[int, ...] = (0, 1, 2)
    output_dir: str = "."
    train_downstream: bool = True
    invariance_target: Optional[float] = None   # perturb l2norm rep to this error

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if (self.synthetic is None) == (self.train_path is None):
            raise ValueError("exactly one of synthetic spec and train_path is required")
        if self.representation_kind not in REPRESENTATION_KINDS:
            raise ValueError(f"unknown representation kind {self.representation_kind!r}")
        if self.representation_kind == "external" and self.embedding_path is None:
            raise ValueError("external representation requires an embedding path")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if len(self.seeds) == 0:
            raise ValueError("seeds must be non-empty")


def _obtain_data(config: ExperimentConfig, seed: int):
    if config.synthetic is not None:
        spec = replace(config.synthetic, seed=seed)
        return _staged("generate", generate_synthetic, spec)
    train = _staged("load", io.read_dataset_csv, config.train_path)
    test = _staged("load", io.read_dataset_csv, config.test_path) if config.test_path else None
    return train, test


def _select(config: ExperimentConfig, seed: int, noisy: LabeledDataset):
    """Run the configured selector; returns (selection, realized_error)."""
    tau = config.cutstats.tau
    realized = None
    if config.method == "full":
        return SelectionResult(scores=np.zeros(noisy.n), selected=noisy.ids.copy(),
                               method="full", representation_kind=config.representation_kind,
                               tau=1.0), realized
    if config.method == "random":
        return random_select(noisy, tau, seed=seed), realized
    if config.method in ("entropy", "forget"):
        scorer = _staged("train", train_mlp, noisy,
                         replace(config.mlp, num_classes=noisy.num_classes, seed=seed))
        if config.method == "entropy":
            return entropy_select(noisy, entropy_scores(scorer, noisy), tau), realized
        return forget_select(noisy, forgetting_counts(scorer.trace), tau), realized

    # representation-based selectors
    if config.representation_kind == "external":
        rep = _staged("represent", load_external_representation, noisy, config.embedding_path)
    else:
        rep = _staged("represent", compute_representation, noisy, config.representation_kind)
    if config.invariance_target is not None:
        group = config.synthetic.group if config.synthetic is not None else "orthogonal"
        rep, realized = _staged("represent", perturb_representation, rep,
                                config.invariance_target, group=group, seed=seed)
    if config.method == "herding":
        return herding_select(rep, tau), realized
    table = _staged("select", build_neighbor_table, rep, config.cutstats.k)
    scores = _staged("select", cutstats_scores, rep, table, config.cutstats)
    return select_smallest(scores, tau, noisy.ids,
                           representation_kind=rep.kind, k=config.cutstats.k), realized


def run_seed(config: ExperimentConfig, seed: int) -> Tuple[Metrics, dict]:
    """One deterministic pipeline pass; extras carry the realized knob values."""
    train, test = _obtain_data(config, seed)
    if config.noise.flip_probability > 0.0:
        noisy = _staged("corrupt", inject_label_noise, train,
                        replace(config.noise, seed=seed))
    else:
        noisy = train
    selection, realized = _select(config, seed, noisy)
    metrics = Metrics(nonabstain_rate=selection.selected.size / noisy.n)
    if noisy.true_labels is not None:
        metrics = metrics.with_values(
            subset_accuracy=_staged("select", subset_accuracy, selection, noisy))
        sub = noisy.restrict(selection.selected)
        if noisy.num_classes == 2:
            ones = sub.noisy_labels == 1
            zeros = ~ones
            metrics = metrics.with_values(
                alpha_hat=float(np.mean(sub.true_labels[ones] == 0)) if ones.any() else 0.0,
                gamma_hat=float(np.mean(sub.true_labels[zeros] == 1)) if zeros.any() else 0.0)
        else:
            metrics = metrics.with_values(alpha_hat=1.0 - metrics.subset_accuracy,
                                          gamma_hat=1.0 - metrics.subset_accuracy)
    if test is not None and config.train_downstream:
        sub = noisy.restrict(selection.selected)
        model = _staged("train", train_mlp, sub,
                        replace(config.mlp, num_classes=noisy.num_classes, seed=seed))
        scored = _staged("evaluate", evaluate, model, test)
        metrics = metrics.with_values(classifier_accuracy=scored.classifier_accuracy,
                                      balanced_error=scored.balanced_error)
    return metrics, {"realized_error": realized}


def _fmt_pct(v: float) -> str:
    return f"{100.0 * v:.2f}"


def _emit(output_dir: str, stem: str, header, csv_rows, txt_rows) -> Tuple[str, str]:
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, stem + ".csv")
    txt_path = os.path.join(output_dir, stem + ".txt")
    try:
        io.write_csv(csv_path, header, csv_rows)
        io.write_text_table(txt_path, header, txt_rows)
    except BaseException:
        for p in (csv_path, txt_path):
            if os.path.exists(p):
                os.unlink(p)
        raise
    return csv_path, txt_path


def run_experiment(config: ExperimentConfig) -> dict:
    """All seeds, then one report pair (CSV fractions, text percentages)."""
    per_seed = [(seed, run_seed(config, seed)[0]) for seed in sorted(config.seeds)]
    metrics = [m for _, m in per_seed]
    summary = summarize_runs(metrics)
    header = ["seed"] + list(METRIC_FIELDS)
    csv_rows = [[str(seed)] + [io.format_float(getattr(m, f)) for f in METRIC_FIELDS]
                for seed, m in per_seed]
    for stat, col in (("mean", 0), ("std", 1)):
        csv_rows.append([stat] + [io.format_float(summary[f][col]) for f in METRIC_FIELDS])
    txt_rows = [[str(seed)] + [_fmt_pct(getattr(m, f)) for f in METRIC_FIELDS]
                for seed, m in per_seed]
    txt_rows.append(["mean±std"] + [f"{_fmt_pct(summary[f][0])}±{_fmt_pct(summary[f][1])}"
                                    for f in METRIC_FIELDS])
    csv_path, txt_path = _staged("report", _emit, config.output_dir, "report",
                                 header, csv_rows, txt_rows)
    return {"metrics": metrics, "summary": summary,
            "csv_path": csv_path, "txt_path": txt_path}


def run_bounds(params, d_range: Sequence[int], output_dir: str = ".") -> dict:
    """Feasibility window over d, written as the bounds CSV."""
    from .theory import feasibility_window

    report = feasibility_window(params, d_range)
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "bounds.csv")
    try:
        io.write_bounds_csv(report, path)
    except BaseException:
        if os.path.exists(path):
            os.unlink(path)
        raise
    return {"report": report, "csv_path": path}


def _ablation_config(config: ExperimentConfig, kind: str, point) -> ExperimentConfig:
    if kind == "invariance_error":
        return replace(config, invariance_target=float(point))
    if kind == "dimension_sweep":
        if config.synthetic is None:
            raise ValueError("dimension sweep requires a synthetic source")
        return replace(config, synthetic=replace(config.synthetic, d=int(point)))
    if kind == "k_sweep":
        return replace(config, cutstats=replace(config.cutstats, k=int(point)))
    if kind == "tau_sweep":
        return replace(config, cutstats=replace(config.cutstats, tau=float(point)))
    raise ValueError(f"unknown ablation kind {kind!r}")


def run_ablation(kind: str, config: ExperimentConfig, grid: Sequence) -> dict:
    """One pipeline run per grid point; a row per point with realized knobs."""
    if kind not in ABLATION_KINDS:
        raise ValueError(f"unknown ablation kind {kind!r}")
    if len(grid) == 0:
        raise ValueError("empty ablation grid")
    header = [kind, "realized", "subset_acc_mean", "subset_acc_std",
              "classifier_acc_mean", "classifier_acc_std"]
    csv_rows, txt_rows, points = [], [], []
    for point in grid:
        cfg = _ablation_config(config, kind, point)
        runs = [run_seed(cfg, seed) for seed in sorted(cfg.seeds)]
        summary = summarize_runs([m for m, _ in runs])
        realized = [x["realized_error"] for _, x in runs]
        realized_mean = (float(np.mean([r for r in realized if r is not None]))
                         if any(r is not None for r in realized) else float(point))
        row = (float(point), realized_mean, summary["subset_accuracy"],
               summary["classifier_accuracy"])
        points.append(row)
        csv_rows.append([io.format_float(point), io.format_float(realized_mean),
                         io.format_float(summary["subset_accuracy"][0]),
                         io.format_float(summary["subset_accuracy"][1]),
                         io.format_float(summary["classifier_accuracy"][0]),
                         io.format_float(summary["classifier_accuracy"][1])])
        txt_rows.append([io.format_float(point), f"{realized_mean:.4f}",
                         _fmt_pct(summary["subset_accuracy"][0]),
                         _fmt_pct(summary["subset_accuracy"][1]),
                         _fmt_pct(summary["classifier_accuracy"][0]),
                         _fmt_pct(summary["classifier_accuracy"][1])])
    csv_path, txt_path = _staged("report", _emit, config.output_dir,
                                 f"ablation_{kind}", header, csv_rows, txt_rows)
    return {"rows": points, "csv_path": csv_path, "txt_path": txt_path}
