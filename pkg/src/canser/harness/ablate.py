"""Variant grid: each switch of the model run through the same k-fold protocol."""

from dataclasses import replace

from .kfold import format_table, run_kfold

VARIANTS = (
    ("full", {}),
    ("no_stop_gradient", {"use_stop_gradient": False}),
    ("no_align_loss", {"use_align_loss": False}),
    ("no_sg_no_align", {"use_stop_gradient": False, "use_align_loss": False}),
    ("no_cross_attention", {"use_cross_attention": False}),
    ("equal_segmentation", {"segmentation": "equal"}),
)


def variant_experiment(experiment, name):
    changes = dict(VARIANTS)[name]
    return replace(experiment, model=replace(experiment.model, **changes))


class AblationReport:
    def __init__(self, rows):
        self.rows = rows  # list of (variant name, KFoldReport)

    def records(self):
        out = []
        for name, report in self.rows:
            (wa, wa_sd), (ua, ua_sd) = report.wa, report.ua
            out.append({"kind": "variant", "variant": name, "wa_mean": wa, "wa_std": wa_sd,
                        "ua_mean": ua, "ua_std": ua_sd, "folds": len(report.folds)})
        return out

    def table(self):
        rows = [("variant", "WA", "UA")]
        for rec in self.records():
            rows.append((
                rec["variant"],
                f"{rec['wa_mean']:.3f} ± {rec['wa_std']:.3f}",
                f"{rec['ua_mean']:.3f} ± {rec['ua_std']:.3f}",
            ))
        return format_table(rows)


def run_ablation(load, experiment, k=None, seed=0, variants=None, log_stream=None):
    """Run every variant with the same folds and seeds.

    ``load(model_config)`` returns the utterances for that config; it is
    called once per distinct preprocessing setting, so segmentation
    variants see their own features.
    """
    names = variants or [name for name, _ in VARIANTS]
    corpora = {}
    rows = []
    for name in names:
        exp = variant_experiment(experiment, name)
        key = tuple(sorted(exp.model.preprocessing_key().items()))
        if key not in corpora:
            corpora[key] = load(exp.model)
        rows.append((name, run_kfold(corpora[key], exp, k, seed, log_stream)))
    return AblationReport(rows)
