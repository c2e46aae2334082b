"""Tab-delimited evaluation report and its companion figures."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from udet.evaluation.errors import ErrorType  # noqa: E402
from udet.evaluation.metrics import format_pr_curve  # noqa: E402

ERROR_COLORS = {
    ErrorType.CORRECT: "#4c9a2a",
    ErrorType.LOCALIZATION: "#f2b134",
    ErrorType.SIMILAR: "#7fa7d9",
    ErrorType.OTHER: "#9b6fb0",
    ErrorType.BACKGROUND: "#d1495b",
}
# PNG metadata otherwise embeds the matplotlib version string.
_PNG_META = {"Software": None}


def class_name(names, c):
    return names[c] if names and c < len(names) else str(c)


def format_report(results, mAP, names=None, breakdown=None, iou_threshold=0.5, eleven_point=False):
    lines = [
        "[summary]",
        f"iou_threshold\t{iou_threshold:g}",
        f"ap_metric\t{'11-point' if eleven_point else 'all-point'}",
        f"mAP\t{mAP:.6f}",
        "",
        "[average_precision]",
        "class\tname\tgt\tdetections\tap",
    ]
    for c, r in results.items():
        lines.append(f"{c}\t{class_name(names, c)}\t{r.gt_count}\t{r.det_count}\t{r.ap:.6f}")
    if breakdown is not None:
        per_class, average = breakdown
        lines += ["", "[error_breakdown]", "class\tname\t" + "\t".join(t.value for t in ErrorType)]
        for c, pct in per_class.items():
            lines.append(f"{c}\t{class_name(names, c)}\t" + "\t".join(f"{pct[t]:.2f}" for t in ErrorType))
        lines.append("average\t-\t" + "\t".join(f"{average[t]:.2f}" for t in ErrorType))
    return "\n".join(lines) + "\n"


def write_pr_files(results, directory, names=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for c, r in results.items():
        path = directory / f"pr_{c}_{class_name(names, c)}.tsv"
        path.write_text(format_pr_curve(r.pr), encoding="utf-8")
        paths.append(path)
    return paths


def plot_pr_curves(results, path, names=None):
    fig, ax = plt.subplots(figsize=(5, 4))
    for c, r in results.items():
        if not r.pr:
            continue
        recall, precision = zip(*r.pr)
        ax.plot(recall, precision, drawstyle="steps-post", label=f"{class_name(names, c)} (AP {r.ap:.3f})")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    if ax.lines:
        ax.legend(loc="lower left", fontsize=8, frameon=False)
    else:
        ax.text(0.5, 0.5, "no detections", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def plot_error_breakdown(breakdown, path, names=None):
    per_class, average = breakdown
    rows = [(class_name(names, c), pct) for c, pct in per_class.items()] + [("average", average)]
    fig, ax = plt.subplots(figsize=(6, 0.5 * len(rows) + 1.2))
    for y, (label, pct) in enumerate(rows):
        left = 0.0
        for t in ErrorType:
            ax.barh(y, pct[t], left=left, color=ERROR_COLORS[t], label=t.value if y == 0 else None)
            left += pct[t]
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([label for label, _ in rows])
    ax.invert_yaxis()
    ax.set_xlim(0, 100)
    ax.set_xlabel("% of top-N detections")
    ax.legend(ncol=3, fontsize=7, loc="upper center", bbox_to_anchor=(0.5, -0.35), frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
