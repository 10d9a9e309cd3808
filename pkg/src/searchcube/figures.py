"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .context_summary import ContextBucket
from .cube_builder import StarSchema
from .dataguide import GuideSet


def save_bucket_figures(buckets: list[ContextBucket], out_dir: str | Path) -> list[Path]:
    """One horizontal bar chart per term: path document frequencies."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for bucket in buckets:
        if not bucket.entries:
            continue
        labels = [str(e.path) for e in bucket.entries]
        freqs = [e.doc_frequency for e in bucket.entries]
        fig, ax = plt.subplots(figsize=(8, 0.5 * len(labels) + 1.5))
        ax.barh(range(len(labels)), freqs, color="#4878a8")
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlabel("documents containing path")
        ax.set_title(f"context bucket for term {bucket.term_index}")
        fig.tight_layout()
        target = root / f"contexts_term{bucket.term_index}.png"
        fig.savefig(target, dpi=110)
        plt.close(fig)
        written.append(target)
    return written


def save_guide_stats_figure(guides: GuideSet, out_path: str | Path) -> Path:
    """Documents and leaf paths per guide."""
    target = Path(out_path)
    target.parent.mkdir(parents=True, exist_ok=True)
    stats = guides.stats()["per_guide"]
    ids = [g["id"] for g in stats]
    docs = [g["documents"] for g in stats]
    paths = [g["leaf_paths"] for g in stats]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(ids) + 2), 4))
    width = 0.4
    xs = range(len(ids))
    ax.bar([x - width / 2 for x in xs], docs, width=width, label="documents")
    ax.bar([x + width / 2 for x in xs], paths, width=width, label="leaf paths")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(i) for i in ids])
    ax.set_xlabel("guide")
    ax.set_title(f"dataguides (threshold {guides.threshold})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=110)
    plt.close(fig)
    return target


def save_star_figure(star: StarSchema, out_path: str | Path) -> Path:
    """Row counts per emitted fact/dimension table."""
    target = Path(out_path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tables = star.fact_tables + star.dimension_tables
    names = [t.file_name.rsplit(".", 1)[0] for t in tables]
    counts = [len(t.rows) for t in tables]
    colors = ["#a84848" if t.kind == "fact" else "#4878a8" for t in tables]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 4))
    ax.bar(range(len(names)), counts, color=colors)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("rows")
    ax.set_title("star schema tables")
    fig.tight_layout()
    fig.savefig(target, dpi=110)
    plt.close(fig)
    return target
