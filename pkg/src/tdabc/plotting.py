"""SVG barcodes and confusion-matrix heatmaps."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# stable ids and no timestamp, so the same figure gives the same bytes
plt.rcParams["svg.hashsalt"] = "tdabc"
_META = {"Date": None}


def barcode_svg(diagrams, path, title=None, max_eps=None, skip_zero_length=True):
    """Horizontal bar per interval, grouped by dimension; infinite bars run to
    max_eps and end in an arrow."""
    D = diagrams.diagrams if hasattr(diagrams, "diagrams") else diagrams
    if max_eps is None:
        max_eps = getattr(diagrams, "max_eps", None)
    bars = []
    for dim, Di in enumerate(D):
        for d in sorted(Di, key=lambda p: (p.birth, p.death)):
            if skip_zero_length and d.death == d.birth:
                continue
            bars.append((dim, d.birth, d.death))
    finite = [b[2] for b in bars if np.isfinite(b[2])] + [b[1] for b in bars]
    top = max_eps if max_eps is not None else (max(finite) if finite else 1.0)
    top = top if top > 0 else 1.0
    colors = plt.get_cmap("tab10")
    fig, ax = plt.subplots(figsize=(6, max(2.0, 0.08 * len(bars) + 1)))
    seen = set()
    for i, (dim, b, d) in enumerate(bars):
        end = d if np.isfinite(d) else top
        lab = f"H{dim}" if dim not in seen else None
        seen.add(dim)
        ax.plot([b, end], [i, i], color=colors(dim % 10), lw=1.5, label=lab)
        if not np.isfinite(d):
            ax.plot([end], [i], marker=">", color=colors(dim % 10), ms=4)
    ax.set_xlim(0, top * 1.05)
    ax.set_yticks([])
    ax.set_xlabel("filtration value")
    if bars:
        ax.legend(loc="lower right", fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def confusion_svg(M, labels, path, title=None):
    M = np.asarray(M)
    fig, ax = plt.subplots(figsize=(1.2 + 0.6 * len(labels), 1.0 + 0.6 * len(labels)))
    ax.imshow(M, cmap="Blues")
    ax.set_xticks(range(len(labels)))
    ax.set_yticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    hi = M.max() if M.size else 0
    for r in range(M.shape[0]):
        for c in range(M.shape[1]):
            ax.text(c, r, str(M[r, c]), ha="center", va="center", fontsize=7,
                    color="white" if hi and M[r, c] > hi / 2 else "black")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
