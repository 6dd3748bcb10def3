"""Report figures (written to files; never shown interactively)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import accuracies  # noqa: E402

DPI = 120
_SAVE_KW = {"dpi": DPI, "bbox_inches": "tight", "metadata": {"Software": None}}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_confusion(cm, path, title=None):
    """Row-normalized heat map with raw counts annotated."""
    counts = cm.counts
    rows = counts.sum(axis=1, keepdims=True)
    frac = np.divide(counts, rows, out=np.zeros(counts.shape), where=rows > 0)
    k = cm.n_classes
    size = max(4.0, 0.55 * k + 2)
    fig, ax = plt.subplots(figsize=(size, size * 0.9))
    im = ax.imshow(frac, cmap="Blues", vmin=0, vmax=1)
    for (i, j), c in np.ndenumerate(counts):
        ax.text(j, i, str(c), ha="center", va="center", fontsize=8,
                color="white" if frac[i, j] > 0.5 else "black")
    ax.set_xticks(range(k), cm.class_names, rotation=45, ha="right")
    ax.set_yticks(range(k), cm.class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    if title is None:
        title = f"mean per-class accuracy {100 * accuracies(cm).mean:.1f}%"
    ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    return _save(fig, path)


def plot_grid(report, path, param_name="lambda", log_x=True):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    x = np.asarray(report.params, dtype=float)
    ax.plot(x, report.scores, "o-", label="mean per-class")
    ax.plot(x, report.overall, "s--", label="overall")
    ax.axvline(x[report.best_index], color="0.6", lw=0.8)
    if log_x and np.all(x > 0):
        ax.set_xscale("log")
    ax.set_xlabel(param_name)
    ax.set_ylabel("held-out accuracy")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_pca_spectrum(model, path):
    """Relative discarded variance against the number of kept components."""
    ev = model.eigenvalues
    tail = np.maximum(ev.sum() - np.concatenate([[0.0], np.cumsum(ev)]), 0) / ev.sum()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ks = np.arange(tail.size)
    ax.semilogy(ks[tail > 0], tail[tail > 0])
    ax.axvline(model.k, color="0.6", lw=0.8)
    ax.set_xlabel("retained components")
    ax.set_ylabel("relative projection error")
    return _save(fig, path)
