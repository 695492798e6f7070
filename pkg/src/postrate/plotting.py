"""SVG rate plots: log-log posterior radius against n with the fitted line and the predicted exponent."""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed element ids and no timestamp keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "postrate"
matplotlib.rcParams["svg.fonttype"] = "none"


def rate_plot(curve, path):
    """Write one log-log radius plot for a curve record (dict or RateCurve)."""
    rec = curve if isinstance(curve, dict) else curve.to_record()
    n = np.asarray(rec["n_grid"], dtype=float)
    q = np.asarray(rec["q_radius"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(n, q, "o", color="k", label="median 0.9-quantile radius")
    if math.isfinite(rec["slope"]) and np.all(q > 0):
        intercept = float(np.mean(np.log(q) - rec["slope"] * np.log(n)))
        ax.loglog(n, np.exp(intercept) * n ** rec["slope"], "-", color="C0",
                  label=f"fit: slope {rec['slope']:.3f}")
        anchor = float(np.mean(np.log(q) - rec["predicted"] * np.log(n)))
        ax.loglog(n, np.exp(anchor) * n ** rec["predicted"], "--", color="C3",
                  label=f"predicted: {rec['predicted']:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("posterior radius")
    ax.set_title(rec["family"])
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
