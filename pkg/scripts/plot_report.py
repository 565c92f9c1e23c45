#!/usr/bin/env python3
"""Optional plotting of convergence CSVs (requires matplotlib)."""
import argparse
import csv


def load(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            rows.append(line.strip())
    reader = csv.DictReader(rows)
    return [{k: (float(v) if v else None) for k, v in row.items()}
            for row in reader]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--out", default="convergence.png")
    args = ap.parse_args()

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_err, ax_cond) = plt.subplots(1, 2, figsize=(10, 4))
    for path in args.csv:
        rows = load(path)
        N = [r["N"] for r in rows]
        for key, style in (("e_surf_L2", "o-"), ("e_surf_H1", "s--"),
                           ("e_bulk_L2", "^:")):
            ax_err.loglog(N, [r[key] for r in rows], style,
                          label=f"{path}:{key}")
        ax_cond.semilogx(N, [r["cond"] for r in rows], "o-", label=path)
    ref_n = [rows[0]["N"], rows[-1]["N"]]
    scale = rows[0]["e_surf_L2"]
    ax_err.loglog(ref_n, [scale, scale * (ref_n[0] / ref_n[1]) ** 2], "k--",
                  alpha=0.4, label="order 2")
    ax_err.set_xlabel("N")
    ax_err.set_ylabel("error")
    ax_err.legend(fontsize=7)
    ax_cond.set_xlabel("N")
    ax_cond.set_ylabel("cond")
    ax_cond.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
