"""Delimited output and matplotlib figures for benchmark results."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Sequence

SPACE_C = 64


def space_formula(eps_m: int, n: int, c: int = SPACE_C) -> float:
    """c/eps * log(eps n) * (log(1/eps) + log log n) * log(1/eps), logs base 2, floored at 1."""
    inv = 1 << eps_m
    log_en = max(1.0, math.log2(max(n / inv, 2)))
    loglog = math.log2(max(math.log2(max(n, 2)), 2))
    return c * inv * log_en * (eps_m + loglog) * max(eps_m, 1)


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def rows_to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


ERROR_FIELDS = ("gen", "eps", "query_rank", "true_rank", "mean_rel_err", "rms_rel_err",
                "p90_rel_err", "frac_over_eps", "peak_space")
SPACE_FIELDS = ("gen", "eps", "n", "peak_space", "mean_space", "bound", "pass")


def error_rows(results) -> list:
    rows = []
    for res in results:
        for q in res["report"]["queries"]:
            rows.append((res["gen"], res["eps"], q["query_rank"], q["true_rank"],
                         f"{q['mean_rel_err']:.6g}", f"{q['rms_rel_err']:.6g}",
                         f"{q['p90_rel_err']:.6g}", f"{q['frac_over_eps']:.6g}",
                         q["peak_space"]))
    return rows


def space_rows(results) -> list:
    return [(r["gen"], r["eps"], r["n"], r["report"]["peak_space"],
             f"{r['report']['mean_space']:.6g}", f"{r['bound']:.6g}",
             "pass" if r["report"]["peak_space"] <= r["bound"] else "fail") for r in results]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_errors(results, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for res in results:
        qs = res["report"]["queries"]
        ranks = [max(q["true_rank"], 1) for q in qs]
        ax.plot(ranks, [q["rms_rel_err"] for q in qs], marker="o", ms=3,
                label=f"{res['gen']} eps={res['eps']}")
    for eps in sorted({res["eps"] for res in results}):
        m = int(eps.split("/")[1])
        ax.axhline(2 / m, ls="--", lw=0.8, color="grey")
    ax.set_xscale("log")
    ax.set_xlabel("true rank")
    ax.set_ylabel("RMS relative error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_space(results, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = [f"{r['gen']}\n{r['eps']}" for r in results]
    xs = range(len(results))
    ax.bar(xs, [r["report"]["peak_space"] for r in results], label="peak stored")
    ax.scatter(xs, [r["bound"] for r in results], color="black", marker="_", s=200,
               label=f"bound, C={SPACE_C}")
    ax.set_yscale("log")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("stored keys")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def write_bench(out_dir: Path, results, fmt: str = "json", plots: bool = True) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        doc = {"runs": [{k: v for k, v in r.items()} for r in results]}
        (out_dir / "bench.json").write_text(dumps_json(doc))
        written.append(out_dir / "bench.json")
    else:
        (out_dir / "errors.csv").write_text(rows_to_csv(ERROR_FIELDS, error_rows(results)))
        (out_dir / "space.csv").write_text(rows_to_csv(SPACE_FIELDS, space_rows(results)))
        written += [out_dir / "errors.csv", out_dir / "space.csv"]
    if plots:
        plot_errors(results, out_dir / "error_vs_rank.png")
        plot_space(results, out_dir / "space.png")
        written += [out_dir / "error_vs_rank.png", out_dir / "space.png"]
    return written
