"""Smoke test for the citewindow extension module.

Builds the release cdylib, stages it as an importable module in a temp
directory and exercises the main entry points.
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "citewindow-py"], cwd=ROOT, check=True
    )
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "release"
    lib = next(p for p in (target / "libcitewindow.so", target / "libcitewindow.dylib") if p.exists())
    stage = Path(tempfile.mkdtemp(prefix="citewindow_py_"))
    shutil.copy(lib, stage / "citewindow.so")
    sys.path.insert(0, str(stage))
    import citewindow

    return citewindow, stage


def main():
    cw, stage = load()

    ranks = cw.rank_with_ties([5, 1, 5, 3])
    assert ranks == [3.5, 1.0, 3.5, 2.0], ranks
    assert cw.hazen_percentile(1.0, 4) == 12.5
    pct = cw.percentiles([0] * 7 + [1, 2, 3])
    assert abs(sum(pct) / len(pct) - 50.0) < 1e-12

    assert abs(cw.adjusted_r2(0.25, 100, 5) - 0.2101063829787234) < 1e-15
    x = [float(i) for i in range(20)]
    fit = cw.fit_ols([x], [2.0 + 3.0 * v for v in x], names=["x"])
    assert abs(fit["coefficients"]["x"]["estimate"] - 3.0) < 1e-10
    assert abs(fit["intercept"]["estimate"] - 2.0) < 1e-10

    winner, bics = cw.select_functional_form(
        [float(i) for i in range(1, 200)], [math.log(i) for i in range(1, 200)]
    )
    assert winner == "log", (winner, bics)

    corpus, jif = cw.generate_synthetic(seed=3, n_papers=5000, n_journals=50, n_categories=5)
    assert len(corpus) == 5000
    assert len(jif) > 0
    table = corpus.percentile_table(list(range(1, 32)))
    pid = table.paper_ids()[0]
    assert 0.0 < table.get(pid, 1) < 100.0
    col = table.column(31)
    assert len(col) == len(table)

    fits = cw.model_sweep(corpus, table, jif, [1, 2, 20])
    assert len(fits) == 15
    m1 = {f["year"]: f["adj_r2"] for f in fits if f["model"] == 1}
    assert m1[1] < m1[2] < m1[20], m1

    path = stage / "papers.jsonl"
    corpus.write_jsonl(str(path))
    again, report = cw.Corpus.from_path(str(path))
    assert report["accepted"] == 5000 and not report["malformed"]
    assert again.paper_ids() == corpus.paper_ids()

    try:
        cw.hazen_percentile(0.0, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("rank 0 should be rejected")

    shutil.rmtree(stage, ignore_errors=True)
    print("python smoke test ok")


if __name__ == "__main__":
    main()
