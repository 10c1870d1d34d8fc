import csv
import json

from conftest import manifest

STAR = (0.28, 0.57, 0.15)


def test_robustness_star_point(cli):
    cli.run("appendix", "robustness", "--grid", "0.05", "--point", ",".join(map(str, STAR)), "-o", cli.tmp / "rob",
            "-q", check=0)
    rows = list(csv.DictReader((cli.tmp / "rob" / "robustness.csv").open()))
    assert len(rows) == 1
    row = rows[0]
    assert tuple(float(row[k]) for k in ("p0", "p1", "p2")) == STAR
    rep = manifest(cli.tmp / "rob")["results"]
    assert rep["grid_spacing"] == 0.05
    assert abs(rep["lambda"] - (-0.0037 / 1.5**0.5)) < 1e-12
    assert float(row["gamma_mle"]) < 0
    assert abs(float(row["delta_gamma"])) < 0.01
    assert float(row["fidelity"]) >= 0.95
