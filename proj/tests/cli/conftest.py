import json
import os
import subprocess
from pathlib import Path

import pytest


def _cli():
    path = os.environ.get("TOFTOMO_CLI")
    if not path:
        pytest.skip("TOFTOMO_CLI is not set")
    return path


class Cli:
    def __init__(self, exe, tmp):
        self.exe = exe
        self.tmp = Path(tmp)

    def run(self, *args, env=None, check=None):
        e = dict(os.environ)
        e.pop("TOMO_SEED", None)
        if env:
            e.update(env)
        p = subprocess.run([self.exe, *map(str, args)], capture_output=True, text=True, env=e)
        if check is not None:
            assert p.returncode == check, f"exit {p.returncode}\nstdout:{p.stdout}\nstderr:{p.stderr}"
        return p

    def config(self, name, doc):
        path = self.tmp / name
        path.write_text(json.dumps(doc))
        return path


@pytest.fixture
def cli(tmp_path):
    return Cli(_cli(), tmp_path)


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


def read_quadrature(path):
    rows = Path(path).read_text().strip().splitlines()
    assert rows[0] == "theta_rad,u,weight"
    return [tuple(float(x) for x in r.split(",")) for r in rows[1:]]


NOISELESS = {
    "noise": {"enabled": False},
    "processing": {"blur": False, "subtract_background": False, "deconvolve": False},
    "trap": {"n_max": 12},
}
