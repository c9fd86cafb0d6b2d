"""
Talking to a model in another process
=====================================

Any executable that answers newline-delimited JSON on stdio can serve as
the model. This demo writes a tiny server to a temp file, launches it via
the exec: model spec, and queries it like any built-in.

    request  {"id": 1, "x": [0.1, 0.2]}      reply {"id": 1, "f": 0.97}
    request  {"id": 2, "X": [[..], [..]]}    reply {"id": 2, "F": [..]}
"""

import sys
import tempfile
import textwrap
from pathlib import Path

import numpy as np

from lcattr import parse_model_spec

SERVER = textwrap.dedent("""
    import json, math, sys

    def f(x):
        r2 = sum(v * v for v in x)
        return (1.0 - 0.5 * r2) * math.exp(-0.5 * r2)

    for line in sys.stdin:
        req = json.loads(line)
        if "X" in req:
            out = {"id": req["id"], "F": [f(row) for row in req["X"]]}
        else:
            out = {"id": req["id"], "f": f(req["x"])}
        print(json.dumps(out), flush=True)
""")

path = Path(tempfile.mkdtemp()) / "server.py"
path.write_text(SERVER, encoding="utf-8")

with parse_model_spec(f"exec:{sys.executable} {path}") as model:
    print("single queries:")
    for x in ([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]):
        print(f"  f({x[0]:+.1f}, {x[1]:+.1f}) = {model.query(x):+.6f}")

    X = np.column_stack([np.linspace(0.0, 2.0, 5), np.zeros(5)])
    print()
    print("one batch request:")
    print(" ", np.round(model.query_batch(X), 6))

    # repeated queries are served from the reply cache, so a slow or
    # noisy server is only paid for once per distinct point
    again = model.query([1.0, 0.0])
    print()
    print(f"cached repeat f(1, 0) = {again:+.6f}")
