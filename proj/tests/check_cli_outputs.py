#!/usr/bin/env python3
"""Run the ptheta CLI, validate its JSON against schemas/ and spot-check values with mpmath."""

import csv
import io
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
import mpmath
from referencing import Registry, Resource

mpmath.mp.dps = 40


def registry(schema_dir):
    resources = []
    for p in schema_dir.glob("*.schema.json"):
        doc = json.loads(p.read_text())
        resources.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(resources)


def theta(q, x, dx=0, dq=0):
    q, x = mpmath.mpc(q), mpmath.mpc(x)
    total, peak, j = mpmath.mpc(0), mpmath.mpf(0), 0
    while True:
        e = j * (j + 1) // 2
        w = mpmath.ff(j, dx) * mpmath.ff(e, dq)
        t = w * q ** (e - dq) * x ** (j - dx) if w != 0 else mpmath.mpc(0)
        total += t
        peak = max(peak, abs(t))
        if j > dx + 8 and abs(t) < peak * mpmath.mpf(10) ** -45:
            return total
        j += 1


class Checker:
    def __init__(self, exe, schema_dir):
        self.exe = exe
        self.schema_dir = schema_dir
        self.registry = registry(schema_dir)
        self.failures = 0

    def fail(self, msg):
        print("FAIL", msg)
        self.failures += 1

    def run(self, args, expect_code=0):
        p = subprocess.run([self.exe, *args], capture_output=True, text=True)
        if p.returncode != expect_code:
            self.fail(f"{args}: exit {p.returncode}, expected {expect_code}; stderr: {p.stderr.strip()}")
        return p.stdout

    def validate(self, name, args, expect_code=0):
        out = self.run(args, expect_code)
        try:
            doc = json.loads(out)
        except json.JSONDecodeError as e:
            self.fail(f"{args}: not JSON ({e})")
            return None
        schema = json.loads((self.schema_dir / f"{name}.schema.json").read_text())
        validator = jsonschema.Draft202012Validator(schema, registry=self.registry)
        errors = list(validator.iter_errors(doc))
        for err in errors:
            self.fail(f"{args}: {err.message} at {list(err.absolute_path)}")
        if not errors:
            print("ok  ", " ".join(args))
        return doc


def main():
    exe, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    c = Checker(exe, schema_dir)

    cases = [((0.5, 0.0), (1.0, 0.0), 0, 0), ((0.3, 0.4), (-2.0, 1.0), 1, 0),
             ((-0.7, 0.0), (-30.0, 0.0), 0, 1), ((0.85, 0.0), (5.0, -3.0), 2, 0),
             ((0.2, -0.6), (0.0, 7.5), 0, 0)]
    for (qr, qi), (xr, xi), dx, dq in cases:
        args = ["eval", "--q", repr(qr), "--q-im", repr(qi), "--x", repr(xr), "--x-im", repr(xi),
                "--dx", str(dx), "--dq", str(dq), "--tol", "1e-14"]
        doc = c.validate("eval", args)
        if doc is None:
            continue
        ref = theta(mpmath.mpc(qr, qi), mpmath.mpc(xr, xi), dx, dq)
        got = mpmath.mpc(doc["value"]["re"], doc["value"]["im"])
        err = abs(got - ref)
        if err > doc["error_bound"]:
            c.fail(f"{args}: |value - mpmath| = {mpmath.nstr(err, 5)} exceeds error_bound {doc['error_bound']}")

    doc = c.validate("zeros", ["zeros", "--q", "0.31", "--radius-exp", "8"])
    if doc:
        for z in doc["zeros"]:
            r = abs(theta(0.31, mpmath.mpc(z["re"], z["im"])))
            scale = abs(theta(0.31, abs(mpmath.mpc(z["re"], z["im"]))))
            if r > 1e-12 * scale:
                c.fail(f"zeros q=0.31: |theta| at {z['re']}+{z['im']}i is {mpmath.nstr(r, 5)}")
        if doc.get("complex_pair_count") != 1:
            c.fail("zeros q=0.31: expected one complex pair")
    c.validate("zeros", ["zeros", "--q", "0.3", "--q-im", "0.35", "--radius-exp", "5"])

    with tempfile.TemporaryDirectory() as tmp:
        cache = str(pathlib.Path(tmp) / "spectrum.json")
        doc = c.validate("spectrum", ["spectrum", "--j-max", "1", "--cache", cache])
        if doc:
            e = doc["entries"][0]
            q, x = mpmath.mpf(e["q"]), mpmath.mpf(e["x"])
            if abs(theta(q, x)) > 1e-10 or abs(theta(q, x, 1, 0)) > 1e-10:
                c.fail("spectrum: entry is not a double zero at mpmath precision")
            if abs(e["q"] - 0.3092493386) > 5e-10:
                c.fail(f"spectrum: q1 = {e['q']}")
        doc = c.validate("spectrum", ["spectrum", "--j-max", "1", "--cache", cache])
        if doc and doc["provenance"] != "cached":
            c.fail("spectrum: second run not served from cache")

    for q in ("0.4", "-0.5"):
        c.validate("verify", ["verify", "--q", q])
    c.validate("verify", ["verify", "--q", "0.2", "--q-im", "0.5"])

    c.validate("sweep", ["sweep", "--q-from", "-0.6", "--q-to", "-0.2", "--steps", "5",
                         "--report", "alternation", "--format", "json"])
    c.validate("sweep", ["sweep", "--q-from", "0.2", "--q-to", "0.4", "--steps", "5",
                         "--report", "pairs", "--format", "json"])

    out = c.run(["sweep", "--q-from", "-0.6", "--q-to", "-0.2", "--steps", "5", "--report", "alternation"])
    rows = list(csv.DictReader(io.StringIO(out)))
    expected = ["q", "real_zeros", "alternation_ok", "modulus_order_alternates", "monotone_from",
                "complex_pair_count", "r_has_no_real_roots"]
    if not rows or list(rows[0].keys()) != expected:
        c.fail(f"sweep csv header: {out.splitlines()[:1]}")
    elif any(r["alternation_ok"] != "true" for r in rows):
        c.fail("sweep csv: alternation_ok false in [-0.6, -0.2]")
    else:
        print("ok   sweep csv")

    print(f"{c.failures} failure(s)")
    return 1 if c.failures else 0


if __name__ == "__main__":
    sys.exit(main())
