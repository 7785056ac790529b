"""Command-line interface: instance I/O, random campaigns, and reports.

Subcommands: height, isotropic, maxiso, witt, orthobasis, cd, verify.
Reports are byte-deterministic for a fixed seed and config (the timestamp
field is masked).  Exit codes: 0 all verified, 2 any violated, 3 any
inconclusive (none violated), 4 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from . import certify
from .heights import height_form_poly, height_gram, height_subspace
from .linalg import MatrixA, Subspace, VectorA
from .quadspace import (
    AsymmetricGram,
    QuadraticSpace,
    isotropic_in_space,
    max_isotropic,
    orthogonal_basis,
    witt_decompose,
)
from .reduction import small_basis
from .tower import (
    QQ,
    DegreeCapExceeded,
    TowerContext,
    adjoin_sqrt,
    parse_element,
)

__all__ = [
    "InstanceSpec",
    "parse_instance",
    "random_instance",
    "run_campaign",
    "main",
    "SchemaError",
    "BadTowerExpr",
]

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_INCONCLUSIVE = 3
EXIT_INPUT = 4

DEFAULT_TRIALS = 8
DEFAULT_PREC_START = 128
DEFAULT_PREC_MAX = 4096
DEFAULT_DEGREE_CAP = 64
DEFAULT_BOUND = 10


class SchemaError(ValueError):
    pass


class BadTowerExpr(ValueError):
    pass


@dataclass
class InstanceSpec:
    N: int
    ctx: TowerContext
    gram: MatrixA
    Z: Subspace
    isometry: Optional[MatrixA] = None
    seed: int = 0
    instance_id: str = "input"

    def space(self) -> QuadraticSpace:
        return QuadraticSpace(self.gram, self.Z)


def parse_instance(data) -> InstanceSpec:
    """Validates a JSON instance: {"N": int, "tower": [{"name","square"}],
    "form": [[entry,...],...], "subspace": "full" | [[entry,...],...],
    "isometry": optional matrix, "seed": optional int}."""
    if isinstance(data, (bytes, str)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise SchemaError("instance must be a JSON object")
    try:
        n = int(data["N"])
    except (KeyError, TypeError, ValueError):
        raise SchemaError("missing or non-integer field 'N'") from None
    if n < 1:
        raise SchemaError("'N' must be positive")
    ctx = QQ
    for entry in data.get("tower", []):
        if not isinstance(entry, dict) or "square" not in entry:
            raise SchemaError("tower entries need a 'square' field")
        try:
            sq = parse_element(ctx, str(entry["square"]))
            ctx, _ = adjoin_sqrt(ctx, sq)
        except DegreeCapExceeded:
            raise
        except Exception as e:
            raise BadTowerExpr(f"bad tower square {entry['square']!r}: {e}") from None
    form = data.get("form")
    if not isinstance(form, list) or len(form) != n:
        raise SchemaError("'form' must be an NxN matrix")
    rows = []
    for i, row in enumerate(form):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"'form' row {i} has wrong length")
        rows.append([_parse_entry(ctx, e) for e in row])
    gram = MatrixA(rows)
    if not gram.is_symmetric():
        raise AsymmetricGram("Gram matrix must be symmetric")
    sub = data.get("subspace", "full")
    if sub == "full":
        Z = Subspace.full(n, ctx)
    else:
        if not isinstance(sub, list) or not sub:
            raise SchemaError("'subspace' must be \"full\" or a list of rows")
        vecs = []
        for row in sub:
            if not isinstance(row, list) or len(row) != n:
                raise SchemaError("subspace rows must have length N")
            vecs.append(VectorA([_parse_entry(ctx, e) for e in row]))
        Z = Subspace.from_spanning(vecs, n)
        if Z.dim == 0:
            raise SchemaError("subspace basis spans the zero space")
    isom = None
    if data.get("isometry") is not None:
        irows = data["isometry"]
        if not isinstance(irows, list) or len(irows) != n:
            raise SchemaError("'isometry' must be an NxN matrix")
        isom = MatrixA([[_parse_entry(ctx, e) for e in r] for r in irows])
    return InstanceSpec(
        N=n,
        ctx=ctx,
        gram=gram,
        Z=Z,
        isometry=isom,
        seed=int(data.get("seed", 0)),
    )


def _parse_entry(ctx, e):
    try:
        return parse_element(ctx, str(e))
    except Exception as err:
        raise BadTowerExpr(f"bad entry {e!r}: {err}") from None


def random_instance(
    n: int,
    dim: Optional[int],
    seed: int,
    bound: int = DEFAULT_BOUND,
    instance_id: str = "",
) -> InstanceSpec:
    """A random regular rational instance: symmetric Gram with entries
    bounded by `bound`, random integer subspace of dimension `dim`
    (default: 2..n), resampled until regular."""
    rng = random.Random(seed)
    while True:
        e = [
            [Fraction(rng.randint(-bound, bound), rng.randint(1, 3)) for _ in range(n)]
            for _ in range(n)
        ]
        for i in range(n):
            for j in range(i):
                e[i][j] = e[j][i]
        gram = MatrixA(e)
        L = dim if dim is not None else rng.randint(2, n)
        if L == n:
            Z = Subspace.full(n)
        else:
            Z = Subspace.from_spanning(
                [[rng.randint(-4, 4) for _ in range(n)] for _ in range(L)], n
            )
            if Z.dim != L:
                continue
        Q = QuadraticSpace(gram, Z)
        if Q.regular:
            return InstanceSpec(
                N=n,
                ctx=QQ,
                gram=gram,
                Z=Z,
                seed=seed,
                instance_id=instance_id or f"seed{seed}",
            )


def _run_one(command: str, inst: InstanceSpec, args) -> dict:
    Q = inst.space()
    certs: List = []
    summary: dict = {}
    if command == "height":
        summary = {
            "curly_H_F": height_gram(inst.gram).to_json(),
            "H_F_poly": height_form_poly(inst.gram).to_json(),
            "H_Z": height_subspace(inst.Z).to_json(),
        }
    elif command == "isotropic":
        y, cert = isotropic_in_space(Q)
        certs.append(cert)
        summary = {"vector": [str(e) for e in y]}
    elif command == "maxiso":
        res = max_isotropic(Q)
        certs.extend(res.certificates)
        summary = {
            "dimension": res.subspace.dim,
            "basis": [[str(e) for e in v] for v in res.subspace.basis],
        }
        if args and getattr(args, "trace_bounds", False):
            summary["trace"] = res.trace
    elif command == "witt":
        wd = witt_decompose(Q)
        certs.extend(wd.certificates)
        summary = {
            "radical_dim": wd.radical.dim,
            "planes": len(wd.planes),
            "anisotropic_line": [str(e) for e in wd.anisotropic_line]
            if wd.anisotropic_line is not None
            else None,
        }
    elif command == "orthobasis":
        vecs, cert = orthogonal_basis(Q)
        certs.append(cert)
        summary = {"basis": [[str(e) for e in v] for v in vecs]}
    elif command == "cd":
        from .isometry import Isometry, cartan_dieudonne, random_isometry

        if inst.isometry is not None:
            sigma = Isometry(inst.isometry, Q)
        else:
            sigma = random_isometry(Q, random.Random(inst.seed))
        refs, cd_certs = cartan_dieudonne(Q, sigma)
        certs.extend(cd_certs)
        summary = {
            "reflections": len(refs),
            "vectors": [[str(e) for e in r.vector] for r in refs],
        }
    elif command == "verify":
        rng = random.Random(inst.seed)
        suite_inst = _suite_instance(inst, rng)
        certs.extend(certify.inequality_suite(suite_inst, rng))
        sb = small_basis(inst.Z, seed=inst.seed)
        certs.append(_siegel3_as_cert(sb))
        summary = {"families": sorted({c.bound_id for c in certs})}
    else:
        raise SchemaError(f"unknown command {command!r}")
    return {
        "instance_id": inst.instance_id,
        "summary": summary,
        "certificates": [c.to_json() for c in certs],
    }


def _suite_instance(inst: InstanceSpec, rng) -> dict:
    n = inst.N
    vecs = [
        VectorA([Fraction(rng.randint(-5, 5)) for _ in range(n)])
        for _ in range(max(2, n - 1))
    ]
    vecs = [v for v in vecs if not v.is_zero()] or [
        VectorA([1] + [0] * (n - 1))
    ]
    subs = []
    for _ in range(2):
        S = Subspace.from_spanning(
            [[rng.randint(-4, 4) for _ in range(n)] for _ in range(max(n - 1, 1))],
            n,
        )
        subs.append(S if S.dim else Subspace.full(n))
    uni = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for _ in range(2 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i != j:
            c = rng.randint(-2, 2)
            uni[i] = [a + c * b for a, b in zip(uni[i], uni[j])]
    return {
        "vectors": vecs,
        "gram": inst.gram,
        "subspaces": subs,
        "unimodular": [MatrixA(uni)],
        "matrices": [inst.gram, MatrixA(uni)],
        "coeffs": VectorA([Fraction(rng.randint(-3, 3)) for _ in range(len(vecs))]),
    }


def _siegel3_as_cert(sb):
    # adapt the small-basis result to the common certificate interface
    return certify.BoundCertificate(
        bound_id="siegel3",
        params={"L": sb.subspace.dim},
        lhs=sb.product,
        rhs=sb.bound,
        verdict=sb.roy_thunder_met,
    )


def run_campaign(command: str, args) -> dict:
    """Runs `command` over the input instance or --count seeded random
    instances; per-instance failures are recorded, never abort."""
    instances: List[InstanceSpec] = []
    if args.input:
        with open(args.input, "rb") as f:
            spec = parse_instance(f.read())
        spec.seed = args.seed
        instances.append(spec)
    else:
        for i in range(args.count):
            instances.append(
                random_instance(
                    args.n,
                    args.dim,
                    seed=args.seed + i,
                    instance_id=f"{command}-{i:04d}",
                )
            )
    results = []
    failures = []
    tallies: dict = {}
    for inst in instances:
        try:
            res = _run_one(command, inst, args)
        except Exception as e:  # recorded, campaign continues
            failures.append(
                {"instance_id": inst.instance_id, "error": f"{type(e).__name__}: {e}"}
            )
            continue
        for c in res["certificates"]:
            t = tallies.setdefault(
                c["bound_id"], {"verified": 0, "violated": 0, "inconclusive": 0}
            )
            t[c["verdict"]] += 1
        results.append(res)
    return {
        "command": command,
        "config": {
            "count": len(instances),
            "n": getattr(args, "n", None),
            "dim": getattr(args, "dim", None),
            "trials": args.trials,
            "prec_start": args.prec_start,
            "prec_max": args.prec_max,
            "degree_cap": args.degree_cap,
        },
        "seed": args.seed,
        "timestamp": "MASKED",
        "instances": results,
        "failures": failures,
        "tallies": tallies,
    }


def report_exit_code(report: dict) -> int:
    verdicts = [
        c["verdict"] for inst in report["instances"] for c in inst["certificates"]
    ]
    if any(v == "violated" for v in verdicts):
        return EXIT_VIOLATED
    if any(v == "inconclusive" for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["instance_id", "bound_id", "lhs_hi", "rhs_lo(log)", "slack(log)", "verdict", "caveats"]
    )
    for inst in report["instances"]:
        for c in inst["certificates"]:
            w.writerow(
                [
                    inst["instance_id"],
                    c["bound_id"],
                    c["lhs"]["hi"],
                    repr(c["rhs_log"]["lo"]),
                    repr(c["slack_log"]),
                    c["verdict"],
                    ";".join(c["caveats"]),
                ]
            )
    return buf.getvalue()


def _build_parser():
    p = argparse.ArgumentParser(
        prog="qbarforms",
        description="exact small-height constructions in bilinear spaces "
        "over towers of quadratic extensions, with certified height bounds",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("height", "heights of the form and subspace"),
        ("isotropic", "small isotropic vector in a regular space"),
        ("maxiso", "maximal totally isotropic subspace"),
        ("witt", "Witt decomposition"),
        ("orthobasis", "orthogonal basis of the space"),
        ("cd", "Cartan-Dieudonne reflection factorization"),
        ("verify", "stand-alone inequality suites and small-basis contract"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--input", help="instance JSON file (default: random campaign)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--count", type=int, default=10, help="campaign size")
        sp.add_argument("--n", type=int, default=4, help="ambient dimension")
        sp.add_argument("--dim", type=int, default=None, help="subspace dimension")
        sp.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        sp.add_argument("--prec-start", type=int, default=DEFAULT_PREC_START)
        sp.add_argument("--prec-max", type=int, default=DEFAULT_PREC_MAX)
        sp.add_argument("--degree-cap", type=int, default=DEFAULT_DEGREE_CAP)
        sp.add_argument("--trace-bounds", action="store_true")
        sp.add_argument("--report", choices=["json", "csv"], default="json")
        sp.add_argument("--out", help="write the report here instead of stdout")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        report = run_campaign(args.command, args)
    except (SchemaError, BadTowerExpr, AsymmetricGram, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = render_report(report, args.report)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        nvf = sum(
            t["verified"] for t in report["tallies"].values()
        ), sum(t["violated"] for t in report["tallies"].values()), sum(
            t["inconclusive"] for t in report["tallies"].values()
        )
        print(
            f"{args.command}: {len(report['instances'])} instances, "
            f"{nvf[0]} verified / {nvf[1]} violated / {nvf[2]} inconclusive "
            f"-> {args.out}"
        )
    else:
        sys.stdout.write(text)
    return report_exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
