"""Command-line front end.

    liestruct catalog list | catalog show NAME
    liestruct verify tables | verify jacobi | verify automorphisms
    liestruct solve complex | solve metric | solve bihermitian --algebra NAME
    liestruct equiv --algebra NAME
    liestruct manin --algebra NAME --bind k=v ...

Exit codes: 0 success, 1 a verification failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import exact
from .algebra import (
    automorphism_eval,
    automorphism_family,
    catalog_checksum,
    catalog_document,
    catalog_get,
    catalog_row,
    is_automorphism,
    jacobi_residual,
    random_bindings,
)
from .bihermitian import (
    bihermitian_check,
    bihermitian_to_json,
    h_bracket,
    hermitian_residual,
    invariant_metric_space,
    manin_check,
    metric_signature,
    nondegenerate_member,
    table2_catalog,
    table2_special_values,
    torsion_solution_space,
)
from .complex import (
    ComplexStructure,
    integrability_residual_matrix,
    is_complex_structure,
    matrix_to_json,
    table1_catalog,
    table1_entry,
    table1_omissions,
)
from .equivalence import DEFAULT_BUDGET, EquivalenceCertificate, dedup_classes, find_equivalence
from .errors import LiestructError, NotApplicable
from .solver import SolveConfig, build_complex_structure_system, solve_multistart, vector_to_matrix

GRAMMAR = (
    "liestruct <catalog list|catalog show NAME|verify tables|verify jacobi|verify automorphisms|"
    "solve complex|solve metric|solve bihermitian|equiv|manin> [--algebra NAME] [--bind k=v ...] "
    "[--starts N] [--seed N] [--tol X] [--max-den N] [--budget N] [--out PATH] [--format json|text]"
)

COMMANDS = {
    "catalog": ("list", "show"),
    "verify": ("tables", "jacobi", "automorphisms"),
    "solve": ("complex", "metric", "bihermitian"),
    "equiv": (),
    "manin": (),
}


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _binding(text: str) -> tuple[str, Fraction]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"bindings look like k=v, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), exact.to_fraction(v)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{v!r} is not an exact rational") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liestruct", usage=GRAMMAR, description="Complex and biHermitian structures on 4d Lie algebras.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("words", nargs="*")
    p.add_argument("--algebra")
    p.add_argument("--bind", action="append", type=_binding, default=[])
    p.add_argument("--starts", type=_positive_int)
    p.add_argument("--seed", type=_nonneg_int, default=7)
    p.add_argument("--tol", type=_positive_float)
    p.add_argument("--max-den", dest="max_den", type=_positive_int)
    p.add_argument("--budget", type=_positive_int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "text"), default="json")
    return p


# ---------------------------------------------------------------------------
# helpers


def _frac(q) -> str:
    return exact.fraction_str(exact.to_fraction(q))


def _bindings_json(b) -> dict:
    return {k: _frac(v) for k, v in sorted(b.items())}


def _need_algebra(args):
    if not args.algebra:
        raise UsageError(f"{args.command} {' '.join(args.words)} needs --algebra NAME")
    return args.algebra


def _algebra(args):
    return catalog_get(_need_algebra(args), dict(args.bind), use_defaults=True)


def _solve_config(args, **extra) -> SolveConfig:
    kw = dict(seed=args.seed, **extra)
    if args.starts:
        kw["starts"] = args.starts
    if args.tol:
        kw["tol"] = args.tol
    if args.max_den:
        kw["max_den"] = args.max_den
    return SolveConfig(**kw)


def _nonzero_f(L) -> list:
    out = []
    n = L.dim
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(n):
                if L.f[a, b, c] != 0:
                    out.append([a + 1, b + 1, c + 1, _frac(L.f[a, b, c])])
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_catalog_list(args) -> tuple[dict, int]:
    listed = {e.algebra for e in table1_catalog()}
    rows = []
    for r in catalog_document()["rows"]:
        rows.append(
            {
                "name": r["name"],
                "label": r["label"],
                "dim": r["dim"],
                "params": [p["name"] for p in r["params"]],
                "ranges": [p["range"] for p in r["params"]],
                "listed_complex_structures": r["name"] in listed,
            }
        )
    return {"command": "catalog list", "count": len(rows), "checksum": catalog_checksum(), "rows": rows}, 0


def cmd_catalog_show(args) -> tuple[dict, int]:
    if len(args.words) != 2:
        raise UsageError("catalog show needs exactly one NAME")
    args.algebra = args.algebra or args.words[1]
    row = catalog_row(args.algebra)
    L = _algebra(args)
    return {
        "command": "catalog show",
        "name": row["name"],
        "label": row["label"],
        "dim": row["dim"],
        "bindings": _bindings_json(L.params),
        "params": row["params"],
        "f": _nonzero_f(L),
        "automorphism": row["automorphism"],
    }, 0


def cmd_verify_jacobi(args) -> tuple[dict, int]:
    rng = np.random.default_rng(args.seed)
    samples = args.budget or 5
    results = []
    for r in catalog_document()["rows"]:
        ok = True
        for _ in range(samples):
            L = catalog_get(r["name"], random_bindings(r["name"], rng))
            ok &= exact.is_zero(jacobi_residual(L)) and L.is_antisymmetric()
        results.append({"name": r["name"], "label": r["label"], "status": "PASS" if ok else "FAIL"})
    failed = [x["name"] for x in results if x["status"] != "PASS"]
    doc = {
        "command": "verify jacobi",
        "samples": samples,
        "seed": args.seed,
        "results": results,
        "failed": len(failed),
        "failures": failed,
    }
    return doc, int(bool(failed))


def cmd_verify_automorphisms(args) -> tuple[dict, int]:
    rng = np.random.default_rng(args.seed)
    samples = args.budget or 5
    results, discrepancies = [], []
    for r in catalog_document()["rows"]:
        status = "PASS"
        for _ in range(samples):
            try:
                L = catalog_get(r["name"], random_bindings(r["name"], rng))
                F = automorphism_family(L)
                binding = F.random_binding(rng)
                ok, _ = is_automorphism(L, automorphism_eval(F, binding))
            except LiestructError as exc:
                discrepancies.append({"name": r["name"], "error": f"{type(exc).__name__}: {exc}"})
                status = "FAIL"
                break
            if not ok:
                discrepancies.append({"name": r["name"], "binding": {k: str(v) for k, v in binding.items()}})
                status = "FAIL"
                break
        results.append({"name": r["name"], "label": r["label"], "status": status})
    return {
        "command": "verify automorphisms",
        "samples": samples,
        "seed": args.seed,
        "results": results,
        "failed": sum(r["status"] != "PASS" for r in results),
        "discrepancies": discrepancies,
    }, int(bool(discrepancies))


def _table2_metric_values(entry) -> list[dict]:
    if not entry.metric_params:
        return [{}]
    name = entry.metric_params[0]
    values = {"alpha": ("1", "-2"), "beta": ("1", "3")}.get(name, ("1",))
    return [{name: Fraction(v)} for v in values]


def cmd_verify_tables(args) -> tuple[dict, int]:
    rng = np.random.default_rng(args.seed)
    t1 = []
    for e in table1_catalog():
        for b in e.sample_bindings():
            L = e.algebra_at(b)
            for k, cs in enumerate(e.complete(b), start=1):
                ok = is_complex_structure(L, cs.J) and exact.is_zero(integrability_residual_matrix(L, cs.J))
                t1.append(
                    {
                        "algebra": e.algebra,
                        "label": e.label,
                        "structure": k,
                        "bindings": _bindings_json(b),
                        "J": matrix_to_json(cs.J),
                        "status": "PASS" if ok else "FAIL",
                    }
                )
    t2 = []
    for e in table2_catalog():
        L = e.algebra_obj()
        for metric in _table2_metric_values(e):
            for _ in range(3):
                b = e.random_binding(rng, metric)
                J, g, H = e.bind(b)
                rep = bihermitian_check(L, J, g, H)
                t2.append(
                    {
                        "block": e.block,
                        "algebra": e.algebra,
                        "bindings": _bindings_json(b),
                        "status": "PASS" if rep.passed else "FAIL",
                        "failures": rep.failures(),
                    }
                )
    algebras = sorted({e.algebra for e in table1_catalog()})
    failed = [x for x in t1 + t2 if x["status"] != "PASS"]
    return {
        "command": "verify tables",
        "seed": args.seed,
        "table1": t1,
        "table1_algebras": len(algebras),
        "catalog_rows": len(catalog_document()["rows"]),
        "table1_omissions": table1_omissions(),
        "table2": t2,
        "failed": len(failed),
    }, int(bool(failed))


def cmd_solve_complex(args) -> tuple[dict, int]:
    L = _algebra(args)
    S = build_complex_structure_system(L)
    report = solve_multistart(S, _solve_config(args))
    verified = [is_complex_structure(L, vector_to_matrix(sol, L.dim, L.dim)) for sol in report.certified]
    doc = {
        "command": "solve complex",
        "algebra": L.name,
        "label": L.label,
        "bindings": _bindings_json(L.params),
        "unknowns": S.n,
        "equations": S.m,
        "report": report.to_json(),
        "structures": [
            ComplexStructure(J=vector_to_matrix(sol, L.dim, L.dim), algebra=L.name, bindings=L.params).to_json()
            for sol in report.certified
        ],
        "verified": verified,
        "note": "an empty certified list means no solution was found within budget, not that none exists",
    }
    return doc, int(not all(verified))


def cmd_solve_metric(args) -> tuple[dict, int]:
    L = _algebra(args)
    basis = invariant_metric_space(L)
    g = nondegenerate_member(basis, np.random.default_rng(args.seed))
    doc = {
        "command": "solve metric",
        "algebra": L.name,
        "label": L.label,
        "bindings": _bindings_json(L.params),
        "dimension": len(basis),
        "basis": [matrix_to_json(b) for b in basis],
        "nondegenerate_member": matrix_to_json(g) if g is not None else None,
        "signature": list(metric_signature(g)) if g is not None else None,
    }
    if g is None:
        doc["note"] = "no nondegenerate member found in samples"
    return doc, 0


def _hermitian_metrics(L, basis, J) -> list[np.ndarray]:
    """Members of the invariant-metric span that are Hermitian for J (exact linear solve)."""
    if not basis:
        return []
    k = len(basis)
    rows = []
    for idx in np.ndindex(L.dim, L.dim):
        rows.append([hermitian_residual(J, b)[idx] for b in basis])
    null = exact.nullspace(exact.exact_array(rows).reshape(len(rows), k))
    return [sum(b * c for b, c in zip(basis, v)) for v in null]


def cmd_solve_bihermitian(args) -> tuple[dict, int]:
    L = _algebra(args)
    rng = np.random.default_rng(args.seed)
    basis = invariant_metric_space(L)
    try:
        entry = table1_entry(L.name)
        structures = [cs.J for cs in entry.complete({**L.params, **({"p": Fraction(0)} if entry.result_params else {})})]
        source = "listed"
    except KeyError:
        report = solve_multistart(build_complex_structure_system(L), _solve_config(args, max_certified=2))
        structures = [vector_to_matrix(sol, L.dim, L.dim) for sol in report.certified]
        source = "solver"
    results = []
    failed = False
    for k, J in enumerate(structures, start=1):
        herm = _hermitian_metrics(L, basis, J)
        g = nondegenerate_member(herm, rng)
        item = {"structure": k, "J": matrix_to_json(J), "hermitian_metric_dimension": len(herm)}
        if g is None:
            item["note"] = "no nondegenerate Hermitian invariant metric found in samples"
        else:
            space = torsion_solution_space(L, J, g)
            H = space.particular
            check = bihermitian_check(L, J, g, H)
            failed |= not check.passed
            item.update(
                {
                    "g": matrix_to_json(g),
                    "signature": list(metric_signature(g)),
                    "torsion_dimension": space.dimension,
                    "example": bihermitian_to_json(L.name, J, g, H),
                    "status": "PASS" if check.passed else "FAIL",
                }
            )
        results.append(item)
    return {
        "command": "solve bihermitian",
        "algebra": L.name,
        "label": L.label,
        "bindings": _bindings_json(L.params),
        "source": source,
        "metric_dimension": len(basis),
        "structures": results,
    }, int(failed)


def cmd_equiv(args) -> tuple[dict, int]:
    L = _algebra(args)
    entry = table1_entry(L.name)
    extra = {"p": Fraction(0)} if entry.result_params else {}
    Js = [cs.J for cs in entry.complete({**L.params, **extra})]
    F = automorphism_family(L)
    budget = SolveConfig(**{**DEFAULT_BUDGET.__dict__, "seed": args.seed, **({"starts": args.budget} if args.budget else {})})
    classes = dedup_classes(L, F, Js, budget)
    pairs = []
    for i in range(len(Js)):
        for j in range(i + 1, len(Js)):
            r = find_equivalence(L, F, Js[i], Js[j], budget)
            pairs.append({"from": i + 1, "to": j + 1, **(r.to_json() if isinstance(r, EquivalenceCertificate) else r.to_json())})
    return {
        "command": "equiv",
        "algebra": L.name,
        "label": L.label,
        "bindings": _bindings_json(L.params),
        "structures": [matrix_to_json(J) for J in Js],
        "classes": [[i + 1 for i in c] for c in classes],
        "pairs": pairs,
        "note": "classes are an over-count: a larger budget may merge them, never split them",
    }, 0


def cmd_manin(args) -> tuple[dict, int]:
    name = catalog_row(_need_algebra(args))["name"]
    bound = dict(args.bind)
    blocks = [e for e in table2_catalog() if e.algebra == name]
    if not blocks:
        raise UsageError(f"{name} has no listed biHermitian block")
    special = {sv["block"]: sv["values"] for sv in table2_special_values()}
    if not bound:
        # with nothing bound, use the documented values that give a Manin triple
        block = next((e for e in blocks if e.block in special), blocks[0])
        bound = {k: Fraction(v) for k, v in special.get(block.block, {}).items()}
    else:
        block = next((e for e in blocks if set(bound) & set(e.params)), blocks[0])
    unknown = set(bound) - set(block.params)
    if unknown:
        raise UsageError(f"--bind names {sorted(unknown)} are not parameters of block {block.block}")
    for p in block.metric_params:
        bound.setdefault(p, Fraction(1))
    J, g, H = block.bind(bound)
    L = block.algebra_obj()
    ft, is_lie = h_bracket(L, g, H)
    doc = {
        "command": "manin",
        "algebra": name,
        "block": block.block,
        "bindings": _bindings_json(bound),
        "induced_bracket": [
            [a + 1, b + 1, c + 1, _frac(ft[a, b, c])]
            for a in range(4)
            for b in range(a + 1, 4)
            for c in range(4)
            if ft[a, b, c] != 0
        ],
        "induced_jacobi": is_lie,
    }
    budget = SolveConfig(starts=args.budget or 2000, seed=args.seed, refine_limit=8, max_certified=1, search_bound=0.0)
    try:
        result = manin_check(L, g, H, budget)
    except NotApplicable as exc:
        doc["result"] = {"found": False, "reason": f"not applicable: {exc}"}
        return doc, 0
    doc["result"] = {"found": True, **result.to_json()} if hasattr(result, "C") else result.to_json()
    return doc, 0


HANDLERS = {
    ("catalog", "list"): cmd_catalog_list,
    ("catalog", "show"): cmd_catalog_show,
    ("verify", "tables"): cmd_verify_tables,
    ("verify", "jacobi"): cmd_verify_jacobi,
    ("verify", "automorphisms"): cmd_verify_automorphisms,
    ("solve", "complex"): cmd_solve_complex,
    ("solve", "metric"): cmd_solve_metric,
    ("solve", "bihermitian"): cmd_solve_bihermitian,
    ("equiv", None): cmd_equiv,
    ("manin", None): cmd_manin,
}


# ---------------------------------------------------------------------------
# output


def _text_lines(doc: dict) -> list[str]:
    cmd = doc.get("command", "")
    lines = [f"# {cmd}"]
    if cmd == "catalog list":
        lines += [f"{r['name']:<10} {r['label']:<22} params={','.join(r['params']) or '-'}" for r in doc["rows"]]
        lines.append(f"{doc['count']} rows")
    elif cmd.startswith("verify"):
        for key in ("results", "table1", "table2"):
            for r in doc.get(key, []):
                label = r.get("name") or r.get("block") or f"{r['algebra']} J{r.get('structure', '')}"
                lines.append(f"{r['status']} {label} {json.dumps(r.get('bindings', {}), sort_keys=True)}")
    elif cmd == "solve complex":
        rep = doc["report"]
        lines.append(f"{doc['algebra']}: {len(rep['certified'])} certified, min_residual {rep['min_residual']:.3e}")
        for s in doc["structures"]:
            lines.append("J = " + json.dumps(s))
    else:
        lines.append(json.dumps(doc, sort_keys=True))
    return lines


def render(doc: dict, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_text_lines(doc)) + "\n"
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        subs = COMMANDS[args.command]
        if subs:
            if not args.words or args.words[0] not in subs:
                raise UsageError(f"{args.command} needs one of {', '.join(subs)}")
            key = (args.command, args.words[0])
            if key != ("catalog", "show") and len(args.words) > 1:
                raise UsageError(f"unexpected arguments {args.words[1:]}")
        else:
            if args.words:
                raise UsageError(f"unexpected arguments {args.words}")
            key = (args.command, None)
        doc, code = HANDLERS[key](args)
    except UsageError as exc:
        print(f"liestruct: error: {exc}\nusage: {GRAMMAR}", file=sys.stderr)
        return 2
    except (LiestructError, KeyError, ValueError) as exc:
        print(f"liestruct: error: {type(exc).__name__}: {exc}\nusage: {GRAMMAR}", file=sys.stderr)
        return 2
    text = render(doc, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
