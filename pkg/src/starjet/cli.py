"""Command-line front end: ``starjet <command> [--scenario FILE] ...``.

Scenario documents are JSON.  Rationals are strings ``"p/q"``; functions are
maps from basis labels (``"1"``, ``"cos:2,0"``, ``"t1*sin:1,1"``,
``"x:1,0"``) to coefficients; 2-forms and 1-forms are keyed by 1-based index
lists (``"1,2"``, ``"1"``); connections by ``"k,i,j"`` for ``Gamma^k_ij``.

Top-level keys::

    schema        "starjet.scenario/1"
    chart         {"kind": "torus"|"affine", "dim": d}
    orders        {"N": star order, "t_cap": leaf-parameter cap, "n": jet order}
    omega0        constant symplectic form on M
    series        [omega^1, omega^2, ...]   (the first class Omega^hbar)
    series_prime  [omega'^1, ...]           (a second class with the same omega0)
    gamma0        initial tangential connection (optional)
    family        an explicit Omega(t) for build-star (optional)
    options       {"equiv_search": {...}, "borel": {"sequence": [...], "primitives": [...]}}

Exit codes: 0 success, 1 a reported check failed, 2 schema error,
3 mathematical precondition or identity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources

from starjet import __version__
from starjet.coeffring import AFFINE, TORUS, Chart, ChartMismatch, FormMatrix, rational_inverse
from starjet.coeffring.forms import Form
from starjet.errors import IdentityFailure, PreconditionError

SCHEMA = "starjet.scenario/1"
EMITS = ("json", "pretty", "latex")


class SchemaError(ValueError):
    pass


@dataclass
class Scenario:
    kind: str
    dim: int
    N: int
    t_cap: int
    n: int
    omega0: FormMatrix
    series: list
    series_prime: list
    gamma0: dict
    family: dict | None
    options: dict = field(default_factory=dict)
    source: str = ""

    @property
    def base(self):
        return Chart(self.kind, self.dim, 0)

    def chart(self, t_cap=None):
        return Chart(self.kind, self.dim, self.t_cap if t_cap is None else t_cap)

    def closed_series(self, prime=False):
        from starjet.jets import ClosedFormSeries

        return ClosedFormSeries([self.omega0] + (self.series_prime if prime else self.series))

    def connection(self, chart):
        from starjet.fedosov import FoliatedConnection

        return FoliatedConnection.from_json(chart, self.gamma0) if self.gamma0 else None


def _require(doc, key, kind):
    if key not in doc:
        raise SchemaError("missing key %r" % key)
    if not isinstance(doc[key], kind):
        raise SchemaError("key %r has the wrong type" % key)
    return doc[key]


def parse_scenario(doc, source="") -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SchemaError("unsupported schema %r" % doc.get("schema"))
    chart = _require(doc, "chart", dict)
    kind = chart.get("kind")
    if kind not in (TORUS, AFFINE):
        raise SchemaError("chart.kind must be 'torus' or 'affine'")
    dim = chart.get("dim")
    if not isinstance(dim, int) or dim < 2 or dim % 2:
        raise SchemaError("chart.dim must be an even integer >= 2")
    orders = _require(doc, "orders", dict)
    try:
        big_n, t_cap, n = (int(orders[k]) for k in ("N", "t_cap", "n"))
    except (KeyError, TypeError, ValueError):
        raise SchemaError("orders needs integer N, t_cap and n") from None
    if min(big_n, t_cap, n) < 0:
        raise SchemaError("orders must be non-negative")
    if t_cap < n:
        raise SchemaError("orders inconsistent: t_cap < n")
    base = Chart(kind, dim, 0)
    try:
        omega0 = FormMatrix.from_json(base, _require(doc, "omega0", dict))
        series = [FormMatrix.from_json(base, w) for w in doc.get("series", [])]
        prime = [FormMatrix.from_json(base, w) for w in doc.get("series_prime", [])]
        family = doc.get("family")
        if family is not None:
            FormMatrix.from_json(Chart(kind, dim, t_cap), family)
        gamma0 = doc.get("gamma0") or {}
        if gamma0:
            from starjet.fedosov import FoliatedConnection

            FoliatedConnection.from_json(Chart(kind, dim, t_cap), gamma0)
    except SchemaError:
        raise
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise SchemaError("malformed form data: %s" % exc) from None
    options = doc.get("options") or {}
    if not isinstance(options, dict):
        raise SchemaError("options must be an object")
    return Scenario(kind, dim, big_n, t_cap, n, omega0, series, prime, gamma0, family, options, source)


def load_scenario(path=None) -> Scenario:
    try:
        if path is None:
            text = resources.files("starjet").joinpath("scenarios/t2_default.json").read_text()
            source = "t2_default.json"
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            source = path
        doc = json.loads(text)
    except OSError as exc:
        raise SchemaError("cannot read scenario: %s" % exc) from None
    except json.JSONDecodeError as exc:
        raise SchemaError("scenario is not valid JSON: %s" % exc) from None
    return parse_scenario(doc, source)


# helpers ----------------------------------------------------------------------------


def _spot_check(table):
    """Associativity on one probe triple; raises :class:`IdentityFailure`."""
    from starjet.moser import probe_family

    f, g, h = probe_family(table.chart)[:3]
    if not table.associativity_defect(f, g, h).is_zero():
        raise IdentityFailure("emitted table fails the associativity spot check")
    return table


def _table_report(table, **extra):
    out = {"table": table.to_json(), "associativity_spot_check": True}
    out.update(extra)
    return out


def _lam0(sc):
    return rational_inverse(sc.omega0.constant_part())


def _class_table(sc, prime, order):
    from starjet.jets import star_for_class

    gamma = sc.connection(sc.chart(order)) if sc.gamma0 and sc.t_cap >= order else None
    return _spot_check(star_for_class(sc.closed_series(prime), gamma, order).table)


# commands -----------------------------------------------------------------------------


def cmd_moyal(sc, args):
    from starjet.tables import moyal_table

    table = _spot_check(moyal_table(sc.base, _lam0(sc), sc.N))
    return 0, _table_report(table), [table]


def _hat_table(sc):
    from starjet.fedosov import fedosov_pipeline
    from starjet.jets import polynomial_representative

    chart = sc.chart()
    if sc.family is not None:
        omega_t = FormMatrix.from_json(chart, sc.family)
    else:
        omega_t = polynomial_representative(sc.closed_series(), t_cap=sc.t_cap)
    _, _, data, table = fedosov_pipeline(omega_t, sc.connection(chart), sc.N)
    return _spot_check(table), data


def cmd_build_star(sc, args):
    table, data = _hat_table(sc)
    return 0, _table_report(table, gamma_is_zero=data.gamma_is_zero), [table]


def cmd_induce(sc, args):
    from starjet.jets import induce_star

    hat_table, _ = _hat_table(sc)
    n = min(sc.n, sc.N)
    table = _spot_check(induce_star(hat_table, n))
    return 0, _table_report(table, jet_order=n), [table]


def cmd_class_star(sc, args):
    tables = [_class_table(sc, False, sc.n)]
    report = {"star": _table_report(tables[0])}
    if sc.series_prime:
        tables.append(_class_table(sc, True, sc.n))
        report["star_prime"] = _table_report(tables[1])
    return 0, report, tables


def cmd_compare(sc, args):
    from starjet.jets import classes_equal, difference_witness

    s1, s2 = sc.closed_series(), sc.closed_series(True)
    cmp = classes_equal(s1, s2, sc.n)
    report = {"classes": cmp.to_json()}
    if not cmp.equal:
        k = cmp.first_k
        report["first_differing_order"] = k
        same_below = all(s1[j] == s2[j] for j in range(k))
        if 1 <= k and same_below:
            from starjet.jets import star_for_class

            alpha = s2[k] - s1[k]
            a = _spot_check(star_for_class(s1, None, k + 1).table)
            b = _spot_check(star_for_class(s2, None, k + 1).table)
            w = difference_witness(a, b, k, alpha, _lam0(sc))
            report["witness"] = w.to_json()
            if not (w.agree_through_k and w.matches_sharp):
                raise IdentityFailure("difference witness does not match sharp(alpha0)")
        else:
            report["witness"] = None
    return 0, report, []


def cmd_moser(sc, args):
    from starjet.jets import polynomial_representative
    from starjet.moser import pullback_form, rho_jet, solve_moser

    n_t = sc.n
    w1 = polynomial_representative(sc.closed_series(), t_cap=n_t)
    w2 = polynomial_representative(sc.closed_series(True), t_cap=n_t)
    fam = solve_moser(w1, w2, n_t)
    ok = pullback_form(fam, w1) == w2
    rho = rho_jet(fam, n_t)
    report = {
        "n_t": n_t,
        "generator": {str(j): z.to_json() for j, z in sorted(fam.field_s.items())},
        "pullback_maps_omega1_to_omega2": ok,
        "rho": rho.to_json(),
    }
    return (0 if ok else 1), report, []


def cmd_equiv_search(sc, args):
    from starjet.moser import equivalence_search

    opts = sc.options.get("equiv_search", {})
    a = _class_table(sc, False, sc.n)
    b = _class_table(sc, True, sc.n)
    res = equivalence_search(a, b, sc.n, int(opts.get("order_bound", 4)), int(opts.get("basis_bound", 2)))
    return 0, res.to_json(), []


def _borel_data(sc, grid):
    import numpy as np

    from starjet.borel import FormSequence, realize, realize_triple

    opts = sc.options.get("borel")
    if not opts or "sequence" not in opts:
        raise SchemaError("options.borel.sequence is required for the borel command")
    base = sc.base
    try:
        forms = [Form.from_json(base, 2, f) for f in opts["sequence"]]
        prims = [Form.from_json(base, 1, f) for f in opts.get("primitives", [])]
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError("malformed borel data: %s" % exc) from None
    real = realize(FormSequence(forms), grid=grid)
    xs = np.meshgrid(np.linspace(0, 2 * np.pi, 9), np.linspace(0, 2 * np.pi, 9), indexing="ij")
    pts = [a.ravel() for a in xs][: sc.dim] + [np.zeros(81)] * max(0, sc.dim - 2)
    rad = real.plateau_radius()
    worst = 0.0
    for t in np.linspace(-rad, rad, 9):
        got, want = real.evaluate(t, pts), real.taylor(t, pts)
        for idx in want:
            scale = max(1.0, float(np.max(np.abs(want[idx]))))
            worst = max(worst, float(np.max(np.abs(got.get(idx, 0.0) - want[idx]))) / scale)
    certs = [real.certificate(n) for n in range(len(forms))]
    report = {
        "realization": real.to_json(),
        "plateau_radius": rad,
        "plateau_max_relative_error": worst,
        "certificates": [{"n": n, "sup": w, "bound": b, "holds": w <= b} for n, (w, b) in enumerate(certs)],
        "jet_at_zero_exact": all(real.jet_at_zero(k) == forms[k] for k in range(len(forms))),
    }
    ok = worst <= 1e-12 and all(w <= b for w, b in certs) and report["jet_at_zero_exact"]
    if prims:
        if len(prims) != len(forms):
            raise SchemaError("options.borel.primitives must match the sequence length")
        second = [a + nu.d() for a, nu in zip(forms, prims)]
        tri = realize_triple(FormSequence(forms), FormSequence(second), FormSequence(prims), grid=grid)
        span = 1.0 / min(tri.mu)
        err = tri.relation_defect(np.linspace(-span, span, 21), pts)
        report["triple"] = {"mu": tri.mu, "d_relation_max_error": err}
        ok = ok and err <= 1e-12
    return ok, report


def cmd_borel(sc, args):
    from starjet.borel import DEFAULT_GRID

    ok, report = _borel_data(sc, args.grid or DEFAULT_GRID)
    return (0 if ok else 1), report, []


def cmd_selftest(sc, args):
    from starjet import suites

    results = suites.run_all(args.seed, grid=args.grid)
    # the scenario itself: its class product must build and re-validate
    try:
        _class_table(sc, False, min(sc.n, 2))
        results.append(suites.SuiteResult("scenario", "class_star_spot_check", True, note=sc_name(sc)))
    except (PreconditionError, IdentityFailure) as exc:
        results.append(suites.SuiteResult("scenario", "class_star_spot_check", False, note=str(exc)))
    ok = all(r.passed for r in results)
    report = {
        "seed": args.seed,
        "version": __version__,
        "results": [r.to_json() for r in results],
        "passed": ok,
    }
    return (0 if ok else 1), report, []


def sc_name(sc):
    return sc.source.rsplit("/", 1)[-1]


COMMANDS = {
    "moyal": (cmd_moyal, "closed-form Moyal table for the constant omega0"),
    "build-star": (cmd_build_star, "Fedosov pipeline on M x (-eps, eps)"),
    "induce": (cmd_induce, "induced product *_n on M via the jet map"),
    "class-star": (cmd_class_star, "star products associated to the scenario classes"),
    "compare": (cmd_compare, "compare classes and report the first-order witness"),
    "moser": (cmd_moser, "formal Moser isotopy between the two class representatives"),
    "equiv-search": (cmd_equiv_search, "search for an equivalence between the two class products"),
    "borel": (cmd_borel, "Borel realization with certified scale factors"),
    "selftest": (cmd_selftest, "run the seeded invariant suites"),
}


# output ---------------------------------------------------------------------------------


def _pretty(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append("%s%s:" % (pad, k))
                lines.extend(_pretty(v, indent + 1))
            else:
                lines.append("%s%s: %s" % (pad, k, json.dumps(v, sort_keys=True)))
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v:
                lines.append("%s-" % pad)
                lines.extend(_pretty(v, indent + 1))
            else:
                lines.append("%s- %s" % (pad, json.dumps(v, sort_keys=True)))
    else:
        lines.append(pad + json.dumps(obj, sort_keys=True))
    return lines


def render(command, report, tables, emit):
    if emit == "json":
        return json.dumps({"command": command, "report": report}, sort_keys=True, indent=2)
    if command == "selftest":
        body = [
            ("PASS " if r["passed"] else "FAIL ") + "%s.%s samples=%d%s" % (
                r["suite"], r["check"], r["samples"], " (%s)" % r["note"] if r["note"] else "")
            for r in report["results"]
        ]
        body.append("seed=%d overall=%s" % (report["seed"], "PASS" if report["passed"] else "FAIL"))
        return "\n".join(body)
    if emit == "latex" and tables:
        return "\n\n".join(t.latex() for t in tables)
    if emit == "pretty" and tables:
        return "\n\n".join(t.pretty() for t in tables)
    return "\n".join(_pretty(report))


def build_parser():
    p = argparse.ArgumentParser(prog="starjet", description="Fedosov star products, jets, classes and Moser isotopies.")
    p.add_argument("--version", action="version", version="starjet " + __version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scenario", help="scenario JSON file (default: packaged T^2 scenario)")
        sp.add_argument("--order", type=int, help="override N and n")
        sp.add_argument("--emit", choices=EMITS, default="json")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
        sp.add_argument("--grid", type=int, default=None, help="bump-derivative grid size (borel)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        sc = load_scenario(args.scenario)
        if args.order is not None:
            if args.order < 0:
                raise SchemaError("--order must be non-negative")
            sc.N = sc.n = args.order
            sc.t_cap = max(sc.t_cap, args.order)
        code, report, tables = fn(sc, args)
    except SchemaError as exc:
        print("schema error: %s" % exc, file=sys.stderr)
        return 2
    except (PreconditionError, IdentityFailure, ChartMismatch) as exc:
        print("failed: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 3
    sys.stdout.write(render(args.command, report, tables, args.emit) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
