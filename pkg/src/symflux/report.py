"""Analysis pipeline for one scheme and its text / JSON reports.

A report is plain data (strings, ints, lists) so it survives a JSON round
trip unchanged, and rendering works from that data alone.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from symflux.detsolve import (
    LieGenerator,
    SymmetryResult,
    operator_string,
    solve_symmetries,
)
from symflux.flow import COORD_NAMES, affine_flow
from symflux.modeq import DifferentialApproximation, differential_approximation
from symflux.prolong import COMPONENTS, COMPONENT_VARS
from symflux.symkernel import Expr, is_jet, mono_to_string, var_name

EMIT_CHOICES = ("modified-equation", "determining", "generators", "all")
DEFAULT_THETA = 3


@dataclass
class AnalysisReport:
    name: str
    pde: str
    taylor_order: Optional[int] = None
    ansatz_degree: Optional[int] = None
    # Pi-form: the full left-hand side as a term list, plus error terms by grade
    modified_equation: List[Dict[str, str]] = field(default_factory=list)
    error_grades: List[Dict] = field(default_factory=list)
    minimal_gradings: Dict[str, Optional[int]] = field(default_factory=dict)
    highest_x_order: Optional[int] = None
    # determining system: [{"jet": str, "rows": [{"monomial", "equation"}]}]
    determining: List[Dict] = field(default_factory=list)
    system: Dict[str, int] = field(default_factory=dict)
    # [{"label", "operator", "components": [{variable, coefficient}],
    #   "certificate", "flow": [{variable, image}] | None}]
    generators: List[Dict] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "AnalysisReport":
        return cls(**data)


# ---------------------------------------------------------------- building


def _modified_equation(da: DifferentialApproximation) -> List[Dict[str, str]]:
    out = []
    for m, c in da.full().sorted_terms():
        out.append({"coefficient": str(c), "monomial": mono_to_string(m) if m else "1"})
    return out


def _grades(da: DifferentialApproximation) -> List[Dict]:
    return [{"tau": a, "h": b, "expr": str(e)} for (a, b), e in da.by_grade().items()]


def _determining(result: SymmetryResult) -> List[Dict]:
    groups: Dict[str, List[Dict[str, str]]] = {}
    order: List[str] = []
    for tag, row in zip(result.system.row_tags, result.system.rows):
        jets = tuple((v, e) for v, e in tag if is_jet(v))
        rest = tuple((v, e) for v, e in tag if not is_jet(v))
        key = mono_to_string(jets) if jets else "1"
        if key not in groups:
            groups[key] = []
            order.append(key)
        eq = Expr.const(0)
        for col, val in sorted(row.items()):
            eq = eq + Expr.var(result.ansatz.coeffs[col]).scale(val)
        groups[key].append(
            {"monomial": mono_to_string(rest) if rest else "1", "equation": f"{eq} = 0"}
        )
    return [{"jet": k, "rows": groups[k]} for k in order]


def generator_entry(g: LieGenerator) -> Dict:
    comps = []
    for name in COMPONENTS:
        e = getattr(g.inf, name)
        if e:
            comps.append({"variable": var_name(COMPONENT_VARS[name]), "coefficient": str(e)})
    flow = affine_flow(g)
    return {
        "label": g.label,
        "operator": operator_string(g.inf),
        "components": comps,
        "certificate": g.certificate,
        "flow": None
        if flow is None
        else [{"variable": n, "image": flow.render(n)} for n in COORD_NAMES],
    }


def analyze(
    name: str,
    pde_rhs: Expr,
    scheme: Optional[Expr],
    deps: Mapping[str, Optional[Sequence[str]]],
    *,
    theta: int = DEFAULT_THETA,
    taylor_order: Optional[int] = None,
    emit: str = "all",
    timings: bool = False,
) -> AnalysisReport:
    """Run the whole pipeline for one scheme (``scheme=None``: the bare PDE)."""
    clock: Dict[str, float] = {}
    t0 = time.perf_counter()
    if scheme is None:
        da = DifferentialApproximation.continuous(pde_rhs, name)
    else:
        da = differential_approximation(scheme, pde_rhs, taylor_order=taylor_order, name=name)
    clock["differential_approximation"] = time.perf_counter() - t0
    mt, nh = da.minimal_gradings()
    rep = AnalysisReport(
        name=name,
        pde=f"u_t = {pde_rhs}",
        taylor_order=da.taylor_order,
        minimal_gradings={"tau": mt, "h": nh},
        highest_x_order=da.highest_x_order(),
    )
    if emit in ("modified-equation", "all"):
        rep.modified_equation = _modified_equation(da)
        rep.error_grades = _grades(da)
    if emit in ("determining", "generators", "all"):
        t0 = time.perf_counter()
        result = solve_symmetries(da, deps, theta)
        clock["symmetries"] = time.perf_counter() - t0
        rep.ansatz_degree = theta
        rep.system = {
            "coefficients": len(result.ansatz.coeffs),
            "equations": len(result.system.rows),
            "rank": len(result.ansatz.coeffs) - len(result.basis),
            "nullity": len(result.basis),
        }
        if emit in ("determining", "all"):
            rep.determining = _determining(result)
        if emit in ("generators", "all"):
            rep.generators = [generator_entry(g) for g in result.generators]
    if timings:
        clock["total"] = sum(clock.values())
        rep.timings = {k: round(v, 3) for k, v in clock.items()}
    return rep


# ---------------------------------------------------------------- rendering


def render_text(reports: Sequence[AnalysisReport]) -> str:
    out: List[str] = []
    for rep in reports:
        out.append(f"== {rep.name} ==")
        out.append(f"pde: {rep.pde}")
        if rep.taylor_order is not None:
            out.append(f"taylor order: {rep.taylor_order}")
        mg = rep.minimal_gradings
        if mg.get("tau") is not None or mg.get("h") is not None:
            out.append(f"minimal error gradings: tau^{mg.get('tau')}, h^{mg.get('h')}")
        out.append(f"highest x-derivative order: {rep.highest_x_order}")
        if rep.modified_equation:
            out.append("modified equation:")
            out.append(f"  u_t - ({rep.pde.split('= ', 1)[1]})")
            for g in rep.error_grades:
                out.append(f"  + tau^{g['tau']}*h^{g['h']} * ({g['expr']})")
            out.append("  = 0")
        if rep.system:
            s = rep.system
            out.append(
                f"ansatz degree {rep.ansatz_degree}: {s['coefficients']} coefficients, "
                f"{s['equations']} equations, rank {s['rank']}, nullity {s['nullity']}"
            )
        if rep.determining:
            out.append("determining equations:")
            for grp in rep.determining:
                out.append(f"  [{grp['jet']}]")
                for row in grp["rows"]:
                    out.append(f"    {row['monomial']}: {row['equation']}")
        if rep.generators:
            out.append(f"generators ({len(rep.generators)}):")
            for g in rep.generators:
                out.append(f"  {g['label']} = {g['operator']}    [residual terms: {g['certificate']}]")
                if g["flow"] is None:
                    out.append("    flow: non-affine")
                else:
                    moved = [f"{f['variable']}* = {f['image']}" for f in g["flow"]
                             if f["image"] != f["variable"]]
                    out.append("    flow: " + ", ".join(moved))
        if rep.timings:
            out.append("timings (s): " + ", ".join(f"{k} {v}" for k, v in rep.timings.items()))
        out.append("")
    return "\n".join(out)


def to_json(reports: Sequence[AnalysisReport], header: Optional[Mapping] = None) -> str:
    doc = dict(header or {})
    doc["reports"] = [r.to_dict() for r in reports]
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> List[AnalysisReport]:
    return [AnalysisReport.from_dict(d) for d in json.loads(text)["reports"]]
