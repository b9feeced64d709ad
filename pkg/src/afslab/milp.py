"""Full mixed-integer formulation in LP text format, plus a reader for it.

Fuel variables are indexed by position along each round trip, so a node
visited on the way out and again on the way back gets two B/l instances.
The reader covers the subset of LP format the writer emits, which is enough
for ``write_lp(read_lp(text)) == text``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .coverage import Instance

_TERMS_PER_LINE = 6


@dataclass
class Constraint:
    name: str
    coefs: list[tuple[float, str]]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass
class LpModel:
    name: str
    sense: str  # "Maximize" | "Minimize"
    objective: list[tuple[float, str]]
    constraints: list[Constraint] = field(default_factory=list)
    bounds: dict[str, tuple[float | None, float | None]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    variables: list[str] = field(default_factory=list)

    def counts(self) -> dict:
        return {"variables": len(self.variables), "binaries": len(self.binaries),
                "constraints": len(self.constraints)}


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def build_milp(inst: Instance) -> LpModel:
    cat = inst.catalog
    beta, beta0 = inst.vehicle.range, inst.vehicle.initial_sof
    longest = max((p.length for paths in cat.entries.values() for p in paths), default=0.0)
    M = beta + longest
    cands = set(inst.candidates)
    nodes = inst.network.nodes

    X = {i: f"X_{i}" for i in inst.candidates}
    z = {r: f"z_{r}" for r in nodes}
    model = LpModel("refuel_station_location", "Maximize",
                    [(inst.probabilities[r], z[r]) for r in nodes])
    variables = list(X.values())
    cons = model.constraints
    fuel = {i: [] for i in inst.candidates}  # l-variables grouped by station node
    cover_rows = []
    for r, s in cat.pairs():
        ys = f"y_{r}_{s}"
        Ys = []
        for k, path in enumerate(cat[(r, s)], 1):
            Y = f"Y_{r}_{s}_{k}"
            Ys.append(Y)
            B = [f"B_{r}_{s}_{k}_{p}" for p in range(len(path.nodes))]
            L = [f"l_{r}_{s}_{k}_{p}" for p in range(len(path.nodes))]
            variables += [Y] + B + L
            for p, node in enumerate(path.nodes):
                cons.append(Constraint(f"cap_{r}_{s}_{k}_{p}", [(1, B[p]), (1, L[p]), (M, Y)], "<=", beta + M))
                if node in cands:
                    fuel[node].append(L[p])
                else:
                    model.bounds[L[p]] = (0.0, 0.0)
            for p, d in enumerate(path.legs):
                cons.append(Constraint(f"flowup_{r}_{s}_{k}_{p}",
                                       [(1, B[p]), (1, L[p]), (-1, B[p + 1]), (M, Y)], "<=", d + M))
                cons.append(Constraint(f"flowdn_{r}_{s}_{k}_{p}",
                                       [(-1, B[p]), (-1, L[p]), (1, B[p + 1]), (M, Y)], "<=", M - d))
            cons.append(Constraint(f"start_{r}_{s}_{k}", [(1, B[0])], "=", beta0))
        variables.append(ys)
        cover_rows.append((r, s, ys, Ys))
    for i in inst.candidates:
        # each l is at most beta + M on any path, so this M never binds when X_i = 1
        Mi = (beta + M) * max(len(fuel[i]), 1)
        cons.append(Constraint(f"station_{i}", [(1, l) for l in fuel[i]] + [(-Mi, X[i])], "<=", 0.0))
    for r, s, ys, Ys in cover_rows:
        cons.append(Constraint(f"uselink_{r}_{s}", [(1, Y) for Y in Ys] + [(-max(M, len(Ys)), ys)], "<=", 0.0))
        cons.append(Constraint(f"useany_{r}_{s}", [(1, ys)] + [(-1, Y) for Y in Ys], "<=", 0.0))
    for r in nodes:
        ys = [f"y_{r}_{s}" for s in nodes if (r, s) in cat.entries]
        cons.append(Constraint(f"cover_{r}", [(inst.denominators[r], z[r])] + [(-1, y) for y in ys], "=", 0.0))
        model.bounds[z[r]] = (0.0, 1.0)
    cons.append(Constraint("budget", [(inst.costs[i], X[i]) for i in inst.candidates], "<=", inst.budget))
    variables += list(z.values())
    model.variables = variables
    model.binaries = [v for v in variables if v[0] in "XYy"]
    return model


def _expr(terms: list[tuple[float, str]]) -> list[str]:
    toks = []
    for c, v in terms:
        sign = "-" if c < 0 else "+"
        toks.append(f"{sign} {_num(abs(c))} {v}")
    if toks and toks[0].startswith("+ "):
        toks[0] = toks[0][2:]
    return toks


def _wrap(head: str, toks: list[str]) -> list[str]:
    lines = []
    for start in range(0, max(len(toks), 1), _TERMS_PER_LINE):
        chunk = " ".join(toks[start:start + _TERMS_PER_LINE])
        lines.append((head if start == 0 else "   ") + chunk)
    return lines


def write_lp(model: LpModel) -> str:
    out = [f"\\ Problem: {model.name}", model.sense]
    out += _wrap(" obj: ", _expr(model.objective))
    out.append("Subject To")
    for c in model.constraints:
        toks = _expr(c.coefs) + [f"{c.sense} {_num(c.rhs)}"]
        out += _wrap(f" {c.name}: ", toks)
    out.append("Bounds")
    for v, (lo, hi) in model.bounds.items():
        if lo == hi:
            out.append(f" {v} = {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {v} <= {_num(hi)}")
    out.append("Binaries")
    for start in range(0, len(model.binaries), 10):
        out.append(" " + " ".join(model.binaries[start:start + 10]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_milp(inst: Instance, sink: IO[str]) -> LpModel:
    model = build_milp(inst)
    sink.write(write_lp(model))
    return model


_SECTION = {"maximize": "obj", "minimize": "obj", "subject to": "st", "bounds": "bounds",
            "binaries": "bin", "end": "end"}
_NAME = re.compile(r"^\s*([A-Za-z_][\w.]*):\s*(.*)$")


def _terms(tokens: list[str]) -> list[tuple[float, str]]:
    terms, sign, i = [], 1.0, 0
    while i < len(tokens):
        t = tokens[i]
        if t in "+-":
            sign = -1.0 if t == "-" else 1.0
            i += 1
            continue
        coef = float(t)
        terms.append((sign * coef, tokens[i + 1]))
        sign = 1.0
        i += 2
    return terms


def read_lp(text: str) -> LpModel:
    name, sense, section = "", "", None
    obj_toks: list[str] = []
    rows: list[tuple[str, list[str]]] = []
    bounds: dict = {}
    binaries: list[str] = []
    for line in text.splitlines():
        if line.startswith("\\"):
            if line.startswith("\\ Problem: "):
                name = line[len("\\ Problem: "):]
            continue
        key = line.strip().lower()
        if key in _SECTION:
            section = _SECTION[key]
            if section == "obj":
                sense = line.strip()
            continue
        if section == "obj":
            m = _NAME.match(line)
            obj_toks += (m.group(2) if m else line).split()
        elif section == "st":
            m = _NAME.match(line)
            if m and not line.startswith("   "):
                rows.append((m.group(1), m.group(2).split()))
            else:
                rows[-1][1].extend(line.split())
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 3 and toks[1] == "=":
                bounds[toks[0]] = (float(toks[2]), float(toks[2]))
            elif len(toks) == 5:
                bounds[toks[2]] = (float(toks[0]), float(toks[4]))
            else:
                raise ValueError(f"unsupported bound line {line!r}")
        elif section == "bin":
            binaries += line.split()
    model = LpModel(name, sense, _terms(obj_toks))
    seen: dict[str, None] = {}
    for _, v in model.objective:
        seen.setdefault(v)
    for cname, toks in rows:
        sense_i = next(i for i, t in enumerate(toks) if t in ("<=", ">=", "="))
        coefs = _terms(toks[:sense_i])
        model.constraints.append(Constraint(cname, coefs, toks[sense_i], float(toks[sense_i + 1])))
        for _, v in coefs:
            seen.setdefault(v)
    model.bounds = bounds
    model.binaries = binaries
    model.variables = list(seen)
    return model


def solve_with_scipy(model: LpModel):
    """Solve an LpModel with SciPy's HiGHS MILP interface; returns (objective, values)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    names = model.variables
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for coef, v in model.objective:
        c[idx[v]] += coef
    if model.sense.lower() == "maximize":
        c = -c
    A = lil_matrix((len(model.constraints), n))
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for k, con in enumerate(model.constraints):
        for coef, v in con.coefs:
            A[k, idx[v]] += coef
        if con.sense in ("<=", "="):
            hi[k] = con.rhs
        if con.sense in (">=", "="):
            lo[k] = con.rhs
    vlo, vhi = np.zeros(n), np.full(n, np.inf)
    integrality = np.zeros(n)
    for v in model.binaries:
        vhi[idx[v]] = 1.0
        integrality[idx[v]] = 1
    for v, (a, b) in model.bounds.items():
        vlo[idx[v]], vhi[idx[v]] = a, b
    res = milp(c, constraints=LinearConstraint(A.tocsr(), lo, hi), integrality=integrality,
               bounds=Bounds(vlo, vhi))
    if not res.success:
        raise RuntimeError(res.message)
    value = -res.fun if model.sense.lower() == "maximize" else res.fun
    return value, dict(zip(names, res.x))
