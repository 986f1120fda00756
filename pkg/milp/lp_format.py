"""Writer for a subset of the CPLEX LP text format.

Grammar produced (one item per line)::

    \\ <model name>
    Minimize
     obj: <term> <term> ... [+ <constant>]
    Subject To
     <row name>: <term> ... <= | = | >= <rhs>
    Bounds
     <lower> <= <var> <= <upper>
    Binaries
     <var> ...
    End

``<term>`` is ``+ <coef> <var>`` or ``- <coef> <var>``. Variable names are
sanitized to ``[A-Za-z0-9_.]`` and made unique.
"""

import re
from typing import List

from .model import MilpModel, Sense, VarKind

_UNSAFE = re.compile(r"[^A-Za-z0-9_.]")


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _names(model: MilpModel) -> List[str]:
    seen = set()
    names = []
    for i, var in enumerate(model.variables):
        name = _UNSAFE.sub("_", var.name) or f"x{i}"
        if not name[0].isalpha():
            name = "v_" + name
        if name in seen:
            name = f"{name}__{i}"
        seen.add(name)
        names.append(name)
    return names


def _terms(pairs, names) -> str:
    parts = []
    for index, coef in pairs:
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {names[index]}")
    return " ".join(parts) if parts else "0 " + names[0] if names else "0"


def write_lp(model: MilpModel) -> str:
    names = _names(model)
    lines = [f"\\ {model.name}", "Minimize"]
    objective = _terms(sorted(model.objective.items()), names)
    if model.objective_constant:
        objective += f" + {_fmt(model.objective_constant)} __const"
    lines.append(f" obj: {objective}")
    lines.append("Subject To")
    for k, con in enumerate(model.constraints):
        sense = {Sense.LE: "<=", Sense.EQ: "=", Sense.GE: ">="}[con.sense]
        label = _UNSAFE.sub("_", con.name) if con.name else f"c{k}"
        lines.append(f" {label}_{k}: {_terms(con.terms, names)} {sense} {_fmt(con.rhs)}")
    lines.append("Bounds")
    for name, var in zip(names, model.variables):
        if var.kind is VarKind.CONTINUOUS or (var.lower, var.upper) != (0.0, 1.0):
            lines.append(f" {_fmt(var.lower)} <= {name} <= {_fmt(var.upper)}")
    if model.objective_constant:
        lines.append(" __const = 1")
    binaries = [names[i] for i in model.binary_indices()]
    if binaries:
        lines.append("Binaries")
        for start in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[start:start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"
