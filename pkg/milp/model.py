import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class VarId:
    """Handle to a variable; only meaningful for the model that issued it."""

    index: int
    model_token: int = field(repr=False, compare=True)


@dataclass(frozen=True)
class Variable:
    kind: VarKind
    lower: float
    upper: float
    name: str


@dataclass(frozen=True)
class Constraint:
    terms: Tuple[Tuple[int, float], ...]
    sense: Sense
    rhs: float
    name: str = ""


Terms = Union[Mapping[VarId, float], Iterable[Tuple[VarId, float]]]


class LinExpr:
    """Affine expression sum(coef * var) + constant over one model's variables."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Dict[VarId, float]] = None, constant: float = 0.0):
        self.terms: Dict[VarId, float] = dict(terms or {})
        self.constant = float(constant)

    @classmethod
    def of(cls, var: VarId, coef: float = 1.0) -> "LinExpr":
        return cls({var: float(coef)})

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def add_term(self, var: VarId, coef: float) -> "LinExpr":
        self.terms[var] = self.terms.get(var, 0.0) + float(coef)
        return self

    def __add__(self, other) -> "LinExpr":
        out = self.copy()
        if isinstance(other, LinExpr):
            for var, coef in other.terms.items():
                out.add_term(var, coef)
            out.constant += other.constant
        elif isinstance(other, VarId):
            out.add_term(other, 1.0)
        else:
            out.constant += float(other)
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({v: -c for v, c in self.terms.items()}, -self.constant)

    def __sub__(self, other) -> "LinExpr":
        if isinstance(other, VarId):
            other = LinExpr.of(other)
        if isinstance(other, LinExpr):
            return self + (-other)
        return self + (-float(other))

    def __rsub__(self, other) -> "LinExpr":
        return (-self) + other

    def __mul__(self, scalar: float) -> "LinExpr":
        scalar = float(scalar)
        return LinExpr({v: c * scalar for v, c in self.terms.items()}, self.constant * scalar)

    __rmul__ = __mul__

    def value(self, values: Mapping[VarId, float]) -> float:
        return self.constant + math.fsum(c * values[v] for v, c in self.terms.items())

    def __repr__(self) -> str:
        return f"LinExpr({len(self.terms)} terms, constant={self.constant:g})"


class MilpModel:
    """Minimization model over bounded continuous and binary variables."""

    _tokens = itertools.count(1)

    def __init__(self, name: str = "model"):
        self._token = next(MilpModel._tokens)
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self.objective_constant = 0.0

    # ------------------------------------------------------------------
    # Building
    # ------------------------------------------------------------------

    def add_variable(
        self,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: float = 1.0,
        name: str = "",
    ) -> VarId:
        kind = VarKind(kind)
        lower, upper = float(lower), float(upper)
        if kind is VarKind.BINARY:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
            if lower not in (0.0, 1.0) or upper not in (0.0, 1.0):
                raise ValueError(f"binary bounds must be 0 or 1, got [{lower}, {upper}]")
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValueError(f"variable {name!r} needs finite bounds")
        if lower > upper:
            raise ValueError(f"variable {name!r} has inverted bounds [{lower}, {upper}]")
        index = len(self.variables)
        self.variables.append(Variable(kind, lower, upper, name or f"x{index}"))
        return VarId(index, self._token)

    def add_binary(self, name: str = "") -> VarId:
        return self.add_variable(VarKind.BINARY, 0.0, 1.0, name)

    def add_continuous(self, lower: float, upper: float, name: str = "") -> VarId:
        return self.add_variable(VarKind.CONTINUOUS, lower, upper, name)

    def add_constraint(self, terms: Terms, sense: Union[Sense, str], rhs: float, name: str = "") -> int:
        """Record sum(terms) <sense> rhs; duplicate variables are merged."""
        merged: Dict[int, float] = {}
        for var, coef in self._iter_terms(terms):
            merged[var.index] = merged.get(var.index, 0.0) + float(coef)
        row = Constraint(tuple(sorted(merged.items())), Sense(sense), float(rhs), name)
        self.constraints.append(row)
        return len(self.constraints) - 1

    def add_expr_constraint(self, expr: LinExpr, sense: Union[Sense, str], rhs: float = 0.0, name: str = "") -> int:
        """Record expr <sense> rhs with the expression constant moved to the right."""
        return self.add_constraint(expr.terms, sense, float(rhs) - expr.constant, name)

    def set_objective(self, terms: Terms, constant: float = 0.0) -> None:
        merged: Dict[int, float] = {}
        for var, coef in self._iter_terms(terms):
            merged[var.index] = merged.get(var.index, 0.0) + float(coef)
        self.objective = merged
        self.objective_constant = float(constant)

    def set_objective_expr(self, expr: LinExpr) -> None:
        self.set_objective(expr.terms, expr.constant)

    def _iter_terms(self, terms: Terms):
        items = terms.items() if isinstance(terms, Mapping) else terms
        for var, coef in items:
            if not isinstance(var, VarId) or var.model_token != self._token or not 0 <= var.index < len(self.variables):
                raise ValueError(f"variable {var!r} was not issued by model {self.name!r}")
            yield var, coef

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def var_id(self, index: int) -> VarId:
        return VarId(index, self._token)

    def binary_indices(self) -> List[int]:
        return [i for i, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    def bounds_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.array([v.lower for v in self.variables], dtype=float)
        upper = np.array([v.upper for v in self.variables], dtype=float)
        return lower, upper

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_variables)
        for index, coef in self.objective.items():
            c[index] = coef
        return c

    def to_arrays(self):
        """Dense (A_ub, b_ub, A_eq, b_eq) with >= rows negated into <= rows."""
        n = self.num_variables
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for con in self.constraints:
            row = np.zeros(n)
            for index, coef in con.terms:
                row[index] = coef
            if con.sense is Sense.EQ:
                eq_rows.append(row)
                eq_rhs.append(con.rhs)
            elif con.sense is Sense.LE:
                ub_rows.append(row)
                ub_rhs.append(con.rhs)
            else:
                ub_rows.append(-row)
                ub_rhs.append(-con.rhs)
        a_ub = np.array(ub_rows).reshape(len(ub_rows), n)
        a_eq = np.array(eq_rows).reshape(len(eq_rows), n)
        return a_ub, np.array(ub_rhs, dtype=float), a_eq, np.array(eq_rhs, dtype=float)

    def objective_value(self, values) -> float:
        return self.objective_constant + math.fsum(c * values[i] for i, c in self.objective.items())

    def max_violation(self, values) -> float:
        """Largest absolute violation of any row or bound at ``values`` (indexed by position)."""
        worst = 0.0
        for con in self.constraints:
            lhs = math.fsum(coef * values[i] for i, coef in con.terms)
            if con.sense is Sense.LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        for i, var in enumerate(self.variables):
            worst = max(worst, var.lower - values[i], values[i] - var.upper)
        return worst

    def __repr__(self) -> str:
        return (
            f"MilpModel({self.name!r}, vars={self.num_variables}, "
            f"binaries={len(self.binary_indices())}, rows={len(self.constraints)})"
        )
