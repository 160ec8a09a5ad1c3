"""AST for the core language: types, expressions, statements, programs.

Arrays are total functions over the integers; integer arithmetic is
arbitrary precision.  Every statement carries a control-point label that
is unique within its program and an origin label pointing back at the
statement it descends from (transformations allocate fresh labels but
keep origins).  Labels never participate in structural equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

Label = int

NO_LABEL: Label = -1

# Distinguished constants standing in for -inf / +inf.  Chosen far beyond
# anything desk-scale programs manipulate; printed as "-inf" / "+inf".
MAX_SENTINEL: int = 1 << 256
MIN_SENTINEL: int = -(1 << 256)

TEMP_PREFIX = "__t"


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class ArrayType:
    elem: "Type"

    def __str__(self) -> str:
        return f"Array {self.elem}"


Type = Union[IntType, BoolType, ArrayType]

INT = IntType()
BOOL = BoolType()
ARRAY_INT = ArrayType(INT)


def default_init(typ: Type) -> "Expr":
    """Expression for the default value a declaration starts out with."""
    if isinstance(typ, IntType):
        return IntLit(0)
    if isinstance(typ, BoolType):
        return BoolLit(False)
    return ConstArray(default_init(typ.elem), IntLit(0))


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Eq:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Leq:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Not:
    e: "Expr"


@dataclass(frozen=True)
class And:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Or:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Add:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Mul:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Select:
    array: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class Store:
    array: "Expr"
    index: "Expr"
    value: "Expr"


@dataclass(frozen=True)
class Lambda:
    """Binary predicate / mapping over (element value, element index)."""

    value_param: str
    index_param: str
    body: "Expr"


@dataclass(frozen=True)
class HomId:
    """Name of a built-in monoid homomorphism for array aggregation."""

    name: str
    predicate: Optional[Lambda] = None

    def __str__(self) -> str:
        return self.name


SUM = HomId("sum")
MAX = HomId("max")
MIN = HomId("min")


def count_hom(predicate: Lambda) -> HomId:
    return HomId("count", predicate)


@dataclass(frozen=True)
class Forall:
    array: "Expr"
    lo: "Expr"
    hi: "Expr"
    binder: Lambda


@dataclass(frozen=True)
class Exists:
    array: "Expr"
    lo: "Expr"
    hi: "Expr"
    binder: Lambda


@dataclass(frozen=True)
class Aggregate:
    hom: HomId
    array: "Expr"
    lo: "Expr"
    hi: "Expr"


@dataclass(frozen=True)
class ConstArray:
    """Array that is `value` everywhere; `size` is documentation only."""

    value: "Expr"
    size: "Expr"


Expr = Union[
    IntLit, BoolLit, Var, Eq, Leq, Not, And, Or, Add, Mul,
    Select, Store, Forall, Exists, Aggregate, ConstArray,
]

_BINARY = (Eq, Leq, And, Or, Add, Mul)


def children(e: Expr) -> tuple[Expr, ...]:
    """Direct sub-expressions, lambda bodies excluded."""
    if isinstance(e, _BINARY):
        return (e.lhs, e.rhs)
    if isinstance(e, Not):
        return (e.e,)
    if isinstance(e, Select):
        return (e.array, e.index)
    if isinstance(e, Store):
        return (e.array, e.index, e.value)
    if isinstance(e, (Forall, Exists)):
        return (e.array, e.lo, e.hi)
    if isinstance(e, Aggregate):
        return (e.array, e.lo, e.hi)
    if isinstance(e, ConstArray):
        return (e.value, e.size)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """All sub-expressions in pre-order, descending into lambda bodies."""
    yield e
    for c in children(e):
        yield from walk(c)
    if isinstance(e, (Forall, Exists)):
        yield from walk(e.binder.body)
    if isinstance(e, Aggregate) and e.hom.predicate is not None:
        yield from walk(e.hom.predicate.body)


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    _free_vars(e, out, frozenset())
    return out


def _free_vars(e: Expr, out: set[str], bound: frozenset[str]) -> None:
    if isinstance(e, Var):
        if e.name not in bound:
            out.add(e.name)
        return
    for c in children(e):
        _free_vars(c, out, bound)
    binders = []
    if isinstance(e, (Forall, Exists)):
        binders.append(e.binder)
    if isinstance(e, Aggregate) and e.hom.predicate is not None:
        binders.append(e.hom.predicate)
    for lam in binders:
        _free_vars(lam.body, out, bound | {lam.value_param, lam.index_param})


def is_ground(e: Expr) -> bool:
    """True when the expression references no variables at all."""
    return not free_vars(e)


def subst(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Capture-avoiding substitution of free variables."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (IntLit, BoolLit)):
        return e
    if isinstance(e, _BINARY):
        return type(e)(subst(e.lhs, mapping), subst(e.rhs, mapping))
    if isinstance(e, Not):
        return Not(subst(e.e, mapping))
    if isinstance(e, Select):
        return Select(subst(e.array, mapping), subst(e.index, mapping))
    if isinstance(e, Store):
        return Store(subst(e.array, mapping), subst(e.index, mapping),
                     subst(e.value, mapping))
    if isinstance(e, (Forall, Exists)):
        lam = _subst_lambda(e.binder, mapping)
        return type(e)(subst(e.array, mapping), subst(e.lo, mapping),
                       subst(e.hi, mapping), lam)
    if isinstance(e, Aggregate):
        hom = e.hom
        if hom.predicate is not None:
            hom = HomId(hom.name, _subst_lambda(hom.predicate, mapping))
        return Aggregate(hom, subst(e.array, mapping), subst(e.lo, mapping),
                         subst(e.hi, mapping))
    if isinstance(e, ConstArray):
        return ConstArray(subst(e.value, mapping), subst(e.size, mapping))
    raise TypeError(f"not an expression: {e!r}")


def _subst_lambda(lam: Lambda, mapping: dict[str, Expr]) -> Lambda:
    inner = {k: v for k, v in mapping.items()
             if k not in (lam.value_param, lam.index_param)}
    # Parameters shadow; renaming is unnecessary because substituted terms
    # in this code base never mention reserved parameter names.
    return Lambda(lam.value_param, lam.index_param, subst(lam.body, inner))


def apply_lambda(lam: Lambda, value: Expr, index: Expr) -> Expr:
    return subst(lam.body, {lam.value_param: value, lam.index_param: index})


def alpha_equal(a: Lambda, b: Lambda) -> bool:
    """Lambda equality modulo parameter names."""
    canon = Lambda("$v", "$i", apply_lambda(a, Var("$v"), Var("$i")))
    other = Lambda("$v", "$i", apply_lambda(b, Var("$v"), Var("$i")))
    return canon == other


def fold_ground(e: Expr) -> Expr:
    """Light constant folding over literal arithmetic and boolean atoms.

    Keeps instantiated rewrite schemas readable (2*1*i + 1*1 becomes
    2*i + 1) and gives the parser a canonical form for `-e` and `a - b`.
    """
    if isinstance(e, (IntLit, BoolLit, Var)):
        return e
    if isinstance(e, _BINARY):
        lhs, rhs = fold_ground(e.lhs), fold_ground(e.rhs)
        if isinstance(e, Add) and isinstance(lhs, IntLit) and isinstance(rhs, IntLit):
            return IntLit(lhs.value + rhs.value)
        if isinstance(e, Mul):
            if isinstance(lhs, IntLit) and isinstance(rhs, IntLit):
                return IntLit(lhs.value * rhs.value)
            if isinstance(lhs, IntLit) and lhs.value == 1:
                return rhs
            if isinstance(rhs, IntLit) and rhs.value == 1:
                return lhs
            # re-associate literal coefficients: a * (b * e) -> (a*b) * e
            if isinstance(lhs, IntLit) and isinstance(rhs, Mul) and \
                    isinstance(rhs.lhs, IntLit):
                return Mul(IntLit(lhs.value * rhs.lhs.value), rhs.rhs)
        if isinstance(e, Add) and isinstance(rhs, IntLit) and rhs.value == 0:
            return lhs
        if isinstance(e, Add) and isinstance(lhs, IntLit) and lhs.value == 0:
            return rhs
        return type(e)(lhs, rhs)
    if isinstance(e, Not):
        inner = fold_ground(e.e)
        if isinstance(inner, BoolLit):
            return BoolLit(not inner.value)
        return Not(inner)
    if isinstance(e, Select):
        return Select(fold_ground(e.array), fold_ground(e.index))
    if isinstance(e, Store):
        return Store(fold_ground(e.array), fold_ground(e.index), fold_ground(e.value))
    if isinstance(e, (Forall, Exists)):
        lam = Lambda(e.binder.value_param, e.binder.index_param,
                     fold_ground(e.binder.body))
        return type(e)(fold_ground(e.array), fold_ground(e.lo),
                       fold_ground(e.hi), lam)
    if isinstance(e, Aggregate):
        hom = e.hom
        if hom.predicate is not None:
            hom = HomId(hom.name, Lambda(hom.predicate.value_param,
                                         hom.predicate.index_param,
                                         fold_ground(hom.predicate.body)))
        return Aggregate(hom, fold_ground(e.array), fold_ground(e.lo),
                         fold_ground(e.hi))
    if isinstance(e, ConstArray):
        return ConstArray(fold_ground(e.value), fold_ground(e.size))
    raise TypeError(f"not an expression: {e!r}")


def conj(parts: list[Expr]) -> Expr:
    """Left-associated conjunction; true when empty."""
    if not parts:
        return BoolLit(True)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def conjuncts(e: Expr) -> list[Expr]:
    """Flatten a conjunction into its atoms."""
    if isinstance(e, And):
        return conjuncts(e.lhs) + conjuncts(e.rhs)
    return [e]


def sub(a: Expr, b: Expr) -> Expr:
    return fold_ground(Add(a, Mul(IntLit(-1), b)))


def lt(a: Expr, b: Expr) -> Expr:
    return Not(Leq(b, a))


def gt(a: Expr, b: Expr) -> Expr:
    return Not(Leq(a, b))


def geq(a: Expr, b: Expr) -> Expr:
    return Leq(b, a)


# ---------------------------------------------------------------------------
# Statements and programs
# ---------------------------------------------------------------------------

def _label_field() -> Label:
    return NO_LABEL


@dataclass
class Skip:
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class Assign:
    target: str
    rhs: Expr
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class Assert:
    cond: Expr
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class Assume:
    cond: Expr
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class If:
    cond: Expr
    then_b: "Block"
    else_b: "Block"
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class While:
    cond: Expr
    body: "Block"
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


@dataclass
class Block:
    stmts: list["Stmt"] = field(default_factory=list)
    label: Label = field(default_factory=_label_field, compare=False)
    origin: Label = field(default_factory=_label_field, compare=False)


Stmt = Union[Skip, Assign, Assert, Assume, If, While, Block]


@dataclass(frozen=True)
class Decl:
    name: str
    type: Type
    is_input: bool = False  # declared with a `nondet` initializer


@dataclass
class Program:
    decls: list[Decl]
    body: Block

    def decl_map(self) -> dict[str, Type]:
        return {d.name: d.type for d in self.decls}

    def input_names(self) -> list[str]:
        return [d.name for d in self.decls if d.is_input]

    def labels(self) -> set[Label]:
        return {s.label for s in statements(self.body)}

    def max_label(self) -> Label:
        labels = self.labels()
        return max(labels) if labels else NO_LABEL

    def statement_at(self, label: Label) -> Optional[Stmt]:
        for s in statements(self.body):
            if s.label == label:
                return s
        return None

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Program) and self.decls == other.decls
                and self.body == other.body)


def statements(s: Stmt) -> Iterator[Stmt]:
    """All statements in pre-order, including the given one."""
    yield s
    if isinstance(s, Block):
        for child in s.stmts:
            yield from statements(child)
    elif isinstance(s, If):
        yield from statements(s.then_b)
        yield from statements(s.else_b)
    elif isinstance(s, While):
        yield from statements(s.body)


def stmt_exprs(s: Stmt) -> tuple[Expr, ...]:
    if isinstance(s, Assign):
        return (s.rhs,)
    if isinstance(s, (Assert, Assume, If, While)):
        return (s.cond,)
    return ()


class LabelAllocator:
    """Deterministic fresh-label source for program transformations."""

    def __init__(self, start: Label):
        self._next = start + 1

    def fresh(self) -> Label:
        lbl = self._next
        self._next += 1
        return lbl


def relabel(program: Program) -> Program:
    """Assign labels 0.. in pre-order; origins are reset to the labels."""
    counter = 0

    def go(s: Stmt) -> None:
        nonlocal counter
        s.label = counter
        s.origin = counter
        counter += 1
        if isinstance(s, Block):
            for c in s.stmts:
                go(c)
        elif isinstance(s, If):
            go(s.then_b)
            go(s.else_b)
        elif isinstance(s, While):
            go(s.body)

    go(program.body)
    return program


def copy_stmt(s: Stmt) -> Stmt:
    """Deep copy preserving labels and origins."""
    if isinstance(s, Block):
        return Block([copy_stmt(c) for c in s.stmts], s.label, s.origin)
    if isinstance(s, If):
        return If(s.cond, copy_stmt(s.then_b), copy_stmt(s.else_b), s.label, s.origin)
    if isinstance(s, While):
        return While(s.cond, copy_stmt(s.body), s.label, s.origin)
    return replace(s)


def copy_program(p: Program) -> Program:
    return Program(list(p.decls), copy_stmt(p.body))
