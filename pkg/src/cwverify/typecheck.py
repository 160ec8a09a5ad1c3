"""Type checking for programs and expressions.

`typecheck` validates a whole program and returns a TypedProgram wrapper;
violations are collected (not raised) so several errors surface at once.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import printer
from .syntax import (
    Add, Aggregate, And, ArrayType, Assert, Assign, Assume, Block, BoolLit,
    BOOL, ConstArray, Eq, Exists, Expr, Forall, If, INT, IntLit, IntType,
    Lambda, Leq, Mul, Not, Or, Program, Select, Skip, Stmt, Store, Type, Var,
    While, statements, stmt_exprs,
)


@dataclass(frozen=True)
class TypeError_:
    """One typing violation: the offending node and the violated rule."""

    node: str
    rule: str

    def __str__(self) -> str:
        return f"{self.node}: {self.rule}"


class TypeErrors(Exception):
    def __init__(self, errors: list[TypeError_]):
        super().__init__("; ".join(map(str, errors)))
        self.errors = errors


@dataclass
class TypedProgram:
    """A program known to typecheck, with its variable typing environment."""

    program: Program
    env: dict[str, Type]

    def type_of(self, e: Expr) -> Type:
        typ = infer_type(e, self.env)
        if typ is None:
            raise TypeErrors([TypeError_(printer.print_expr(e), "ill-typed")])
        return typ


class _Checker:
    def __init__(self, env: dict[str, Type]):
        self.env = env
        self.errors: list[TypeError_] = []

    def fail(self, node: Expr | Stmt, rule: str) -> None:
        if isinstance(node, (Block, Skip, Assign, Assert, Assume, If, While)):
            shown = type(node).__name__.lower()
            for e in stmt_exprs(node):
                shown += f" {printer.print_expr(e)}"
        else:
            shown = printer.print_expr(node)
        self.errors.append(TypeError_(shown, rule))

    def expr(self, e: Expr, bound: dict[str, Type]) -> Type | None:
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, Var):
            typ = bound.get(e.name, self.env.get(e.name))
            if typ is None:
                self.fail(e, "variable not declared")
            return typ
        if isinstance(e, Eq):
            lt, rt = self.expr(e.lhs, bound), self.expr(e.rhs, bound)
            if lt is not None and rt is not None and lt != rt:
                self.fail(e, "== requires equal types on both sides")
            return BOOL
        if isinstance(e, Leq):
            self.want(e.lhs, INT, bound, "<= requires Int operands")
            self.want(e.rhs, INT, bound, "<= requires Int operands")
            return BOOL
        if isinstance(e, (Add, Mul)):
            op = "+" if isinstance(e, Add) else "*"
            self.want(e.lhs, INT, bound, f"{op} requires Int operands")
            self.want(e.rhs, INT, bound, f"{op} requires Int operands")
            return INT
        if isinstance(e, Not):
            self.want(e.e, BOOL, bound, "! requires a Bool operand")
            return BOOL
        if isinstance(e, (And, Or)):
            op = "&&" if isinstance(e, And) else "||"
            self.want(e.lhs, BOOL, bound, f"{op} requires Bool operands")
            self.want(e.rhs, BOOL, bound, f"{op} requires Bool operands")
            return BOOL
        if isinstance(e, Select):
            at = self.expr(e.array, bound)
            self.want(e.index, INT, bound, "select index must be Int")
            if at is None:
                return None
            if not isinstance(at, ArrayType):
                self.fail(e, "select requires an array")
                return None
            return at.elem
        if isinstance(e, Store):
            at = self.expr(e.array, bound)
            self.want(e.index, INT, bound, "store index must be Int")
            vt = self.expr(e.value, bound)
            if at is None:
                return None
            if not isinstance(at, ArrayType):
                self.fail(e, "store requires an array")
                return None
            if vt is not None and vt != at.elem:
                self.fail(e, "store value must match the element type")
            return at
        if isinstance(e, (Forall, Exists)):
            kw = "forall" if isinstance(e, Forall) else "exists"
            at = self.expr(e.array, bound)
            self.want(e.lo, INT, bound, f"{kw} bounds must be Int")
            self.want(e.hi, INT, bound, f"{kw} bounds must be Int")
            elem: Type | None = None
            if at is None:
                pass
            elif not isinstance(at, ArrayType):
                self.fail(e, f"{kw} requires an array")
            else:
                elem = at.elem
            if elem is not None:
                self.binder(e.binder, elem, bound, kw)
            return BOOL
        if isinstance(e, Aggregate):
            at = self.expr(e.array, bound)
            self.want(e.lo, INT, bound, "aggregate bounds must be Int")
            self.want(e.hi, INT, bound, "aggregate bounds must be Int")
            if at is not None and at != ArrayType(INT):
                self.fail(e, "aggregate requires an Array Int")
            if e.hom.predicate is not None:
                self.binder(e.hom.predicate, INT, bound, "count")
            return INT
        if isinstance(e, ConstArray):
            vt = self.expr(e.value, bound)
            self.want(e.size, INT, bound, "const size must be Int")
            if vt is None:
                return None
            return ArrayType(vt)
        raise TypeError(f"not an expression: {e!r}")

    def binder(self, lam: Lambda, elem: Type, bound: dict[str, Type],
               kw: str) -> None:
        inner = dict(bound)
        inner[lam.value_param] = elem
        inner[lam.index_param] = INT
        bt = self.expr(lam.body, inner)
        if bt is not None and bt != BOOL:
            self.fail(lam.body, f"{kw} predicate body must be Bool")

    def want(self, e: Expr, expected: Type, bound: dict[str, Type],
             rule: str) -> None:
        actual = self.expr(e, bound)
        if actual is not None and actual != expected:
            self.fail(e, rule)

    def stmt(self, s: Stmt) -> None:
        if isinstance(s, Block):
            for c in s.stmts:
                self.stmt(c)
        elif isinstance(s, Assign):
            declared = self.env.get(s.target)
            if declared is None:
                self.fail(s, "assignment target not declared")
                self.expr(s.rhs, {})
            else:
                rt = self.expr(s.rhs, {})
                if rt is not None and rt != declared:
                    self.fail(s, "assignment type mismatch")
        elif isinstance(s, (Assert, Assume)):
            self.want(s.cond, BOOL, {}, "condition must be Bool")
        elif isinstance(s, If):
            self.want(s.cond, BOOL, {}, "condition must be Bool")
            self.stmt(s.then_b)
            self.stmt(s.else_b)
        elif isinstance(s, While):
            self.want(s.cond, BOOL, {}, "condition must be Bool")
            self.stmt(s.body)


def infer_type(e: Expr, env: dict[str, Type]) -> Type | None:
    """Type of a closed expression under env, or None if ill-typed."""
    checker = _Checker(env)
    typ = checker.expr(e, {})
    if checker.errors:
        return None
    return typ


def typecheck(program: Program) -> TypedProgram:
    """Validate a program; raises TypeErrors listing all violations."""
    errors: list[TypeError_] = []
    env: dict[str, Type] = {}
    for d in program.decls:
        if d.name in env:
            errors.append(TypeError_(d.name, "duplicate declaration"))
        env[d.name] = d.type
    labels: set[int] = set()
    for s in statements(program.body):
        if s.label in labels:
            errors.append(TypeError_(f"label {s.label}", "duplicate label"))
        labels.add(s.label)
    checker = _Checker(env)
    checker.stmt(program.body)
    errors.extend(checker.errors)
    if errors:
        raise TypeErrors(errors)
    return TypedProgram(program, env)
