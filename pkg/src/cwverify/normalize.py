"""Normalization: array and quantifier operations become whole right-hand
sides of simple assignments with variable-or-literal arguments.

After `normalize`, Select/Store/Forall/Exists/Aggregate/ConstArray appear
only as `x = <node>(atoms...)`.  Loop and branch conditions have their
extracted parts computed into reserved `__t<k>` temporaries before the
test; loop bodies recompute them before the back edge.  The result is
observationally equivalent to the input when temporaries are projected
away, and normalization is idempotent.
"""

from __future__ import annotations

from .syntax import (
    Aggregate, Assert, Assign, Assume, Block, BoolLit, ConstArray, Decl,
    Exists, Expr, Forall, HomId, If, IntLit, Label, LabelAllocator, Program,
    Select, Skip, Stmt, Store, TEMP_PREFIX, Var, While, children, copy_stmt,
)
from .typecheck import TypedProgram, infer_type, typecheck

_EXTRACTABLE = (Select, Store, Forall, Exists, Aggregate, ConstArray)


def is_atom(e: Expr) -> bool:
    return isinstance(e, (Var, IntLit, BoolLit))


def is_normal_assign(s: Stmt) -> bool:
    """Assignment whose RHS is already in normal form."""
    if not isinstance(s, Assign):
        return False
    rhs = s.rhs
    if isinstance(rhs, _EXTRACTABLE):
        return all(is_atom(c) for c in children(rhs))
    return not _contains_extractable(rhs)


def _contains_extractable(e: Expr) -> bool:
    if isinstance(e, _EXTRACTABLE):
        return True
    return any(_contains_extractable(c) for c in children(e))


def is_normalized(p: Program) -> bool:
    from .syntax import statements, stmt_exprs
    for s in statements(p.body):
        if isinstance(s, Assign):
            if not is_normal_assign(s):
                return False
        else:
            for e in stmt_exprs(s):
                if _contains_extractable(e):
                    return False
    return True


class _Normalizer:
    def __init__(self, tp: TypedProgram):
        self.env = dict(tp.env)
        self.new_decls: list[Decl] = []
        self.labels = LabelAllocator(tp.program.max_label())
        used = [int(d.name[len(TEMP_PREFIX):])
                for d in tp.program.decls
                if d.name.startswith(TEMP_PREFIX)
                and d.name[len(TEMP_PREFIX):].isdigit()]
        self.counter = max(used) + 1 if used else 0

    def fresh_temp(self, e: Expr) -> str:
        name = f"{TEMP_PREFIX}{self.counter}"
        self.counter += 1
        typ = infer_type(e, self.env)
        assert typ is not None, "normalization preserves typability"
        self.env[name] = typ
        self.new_decls.append(Decl(name, typ))
        return name

    def emit(self, out: list[Stmt], target: str, rhs: Expr, origin: Label) -> None:
        out.append(Assign(target, rhs, label=self.labels.fresh(), origin=origin))

    def atom(self, e: Expr, out: list[Stmt], origin: Label) -> Expr:
        e = self.expr(e, out, origin)
        if is_atom(e):
            return e
        name = self.fresh_temp(e)
        self.emit(out, name, e, origin)
        return Var(name)

    def node_with_atom_args(self, e: Expr, out: list[Stmt], origin: Label) -> Expr:
        if isinstance(e, Select):
            return Select(self.atom(e.array, out, origin),
                          self.atom(e.index, out, origin))
        if isinstance(e, Store):
            return Store(self.atom(e.array, out, origin),
                         self.atom(e.index, out, origin),
                         self.atom(e.value, out, origin))
        if isinstance(e, (Forall, Exists)):
            return type(e)(self.atom(e.array, out, origin),
                           self.atom(e.lo, out, origin),
                           self.atom(e.hi, out, origin), e.binder)
        if isinstance(e, Aggregate):
            return Aggregate(e.hom, self.atom(e.array, out, origin),
                             self.atom(e.lo, out, origin),
                             self.atom(e.hi, out, origin))
        if isinstance(e, ConstArray):
            return ConstArray(self.atom(e.value, out, origin),
                              self.atom(e.size, out, origin))
        raise TypeError(f"not extractable: {e!r}")

    def expr(self, e: Expr, out: list[Stmt], origin: Label) -> Expr:
        """Replace extractable nodes below e by temporaries."""
        if isinstance(e, _EXTRACTABLE):
            node = self.node_with_atom_args(e, out, origin)
            name = self.fresh_temp(node)
            self.emit(out, name, node, origin)
            return Var(name)
        if is_atom(e):
            return e
        parts = [self.expr(c, out, origin) for c in children(e)]
        return type(e)(*parts)  # type: ignore[arg-type]

    def rhs(self, e: Expr, out: list[Stmt], origin: Label) -> Expr:
        """Assignment right-hand sides keep one extractable node on top."""
        if isinstance(e, _EXTRACTABLE):
            return self.node_with_atom_args(e, out, origin)
        return self.expr(e, out, origin)

    def stmt(self, s: Stmt, out: list[Stmt]) -> None:
        if isinstance(s, Block):
            inner: list[Stmt] = []
            for c in s.stmts:
                self.stmt(c, inner)
            out.append(Block(inner, label=s.label, origin=s.origin))
        elif isinstance(s, Skip):
            out.append(s)
        elif isinstance(s, Assign):
            new_rhs = self.rhs(s.rhs, out, s.label)
            out.append(Assign(s.target, new_rhs, label=s.label, origin=s.origin))
        elif isinstance(s, (Assert, Assume)):
            cond = self.expr(s.cond, out, s.label)
            out.append(type(s)(cond, label=s.label, origin=s.origin))
        elif isinstance(s, If):
            cond = self.expr(s.cond, out, s.label)
            then_b: list[Stmt] = []
            self.stmt(s.then_b, then_b)
            else_b: list[Stmt] = []
            self.stmt(s.else_b, else_b)
            out.append(If(cond, then_b[0], else_b[0], label=s.label, origin=s.origin))
        elif isinstance(s, While):
            prelude: list[Stmt] = []
            cond = self.expr(s.cond, prelude, s.label)
            body: list[Stmt] = []
            self.stmt(s.body, body)
            new_body = body[0]
            assert isinstance(new_body, Block)
            if prelude:
                out.extend(copy_stmt(x) for x in prelude)
                recompute = []
                for x in prelude:
                    c = copy_stmt(x)
                    c.label = self.labels.fresh()
                    recompute.append(c)
                new_body.stmts.extend(recompute)
            out.append(While(cond, new_body, label=s.label, origin=s.origin))
        else:
            raise TypeError(f"not a statement: {s!r}")


def normalize(tp: TypedProgram) -> TypedProgram:
    """Normalize a typed program; total, idempotent, equivalence-preserving."""
    norm = _Normalizer(tp)
    out: list[Stmt] = []
    norm.stmt(tp.program.body, out)
    body = out[0]
    assert isinstance(body, Block)
    program = Program(list(tp.program.decls) + norm.new_decls, body)
    result = typecheck(program)
    assert is_normalized(program)
    return result
