"""Canonical pretty-printer; parse(print(p)) reproduces the AST."""

from __future__ import annotations

from .syntax import (
    Add, Aggregate, And, ArrayType, Assert, Assign, Assume, Block, BoolLit,
    ConstArray, Eq, Exists, Expr, Forall, If, IntLit, Lambda, Leq,
    MAX_SENTINEL, MIN_SENTINEL, Mul, Not, Or, Program, Select, Skip, Stmt,
    Store, Var, While,
)

_OR, _AND, _CMP, _ADD, _MUL, _UNARY, _PRIMARY = range(1, 8)


def print_expr(e: Expr, level: int = _OR) -> str:
    text, mine = _expr(e)
    if mine < level:
        return f"({text})"
    return text


def _expr(e: Expr) -> tuple[str, int]:
    if isinstance(e, IntLit):
        if e.value == MAX_SENTINEL:
            return "+inf", _PRIMARY
        if e.value == MIN_SENTINEL:
            return "-inf", _PRIMARY
        if e.value < 0:
            return f"-{-e.value}", _UNARY
        return str(e.value), _PRIMARY
    if isinstance(e, BoolLit):
        return ("true" if e.value else "false"), _PRIMARY
    if isinstance(e, Var):
        return e.name, _PRIMARY
    if isinstance(e, Or):
        return f"{print_expr(e.lhs, _OR)} || {print_expr(e.rhs, _AND)}", _OR
    if isinstance(e, And):
        return f"{print_expr(e.lhs, _AND)} && {print_expr(e.rhs, _CMP)}", _AND
    if isinstance(e, Not):
        if isinstance(e.e, Eq):
            return (f"{print_expr(e.e.lhs, _ADD)} != {print_expr(e.e.rhs, _ADD)}",
                    _CMP)
        if isinstance(e.e, Leq):
            # !(a <= b) is printed as b < a
            return (f"{print_expr(e.e.rhs, _ADD)} < {print_expr(e.e.lhs, _ADD)}",
                    _CMP)
        return f"!{print_expr(e.e, _UNARY)}", _UNARY
    if isinstance(e, Eq):
        return f"{print_expr(e.lhs, _ADD)} == {print_expr(e.rhs, _ADD)}", _CMP
    if isinstance(e, Leq):
        return f"{print_expr(e.lhs, _ADD)} <= {print_expr(e.rhs, _ADD)}", _CMP
    if isinstance(e, Add):
        lhs = print_expr(e.lhs, _ADD)
        rhs = e.rhs
        if isinstance(rhs, Mul) and isinstance(rhs.lhs, IntLit) and rhs.lhs.value == -1:
            return f"{lhs} - {print_expr(rhs.rhs, _MUL)}", _ADD
        if isinstance(rhs, IntLit) and rhs.value < 0 and rhs.value != MIN_SENTINEL:
            return f"{lhs} - {-rhs.value}", _ADD
        return f"{lhs} + {print_expr(rhs, _MUL)}", _ADD
    if isinstance(e, Mul):
        if isinstance(e.lhs, IntLit) and e.lhs.value == -1:
            return f"-{print_expr(e.rhs, _UNARY)}", _UNARY
        return f"{print_expr(e.lhs, _MUL)} * {print_expr(e.rhs, _UNARY)}", _MUL
    if isinstance(e, Select):
        return f"select({print_expr(e.array)}, {print_expr(e.index)})", _PRIMARY
    if isinstance(e, Store):
        return (f"store({print_expr(e.array)}, {print_expr(e.index)}, "
                f"{print_expr(e.value)})"), _PRIMARY
    if isinstance(e, (Forall, Exists)):
        kw = "forall" if isinstance(e, Forall) else "exists"
        return (f"{kw}({print_expr(e.array)}, {print_expr(e.lo)}, "
                f"{print_expr(e.hi)}, {_lambda(e.binder)})"), _PRIMARY
    if isinstance(e, Aggregate):
        if e.hom.predicate is not None:
            return (f"\\count({print_expr(e.array)}, {print_expr(e.lo)}, "
                    f"{print_expr(e.hi)}, {_lambda(e.hom.predicate)})"), _PRIMARY
        return (f"\\{e.hom.name}({print_expr(e.array)}, {print_expr(e.lo)}, "
                f"{print_expr(e.hi)})"), _PRIMARY
    if isinstance(e, ConstArray):
        return f"const({print_expr(e.value)}, {print_expr(e.size)})", _PRIMARY
    raise TypeError(f"not an expression: {e!r}")


def _lambda(lam: Lambda) -> str:
    return f"\\({lam.value_param}, {lam.index_param}). {print_expr(lam.body)}"


def _stmt(s: Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, Skip):
        out.append(f"{pad}skip;")
    elif isinstance(s, Assign):
        out.append(f"{pad}{s.target} = {print_expr(s.rhs)};")
    elif isinstance(s, Assert):
        out.append(f"{pad}assert({print_expr(s.cond)});")
    elif isinstance(s, Assume):
        out.append(f"{pad}assume({print_expr(s.cond)});")
    elif isinstance(s, While):
        out.append(f"{pad}while ({print_expr(s.cond)}) {{")
        _block_body(s.body, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, If):
        out.append(f"{pad}if ({print_expr(s.cond)}) {{")
        _block_body(s.then_b, indent + 1, out)
        if not s.else_b.stmts:
            out.append(f"{pad}}}")
        elif len(s.else_b.stmts) == 1 and isinstance(s.else_b.stmts[0], If):
            out.append(f"{pad}}} else " + _else_if(s.else_b.stmts[0], indent))
        else:
            out.append(f"{pad}}} else {{")
            _block_body(s.else_b, indent + 1, out)
            out.append(f"{pad}}}")
    elif isinstance(s, Block):
        _block_body(s, indent, out)
    else:
        raise TypeError(f"not a statement: {s!r}")


def _else_if(s: If, indent: int) -> str:
    pad = "  " * indent
    lines: list[str] = []
    _stmt(s, indent, lines)
    first = lines[0].lstrip()
    rest = "\n".join(lines[1:])
    return first + ("\n" + rest if rest else "")


def _block_body(b: Block, indent: int, out: list[str]) -> None:
    for s in b.stmts:
        _stmt(s, indent, out)


def print_program(p: Program) -> str:
    out: list[str] = []
    for d in p.decls:
        if d.is_input:
            out.append(f"{d.type} {d.name} = nondet;")
        else:
            out.append(f"{d.type} {d.name};")
    _block_body(p.body, 0, out)
    return "\n".join(out) + "\n"
