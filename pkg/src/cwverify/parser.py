"""Recursive-descent parser for `.cw` programs.

Surface syntax is C-like.  Sugar accepted and desugared here:
  a[i]            select(a, i)
  a[i] = x;       a = store(a, i, x);
  e1 < e2         !(e2 <= e1)         (similarly >, >=, !=)
  e1 - e2         e1 + -1 * e2
  -e, +e          unary minus / plus
  inf             the +infinity sentinel constant
  \\sum(a,l,u)     aggregate over the sum homomorphism (\\max, \\min alike)
  \\count(a,l,u,p) aggregate over the counting homomorphism

Declarations may appear anywhere; they are hoisted into the program
vocabulary and an initializer becomes an ordinary assignment at the
declaration site.  `Type x = nondet;` marks x as a havoc'd input.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Add, Aggregate, And, ArrayType, Assert, Assign, Assume, Block, BoolLit,
    BOOL, ConstArray, Decl, Eq, Exists, Expr, Forall, HomId, If, INT, IntLit,
    Lambda, Leq, MAX, MAX_SENTINEL, MIN, Mul, Not, Or, Program, Select, Skip,
    Stmt, Store, SUM, Type, Var, While, count_hom, fold_ground, relabel,
)

KEYWORDS = {
    "skip", "while", "if", "else", "assert", "assume", "true", "false",
    "select", "store", "forall", "exists", "const", "nondet", "inf",
    "Int", "Bool", "Array",
}

AGG_NAMES = {"sum": SUM, "max": MAX, "min": MIN}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: set[str]):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected


@dataclass
class Token:
    kind: str  # IDENT, INT, AGG, LAMBDA, PUNCT, KEYWORD, EOF
    text: str
    line: int
    col: int


_PUNCT2 = ("==", "!=", "<=", ">=", "&&", "||")
_PUNCT1 = "()[]{},;.=<>!+-*\\"


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(msg: str) -> ParseError:
        return ParseError(msg, line, col, set())

    while i < n:
        c = src[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if src.startswith("/*", i):
            end = src.find("*/", i + 2)
            if end < 0:
                raise err("unterminated block comment")
            for ch in src[i:end + 2]:
                if ch == "\n":
                    line, col = line + 1, 1
                else:
                    col += 1
            i = end + 2
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            while j < n and src[j] == "'":
                j += 1
            word = src[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if c == "\\":
            j = i + 1
            while j < n and src[j].isalpha():
                j += 1
            word = src[i + 1:j]
            if word in AGG_NAMES or word == "count":
                toks.append(Token("AGG", word, line, col))
                col += j - i
                i = j
                continue
            toks.append(Token("LAMBDA", "\\", line, col))
            i += 1
            col += 1
            continue
        two = src[i:i + 2]
        if two in _PUNCT2:
            toks.append(Token("PUNCT", two, line, col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(Token("PUNCT", c, line, col))
            i += 1
            col += 1
            continue
        raise err(f"unexpected character {c!r}")
    toks.append(Token("EOF", "", line, col))
    return toks


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0
        self.decls: list[Decl] = []
        self.decl_names: set[str] = set()

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, expected: set[str]) -> ParseError:
        t = self.peek()
        shown = t.text or "end of input"
        return ParseError(f"{message}, found {shown!r}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "EOF":
            raise self.error(f"expected {text!r}", {text})
        return self.next()

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "EOF"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    # -- entry points ------------------------------------------------------

    def parse_program(self) -> Program:
        stmts: list[Stmt] = []
        while self.peek().kind != "EOF":
            stmts.extend(self.parse_item())
        program = Program(self.decls, Block(stmts))
        return relabel(program)

    def parse_item(self) -> list[Stmt]:
        if self.peek().text in ("Int", "Bool", "Array"):
            return self.parse_decl()
        return [self.parse_stmt()]

    def parse_decl(self) -> list[Stmt]:
        typ = self.parse_type()
        name_tok = self.peek()
        if name_tok.kind != "IDENT":
            raise self.error("expected variable name", {"identifier"})
        self.next()
        name = name_tok.text
        if name in self.decl_names:
            raise ParseError(f"duplicate declaration of {name!r}",
                             name_tok.line, name_tok.col, set())
        init: list[Stmt] = []
        is_input = False
        if self.accept("="):
            if self.accept("nondet"):
                is_input = True
            else:
                init.append(Assign(name, self.parse_expr()))
        self.expect(";")
        self.decls.append(Decl(name, typ, is_input))
        self.decl_names.add(name)
        return init

    def parse_type(self) -> Type:
        t = self.next()
        if t.text == "Int":
            return INT
        if t.text == "Bool":
            return BOOL
        if t.text == "Array":
            return ArrayType(self.parse_type())
        raise ParseError("expected a type", t.line, t.col, {"Int", "Bool", "Array"})

    # -- statements --------------------------------------------------------

    def parse_block(self) -> Block:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "EOF":
                raise self.error("expected '}'", {"}"})
            stmts.extend(self.parse_item())
        self.expect("}")
        return Block(stmts)

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if self.accept("skip"):
            self.expect(";")
            return Skip()
        if self.accept("assert"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return Assert(cond)
        if self.accept("assume"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return Assume(cond)
        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            return While(cond, self.parse_block())
        if self.accept("if"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then_b = self.parse_block()
            else_b = Block([])
            if self.accept("else"):
                if self.at("if"):
                    else_b = Block([self.parse_stmt()])
                else:
                    else_b = self.parse_block()
            return If(cond, then_b, else_b)
        if t.kind == "IDENT":
            self.next()
            if self.accept("["):
                index = self.parse_expr()
                self.expect("]")
                self.expect("=")
                value = self.parse_expr()
                self.expect(";")
                return Assign(t.text, Store(Var(t.text), index, value))
            self.expect("=")
            rhs = self.parse_expr()
            self.expect(";")
            return Assign(t.text, rhs)
        raise self.error("expected a statement",
                         {"skip", "assert", "assume", "while", "if", "identifier"})

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> Expr:
        return fold_ground(self.parse_or())

    def parse_or(self) -> Expr:
        e = self.parse_and()
        while self.at("||"):
            self.next()
            e = Or(e, self.parse_and())
        return e

    def parse_and(self) -> Expr:
        e = self.parse_cmp()
        while self.at("&&"):
            self.next()
            e = And(e, self.parse_cmp())
        return e

    def parse_cmp(self) -> Expr:
        e = self.parse_add()
        t = self.peek()
        if t.text in ("==", "!=", "<=", "<", ">=", ">"):
            self.next()
            rhs = self.parse_add()
            if t.text == "==":
                return Eq(e, rhs)
            if t.text == "!=":
                return Not(Eq(e, rhs))
            if t.text == "<=":
                return Leq(e, rhs)
            if t.text == "<":
                return Not(Leq(rhs, e))
            if t.text == ">=":
                return Leq(rhs, e)
            return Not(Leq(e, rhs))
        return e

    def parse_add(self) -> Expr:
        e = self.parse_mul()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.parse_mul()
            if op == "-":
                rhs = Mul(IntLit(-1), rhs)
            e = Add(e, rhs)
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_unary()
        while self.at("*"):
            self.next()
            e = Mul(e, self.parse_unary())
        return e

    def parse_unary(self) -> Expr:
        if self.accept("!"):
            return Not(self.parse_unary())
        if self.accept("-"):
            return Mul(IntLit(-1), self.parse_unary())
        if self.accept("+"):
            return self.parse_unary()
        return self.parse_primary()

    def parse_lambda(self) -> Lambda:
        t = self.peek()
        if t.kind != "LAMBDA":
            raise self.error("expected a lambda", {"\\"})
        self.next()
        self.expect("(")
        v = self.ident()
        self.expect(",")
        ix = self.ident()
        self.expect(")")
        self.expect(".")
        return Lambda(v, ix, self.parse_or())

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "IDENT":
            raise self.error("expected an identifier", {"identifier"})
        return self.next().text

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return IntLit(int(t.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.accept("inf"):
            return IntLit(MAX_SENTINEL)
        if self.accept("("):
            e = self.parse_or()
            self.expect(")")
            return e
        if self.accept("select"):
            self.expect("(")
            a = self.parse_or()
            self.expect(",")
            ix = self.parse_or()
            self.expect(")")
            return Select(a, ix)
        if self.accept("store"):
            self.expect("(")
            a = self.parse_or()
            self.expect(",")
            ix = self.parse_or()
            self.expect(",")
            v = self.parse_or()
            self.expect(")")
            return Store(a, ix, v)
        if self.accept("const"):
            self.expect("(")
            v = self.parse_or()
            self.expect(",")
            size = self.parse_or()
            self.expect(")")
            return ConstArray(v, size)
        if t.text in ("forall", "exists") and t.kind == "KEYWORD":
            self.next()
            self.expect("(")
            a = self.parse_or()
            self.expect(",")
            lo = self.parse_or()
            self.expect(",")
            hi = self.parse_or()
            self.expect(",")
            lam = self.parse_lambda()
            self.expect(")")
            ctor = Forall if t.text == "forall" else Exists
            return ctor(a, lo, hi, lam)
        if t.kind == "AGG":
            self.next()
            self.expect("(")
            a = self.parse_or()
            self.expect(",")
            lo = self.parse_or()
            self.expect(",")
            hi = self.parse_or()
            if t.text == "count":
                self.expect(",")
                pred = self.parse_lambda()
                hom: HomId = count_hom(pred)
            else:
                hom = AGG_NAMES[t.text]
            self.expect(")")
            return Aggregate(hom, a, lo, hi)
        if t.kind == "IDENT":
            self.next()
            if self.accept("["):
                ix = self.parse_or()
                self.expect("]")
                return Select(Var(t.text), ix)
            return Var(t.text)
        raise self.error("expected an expression",
                         {"integer", "identifier", "(", "true", "false",
                          "select", "store", "forall", "exists", "const"})


def parse(source: str) -> Program:
    """Parse program text; raises ParseError with line/column on failure."""
    return Parser(source).parse_program()


def parse_expr(source: str) -> Expr:
    """Parse a single expression (test and CLI convenience)."""
    p = Parser(source)
    e = p.parse_expr()
    if p.peek().kind != "EOF":
        raise p.error("trailing input after expression", set())
    return e
