"""Concrete big-step interpreter and the aggregation registry.

This is the ground truth the rest of the tool is checked against:
property tests compare instrumented programs to their originals here, and
every counterexample any component emits must replay through `run`.

Assert/assume follow the extended execution model: a false assert fails
(terminates abnormally, with a trace), a false assume blocks the execution
like a non-terminating loop and is never a failure.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .syntax import (
    Add, Aggregate, And, ArrayType, Assert, Assign, Assume, Block, BoolLit,
    BoolType, ConstArray, Eq, Exists, Expr, Forall, HomId, If, IntLit,
    IntType, Label, Lambda, Leq, MAX_SENTINEL, MIN_SENTINEL, Mul, Not, Or,
    Program, Select, Skip, Stmt, Store, Type, Var, While, apply_lambda,
)

DEFAULT_FUEL = 10 ** 6


# ---------------------------------------------------------------------------
# Values and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class ArrayV:
    """Total function Z -> values: a default plus finitely many overrides.

    Canonical form: no override maps to the default, so structural
    equality coincides with extensional equality.
    """

    default: "Value"
    overrides: tuple[tuple[int, "Value"], ...] = ()

    @staticmethod
    def make(default: "Value",
             overrides: dict[int, "Value"] | None = None) -> "ArrayV":
        items = tuple(sorted((i, v) for i, v in (overrides or {}).items()
                             if v != default))
        return ArrayV(default, items)

    def get(self, index: int) -> "Value":
        for i, v in self.overrides:
            if i == index:
                return v
        return self.default

    def set(self, index: int, value: "Value") -> "ArrayV":
        items = {i: v for i, v in self.overrides}
        items[index] = value
        return ArrayV.make(self.default, items)


Value = Union[IntV, BoolV, ArrayV]

State = dict[str, Value]


def default_value(typ: Type) -> Value:
    if isinstance(typ, IntType):
        return IntV(0)
    if isinstance(typ, BoolType):
        return BoolV(False)
    return ArrayV(default_value(typ.elem))


def value_to_json(v: Value) -> object:
    if isinstance(v, IntV):
        if v.value == MIN_SENTINEL:
            return {"int": "-inf"}
        if v.value == MAX_SENTINEL:
            return {"int": "+inf"}
        return {"int": str(v.value)}
    if isinstance(v, BoolV):
        return {"bool": v.value}
    return {"array": {"default": value_to_json(v.default),
                      "overrides": [[i, value_to_json(x)]
                                    for i, x in v.overrides]}}


def value_from_json(obj: object) -> Value:
    assert isinstance(obj, dict)
    if "int" in obj:
        raw = obj["int"]
        if raw == "-inf":
            return IntV(MIN_SENTINEL)
        if raw == "+inf":
            return IntV(MAX_SENTINEL)
        return IntV(int(raw))
    if "bool" in obj:
        return BoolV(bool(obj["bool"]))
    arr = obj["array"]
    return ArrayV.make(value_from_json(arr["default"]),
                       {int(i): value_from_json(x) for i, x in arr["overrides"]})


def state_to_json(s: State) -> dict[str, object]:
    return {name: value_to_json(v) for name, v in sorted(s.items())}


def state_from_json(obj: dict[str, object]) -> State:
    return {name: value_from_json(v) for name, v in obj.items()}


# ---------------------------------------------------------------------------
# Aggregation registry: monoid homomorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monoid:
    """Carrier operation, neutral element, and the per-element mapping."""

    name: str
    op: Callable[[Value, Value], Value]
    neutral: Value
    embed: Callable[[Value, int], Value]  # singleton <v at index i> -> carrier


def _int_op(f: Callable[[int, int], int]) -> Callable[[Value, Value], Value]:
    def apply(a: Value, b: Value) -> Value:
        assert isinstance(a, IntV) and isinstance(b, IntV)
        return IntV(f(a.value, b.value))
    return apply


def monoid_for(hom: HomId) -> Monoid:
    if hom.name == "sum":
        return Monoid("sum", _int_op(lambda a, b: a + b), IntV(0),
                      lambda v, i: v)
    if hom.name == "max":
        return Monoid("max", _int_op(max), IntV(MIN_SENTINEL), lambda v, i: v)
    if hom.name == "min":
        return Monoid("min", _int_op(min), IntV(MAX_SENTINEL), lambda v, i: v)
    if hom.name == "count":
        pred = hom.predicate
        assert pred is not None, "count requires a predicate"

        def embed(v: Value, i: int) -> Value:
            holds = eval_expr(apply_lambda(pred, _quote(v), IntLit(i)), {})
            assert isinstance(holds, BoolV)
            return IntV(1 if holds.value else 0)

        return Monoid("count", _int_op(lambda a, b: a + b), IntV(0), embed)
    raise ValueError(f"unknown homomorphism {hom.name!r}")


def _quote(v: Value) -> Expr:
    if isinstance(v, IntV):
        return IntLit(v.value)
    if isinstance(v, BoolV):
        return BoolLit(v.value)
    raise ValueError("array values cannot be quoted into predicates")


def aggregate_value(hom: HomId, a: ArrayV, lo: int, hi: int) -> Value:
    """Fold the homomorphism over the slice a[lo..hi); neutral when empty."""
    m = monoid_for(hom)
    acc = m.neutral
    for i in range(lo, hi):
        acc = m.op(acc, m.embed(a.get(i), i))
    return acc


# ---------------------------------------------------------------------------
# Execution results
# ---------------------------------------------------------------------------

@dataclass
class Counterexample:
    """A replayable failing execution: per-statement states plus the
    failing assert's control point.  steps[i] is the state *before* the
    statement at that label executes."""

    steps: list[tuple[Label, State]]
    failing: Label

    def initial_state(self) -> State:
        return dict(self.steps[0][1])

    def to_json_lines(self) -> str:
        lines = [json.dumps({"label": lbl, "state": state_to_json(st)})
                 for lbl, st in self.steps]
        lines.append(json.dumps({"failing": self.failing}))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_json_lines(text: str) -> "Counterexample":
        steps: list[tuple[Label, State]] = []
        failing = -1
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if "failing" in obj:
                failing = obj["failing"]
            else:
                steps.append((obj["label"], state_from_json(obj["state"])))
        return Counterexample(steps, failing)


@dataclass
class Terminated:
    final: State


@dataclass
class Failed:
    trace: Counterexample


@dataclass
class Blocked:
    at: Label


@dataclass
class FuelExhausted:
    pass


ExecutionResult = Union[Terminated, Failed, Blocked, FuelExhausted]


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------

def eval_expr(e: Expr, s: State) -> Value:
    """Standard semantics; total on typed inputs."""
    if isinstance(e, IntLit):
        return IntV(e.value)
    if isinstance(e, BoolLit):
        return BoolV(e.value)
    if isinstance(e, Var):
        return s[e.name]
    if isinstance(e, Eq):
        return BoolV(eval_expr(e.lhs, s) == eval_expr(e.rhs, s))
    if isinstance(e, Leq):
        lhs, rhs = eval_expr(e.lhs, s), eval_expr(e.rhs, s)
        assert isinstance(lhs, IntV) and isinstance(rhs, IntV)
        return BoolV(lhs.value <= rhs.value)
    if isinstance(e, Not):
        v = eval_expr(e.e, s)
        assert isinstance(v, BoolV)
        return BoolV(not v.value)
    if isinstance(e, And):
        v = eval_expr(e.lhs, s)
        assert isinstance(v, BoolV)
        return eval_expr(e.rhs, s) if v.value else BoolV(False)
    if isinstance(e, Or):
        v = eval_expr(e.lhs, s)
        assert isinstance(v, BoolV)
        return BoolV(True) if v.value else eval_expr(e.rhs, s)
    if isinstance(e, Add):
        lhs, rhs = eval_expr(e.lhs, s), eval_expr(e.rhs, s)
        assert isinstance(lhs, IntV) and isinstance(rhs, IntV)
        return IntV(lhs.value + rhs.value)
    if isinstance(e, Mul):
        lhs, rhs = eval_expr(e.lhs, s), eval_expr(e.rhs, s)
        assert isinstance(lhs, IntV) and isinstance(rhs, IntV)
        return IntV(lhs.value * rhs.value)
    if isinstance(e, Select):
        a = eval_expr(e.array, s)
        i = eval_expr(e.index, s)
        assert isinstance(a, ArrayV) and isinstance(i, IntV)
        return a.get(i.value)
    if isinstance(e, Store):
        a = eval_expr(e.array, s)
        i = eval_expr(e.index, s)
        assert isinstance(a, ArrayV) and isinstance(i, IntV)
        return a.set(i.value, eval_expr(e.value, s))
    if isinstance(e, (Forall, Exists)):
        a = eval_expr(e.array, s)
        lo = eval_expr(e.lo, s)
        hi = eval_expr(e.hi, s)
        assert isinstance(a, ArrayV) and isinstance(lo, IntV) and isinstance(hi, IntV)
        for i in range(lo.value, hi.value):
            body = apply_lambda(e.binder, _quote(a.get(i)), IntLit(i))
            holds = eval_expr(body, s)
            assert isinstance(holds, BoolV)
            if isinstance(e, Forall) and not holds.value:
                return BoolV(False)
            if isinstance(e, Exists) and holds.value:
                return BoolV(True)
        return BoolV(isinstance(e, Forall))
    if isinstance(e, Aggregate):
        a = eval_expr(e.array, s)
        lo = eval_expr(e.lo, s)
        hi = eval_expr(e.hi, s)
        assert isinstance(a, ArrayV) and isinstance(lo, IntV) and isinstance(hi, IntV)
        if e.hom.name == "count" and e.hom.predicate is not None:
            # Inline fold so the predicate may mention program variables.
            total = 0
            for i in range(lo.value, hi.value):
                body = apply_lambda(e.hom.predicate, _quote(a.get(i)), IntLit(i))
                holds = eval_expr(body, s)
                assert isinstance(holds, BoolV)
                total += 1 if holds.value else 0
            return IntV(total)
        return aggregate_value(e.hom, a, lo.value, hi.value)
    if isinstance(e, ConstArray):
        return ArrayV(eval_expr(e.value, s))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Program execution
# ---------------------------------------------------------------------------

class _AssertFailure(Exception):
    def __init__(self, label: Label):
        self.label = label


class _AssumeBlocked(Exception):
    def __init__(self, label: Label):
        self.label = label


class _OutOfFuel(Exception):
    pass


def initial_state(p: Program, inputs: Optional[State] = None) -> State:
    """Start state: defaults for every declaration, inputs overriding."""
    s: State = {d.name: default_value(d.type) for d in p.decls}
    for name, v in (inputs or {}).items():
        s[name] = v
    return s


def run(p: Program, initial: State, fuel: int = DEFAULT_FUEL,
        trace: bool = False) -> ExecutionResult:
    """Execute p from a state covering its declarations.

    Fuel is decremented once per loop back-edge; exhaustion yields
    FuelExhausted, bounding divergence but not straight-line work.
    """
    s = dict(initial)
    steps: list[tuple[Label, State]] = []
    budget = [fuel]

    def record(stmt: Stmt) -> None:
        if trace:
            steps.append((stmt.label, dict(s)))

    def truth(e: Expr) -> bool:
        v = eval_expr(e, s)
        assert isinstance(v, BoolV)
        return v.value

    def exec_stmt(stmt: Stmt) -> None:
        if isinstance(stmt, Block):
            for c in stmt.stmts:
                exec_stmt(c)
        elif isinstance(stmt, Skip):
            record(stmt)
        elif isinstance(stmt, Assign):
            record(stmt)
            s[stmt.target] = eval_expr(stmt.rhs, s)
        elif isinstance(stmt, Assert):
            record(stmt)
            if not truth(stmt.cond):
                raise _AssertFailure(stmt.label)
        elif isinstance(stmt, Assume):
            record(stmt)
            if not truth(stmt.cond):
                raise _AssumeBlocked(stmt.label)
        elif isinstance(stmt, If):
            record(stmt)
            exec_stmt(stmt.then_b if truth(stmt.cond) else stmt.else_b)
        elif isinstance(stmt, While):
            record(stmt)
            while truth(stmt.cond):
                if budget[0] <= 0:
                    raise _OutOfFuel()
                budget[0] -= 1
                exec_stmt(stmt.body)
                record(stmt)
        else:
            raise TypeError(f"not a statement: {stmt!r}")

    try:
        exec_stmt(p.body)
    except _AssertFailure as failure:
        if not trace:
            # Re-run recording states so Failed always carries its trace.
            replay = run(p, initial, fuel, trace=True)
            assert isinstance(replay, Failed)
            return replay
        return Failed(Counterexample(steps, failure.label))
    except _AssumeBlocked as blocked:
        return Blocked(blocked.label)
    except _OutOfFuel:
        return FuelExhausted()
    return Terminated(s)


def replay(p: Program, cex: Counterexample, fuel: int = DEFAULT_FUEL) -> bool:
    """True when the counterexample reproduces exactly on p."""
    result = run(p, cex.initial_state(), fuel, trace=True)
    if not isinstance(result, Failed):
        return False
    got = result.trace
    return got.failing == cex.failing and got.steps == cex.steps


# ---------------------------------------------------------------------------
# Brute-force verdicts over bounded input domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int  # inclusive

    def values(self) -> Iterator[Value]:
        for k in range(self.lo, self.hi + 1):
            yield IntV(k)


@dataclass(frozen=True)
class ArrayDomain:
    """Arrays valued over [0, size) with elements from [lo, hi], default 0."""

    size: int
    lo: int
    hi: int

    def values(self) -> Iterator[Value]:
        elems = range(self.lo, self.hi + 1)
        for tup in itertools.product(elems, repeat=self.size):
            yield ArrayV.make(IntV(0), {i: IntV(v) for i, v in enumerate(tup)})


@dataclass(frozen=True)
class BoolDomain:
    def values(self) -> Iterator[Value]:
        yield BoolV(False)
        yield BoolV(True)


InputDomain = Union[IntRange, ArrayDomain, BoolDomain]
InputBounds = dict[str, InputDomain]


def input_states(p: Program, bounds: InputBounds) -> Iterator[State]:
    """All start states induced by the bounds over p's nondet inputs."""
    names = p.input_names()
    domains = []
    for name in names:
        if name in bounds:
            domains.append(list(bounds[name].values()))
        else:
            decl = next(d for d in p.decls if d.name == name)
            domains.append([default_value(decl.type)])
    for combo in itertools.product(*domains):
        yield initial_state(p, dict(zip(names, combo)))


@dataclass
class Safe:
    witness: object = None  # oracle attaches a Witness; brute force has none


@dataclass
class Unsafe:
    cex: Counterexample


@dataclass
class Unknown:
    reason: str


Verdict = Union[Safe, Unsafe, Unknown]


def enumerate_check(p: Program, bounds: InputBounds,
                    fuel: int = DEFAULT_FUEL) -> Verdict:
    """Run p on every bounded input; a desk-scale brute-force oracle.

    Unsafe with the first failing trace; Unknown if any run exhausts
    fuel; Safe otherwise (vacuously so for an empty input set).
    """
    saw_exhaustion = False
    for start in input_states(p, bounds):
        result = run(p, start, fuel)
        if isinstance(result, Failed):
            return Unsafe(result.trace)
        if isinstance(result, FuelExhausted):
            saw_exhaustion = True
    if saw_exhaustion:
        return Unknown("fuel exhausted on some input")
    return Safe()
