"""Instrumentation framework: operators, selection application, operator
certification, witness back-translation, counterexample projection.

An instrumentation operator is a triple of ghost declarations, rewrite
rules over assignment statements, and an instrumentation invariant over
the ghosts.  Applying a selection (one rule or bottom per applicable
control point) produces the instrumented program P_r; origin labels keep
the correspondence ins_r(p) recoverable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from . import printer
from .syntax import (
    Add, Aggregate, And, ArrayType, Assert, Assign, Assume, Block, BoolLit,
    BOOL, BoolType, ConstArray, Decl, Eq, Exists, Expr, Forall, HomId, If,
    INT, IntLit, IntType, Label, LabelAllocator, Lambda, Leq, Mul, Not, Or,
    Program, Select, Skip, Stmt, Store, Type, Var, While, alpha_equal,
    apply_lambda, copy_stmt, fold_ground, free_vars, is_ground, statements,
    stmt_exprs, subst,
)
from .interp import (
    ArrayV, Blocked, BoolV, Counterexample, Failed, IntV, State, Terminated,
    Value, eval_expr, run, state_to_json, value_to_json,
)
from .typecheck import TypedProgram, typecheck

BOTTOM = None  # the "leave unchanged" choice in every rule menu


class SelectionError(Exception):
    pass


class NotOriginalAssert(Exception):
    pass


# ---------------------------------------------------------------------------
# Patterns and rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """Statement schema over meta-variables.

    Kinds and their shapes (alpha ranges over variable-free Int
    expressions, atoms are variables or literals):

      ground_assign   x = alpha
      increment       x = x + alpha
      scale           x = alpha * x
      square          y = x * x
      store           aprime = store(a, i, x)
      select          x = select(a, i)
      forall/exists   b = forall(a, l, u, binder)
      aggregate       r = \\hom(a, l, u)
    """

    kind: str
    target_meta: str
    binder: Optional[Lambda] = None
    hom: Optional[HomId] = None
    elem: Type = INT

    def schema_rhs(self) -> Expr:
        """The pattern's right-hand side t as an expression over metas."""
        if self.kind == "ground_assign":
            return Var("alpha")
        if self.kind == "increment":
            return Add(Var("x"), Var("alpha"))
        if self.kind == "scale":
            return Mul(Var("alpha"), Var("x"))
        if self.kind == "square":
            return Mul(Var("x"), Var("x"))
        if self.kind == "store":
            return Store(Var("a"), Var("i"), Var("x"))
        if self.kind == "select":
            return Select(Var("a"), Var("i"))
        if self.kind in ("forall", "exists"):
            ctor = Forall if self.kind == "forall" else Exists
            assert self.binder is not None
            return ctor(Var("a"), Var("l"), Var("u"), self.binder)
        if self.kind == "aggregate":
            assert self.hom is not None
            return Aggregate(self.hom, Var("a"), Var("l"), Var("u"))
        raise ValueError(f"unknown pattern kind {self.kind!r}")


def _is_atom(e: Expr) -> bool:
    return isinstance(e, (Var, IntLit, BoolLit))


def match_pattern(pat: Pattern, stmt: Stmt,
                  env: dict[str, Type]) -> Optional[dict[str, Expr]]:
    """Bind meta-variables if the assignment matches, else None."""
    if not isinstance(stmt, Assign):
        return None
    target = stmt.target
    rhs = stmt.rhs
    ttype = env.get(target)
    if pat.kind == "ground_assign":
        if ttype == INT and is_ground(rhs) and not isinstance(rhs, BoolLit):
            return {pat.target_meta: Var(target), "alpha": rhs}
        return None
    if pat.kind == "increment":
        if (ttype == INT and isinstance(rhs, Add)
                and rhs.lhs == Var(target) and is_ground(rhs.rhs)):
            return {pat.target_meta: Var(target), "alpha": rhs.rhs}
        return None
    if pat.kind == "scale":
        if (ttype == INT and isinstance(rhs, Mul)
                and rhs.rhs == Var(target) and is_ground(rhs.lhs)):
            return {pat.target_meta: Var(target), "alpha": rhs.lhs}
        return None
    if pat.kind == "square":
        if (ttype == INT and isinstance(rhs, Mul) and isinstance(rhs.lhs, Var)
                and rhs.lhs == rhs.rhs and env.get(rhs.lhs.name) == INT):
            return {pat.target_meta: Var(target), "x": rhs.lhs}
        return None
    if pat.kind == "store":
        if (isinstance(rhs, Store) and isinstance(rhs.array, Var)
                and env.get(rhs.array.name) == ArrayType(pat.elem)
                and ttype == ArrayType(pat.elem)
                and _is_atom(rhs.index) and _is_atom(rhs.value)):
            return {pat.target_meta: Var(target), "a": rhs.array,
                    "i": rhs.index, "x": rhs.value}
        return None
    if pat.kind == "select":
        if (isinstance(rhs, Select) and isinstance(rhs.array, Var)
                and env.get(rhs.array.name) == ArrayType(pat.elem)
                and ttype == pat.elem and _is_atom(rhs.index)):
            return {pat.target_meta: Var(target), "a": rhs.array, "i": rhs.index}
        return None
    if pat.kind in ("forall", "exists"):
        ctor = Forall if pat.kind == "forall" else Exists
        if (isinstance(rhs, ctor) and isinstance(rhs.array, Var)
                and env.get(rhs.array.name) == ArrayType(pat.elem)
                and _is_atom(rhs.lo) and _is_atom(rhs.hi)
                and pat.binder is not None and alpha_equal(rhs.binder, pat.binder)):
            return {pat.target_meta: Var(target), "a": rhs.array,
                    "l": rhs.lo, "u": rhs.hi}
        return None
    if pat.kind == "aggregate":
        if (isinstance(rhs, Aggregate) and rhs.hom == pat.hom
                and isinstance(rhs.array, Var)
                and env.get(rhs.array.name) == ArrayType(pat.elem)
                and _is_atom(rhs.lo) and _is_atom(rhs.hi)):
            return {pat.target_meta: Var(target), "a": rhs.array,
                    "l": rhs.lo, "u": rhs.hi}
        return None
    raise ValueError(f"unknown pattern kind {pat.kind!r}")


@dataclass(frozen=True)
class RewriteRule:
    """Schematic rewrite r = t ~> s over meta-variables and ghost names."""

    id: str
    pattern: Pattern
    replacement: tuple[Stmt, ...]

    def meta_names(self) -> set[str]:
        names = {self.pattern.target_meta}
        names.update(free_vars(self.pattern.schema_rhs()))
        if self.pattern.binder is not None:
            names -= free_vars(self.pattern.binder.body)
        return names


@dataclass(frozen=True)
class InstrumentationOperator:
    name: str
    ghosts: tuple[tuple[str, Type, Value], ...]
    rules: tuple[RewriteRule, ...]
    invariant: Expr

    def ghost_names(self) -> list[str]:
        return [g for g, _, _ in self.ghosts]

    def ghost_types(self) -> dict[str, Type]:
        return {g: t for g, t, _ in self.ghosts}

    def init_state(self) -> State:
        return {g: init for g, _, init in self.ghosts}

    def rule(self, rule_id: str) -> RewriteRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def suffixed(self, index: int) -> "InstrumentationOperator":
        """Rename ghosts with _<index>; instance 0 keeps bare names."""
        if index == 0:
            return self
        mapping = {g: f"{g}_{index}" for g in self.ghost_names()}
        expr_map = {g: Var(n) for g, n in mapping.items()}
        ghosts = tuple((mapping[g], t, v) for g, t, v in self.ghosts)
        rules = tuple(
            RewriteRule(r.id, r.pattern,
                        tuple(subst_stmt(s, expr_map, mapping)
                              for s in r.replacement))
            for r in self.rules)
        return InstrumentationOperator(
            f"{self.name}_{index}", ghosts, rules,
            subst(self.invariant, expr_map))


def subst_stmt(s: Stmt, mapping: dict[str, Expr],
               target_map: dict[str, str]) -> Stmt:
    """Substitute free variables in a statement schema; rename targets."""
    if isinstance(s, Block):
        return Block([subst_stmt(c, mapping, target_map) for c in s.stmts])
    if isinstance(s, Skip):
        return Skip()
    if isinstance(s, Assign):
        target = s.target
        if target in target_map:
            target = target_map[target]
        elif target in mapping:
            replacement = mapping[target]
            assert isinstance(replacement, Var), "assignment target must stay a variable"
            target = replacement.name
        return Assign(target, fold_ground(subst(s.rhs, mapping)))
    if isinstance(s, Assert):
        return Assert(fold_ground(subst(s.cond, mapping)))
    if isinstance(s, Assume):
        return Assume(fold_ground(subst(s.cond, mapping)))
    if isinstance(s, If):
        return If(fold_ground(subst(s.cond, mapping)),
                  subst_stmt(s.then_b, mapping, target_map),
                  subst_stmt(s.else_b, mapping, target_map))
    if isinstance(s, While):
        return While(fold_ground(subst(s.cond, mapping)),
                     subst_stmt(s.body, mapping, target_map))
    raise TypeError(f"not a statement: {s!r}")


# ---------------------------------------------------------------------------
# Applicability and selection application
# ---------------------------------------------------------------------------

RuleRef = tuple[int, str]  # (operator index, rule id)
Choice = Optional[RuleRef]  # None is bottom


@dataclass(frozen=True)
class Selection:
    """Total map from applicable control points to a rule choice or bottom."""

    choices: tuple[tuple[Label, Choice], ...]

    @staticmethod
    def make(choices: dict[Label, Choice]) -> "Selection":
        return Selection(tuple(sorted(choices.items(),
                                      key=lambda kv: (kv[0], str(kv[1])))))

    def as_dict(self) -> dict[Label, Choice]:
        return dict(self.choices)

    def chosen(self) -> dict[Label, RuleRef]:
        return {p: c for p, c in self.choices if c is not None}

    def to_json(self) -> dict[str, object]:
        return {str(p): (None if c is None else f"{c[0]}:{c[1]}")
                for p, c in self.choices}


def applicable_points(tp: TypedProgram,
                      ops: list[InstrumentationOperator]
                      ) -> dict[Label, list[RuleRef]]:
    """Menu Q(p) of matching rules per assignment point (bottom implicit)."""
    menus: dict[Label, list[RuleRef]] = {}
    for s in statements(tp.program.body):
        if not isinstance(s, Assign):
            continue
        refs: list[RuleRef] = []
        for op_idx, op in enumerate(ops):
            for rule in op.rules:
                if match_pattern(rule.pattern, s, tp.env) is not None:
                    refs.append((op_idx, rule.id))
        if refs:
            menus[s.label] = refs
    return menus


def space_size(menus: dict[Label, list[RuleRef]]) -> int:
    size = 1
    for refs in menus.values():
        size *= len(refs) + 1  # plus bottom
    return size


def init_expr(v: Value) -> Expr:
    if isinstance(v, IntV):
        return IntLit(v.value)
    if isinstance(v, BoolV):
        return BoolLit(v.value)
    assert isinstance(v, ArrayV) and not v.overrides, \
        "ghost array initializers are constant arrays"
    return ConstArray(init_expr(v.default), IntLit(0))


@dataclass
class Instrumented:
    """P_r plus everything needed to map verdicts back to P."""

    program: Program
    base: Program
    env: dict[str, Type]
    ops: list[InstrumentationOperator]
    selection: Selection
    menus: dict[Label, list[RuleRef]]

    def ghost_names(self) -> list[str]:
        return [g for op in self.ops for g in op.ghost_names()]

    def original_labels(self) -> set[Label]:
        return self.base.labels()

    def origin_map(self) -> dict[Label, Label]:
        return {s.label: s.origin for s in statements(self.program.body)}


def apply_selection(tp: TypedProgram, ops: list[InstrumentationOperator],
                    selection: Selection) -> Instrumented:
    """Produce P_r: ghost prelude plus selected rewrites.

    Raises SelectionError when a choice is not in the point's menu.
    """
    menus = applicable_points(tp, ops)
    choices = selection.as_dict()
    for point, choice in choices.items():
        if choice is None:
            continue
        if point not in menus or choice not in menus[point]:
            raise SelectionError(f"rule {choice} not applicable at point {point}")

    program = tp.program
    ghost_env: dict[str, Type] = {}
    for op in ops:
        for g, typ, _ in op.ghosts:
            if g in tp.env or g in ghost_env:
                raise SelectionError(f"ghost name {g!r} collides")
            ghost_env[g] = typ

    labels = LabelAllocator(program.max_label())

    def fresh_stmts(schema: tuple[Stmt, ...] | list[Stmt],
                    binding: dict[str, Expr], origin: Label) -> list[Stmt]:
        out = []
        for s in schema:
            inst = subst_stmt(s, binding, {})
            _stamp(inst, labels, origin)
            out.append(inst)
        return out

    def rewrite(s: Stmt) -> list[Stmt]:
        if isinstance(s, Block):
            inner: list[Stmt] = []
            for c in s.stmts:
                inner.extend(rewrite(c))
            return [Block(inner, label=s.label, origin=s.origin)]
        if isinstance(s, If):
            then_b = rewrite(s.then_b)[0]
            else_b = rewrite(s.else_b)[0]
            assert isinstance(then_b, Block) and isinstance(else_b, Block)
            return [If(s.cond, then_b, else_b, label=s.label, origin=s.origin)]
        if isinstance(s, While):
            body = rewrite(s.body)[0]
            assert isinstance(body, Block)
            return [While(s.cond, body, label=s.label, origin=s.origin)]
        choice = choices.get(s.label)
        if choice is None:
            return [copy_stmt(s)]
        op_idx, rule_id = choice
        rule = ops[op_idx].rule(rule_id)
        binding = match_pattern(rule.pattern, s, tp.env)
        assert binding is not None, "validated above"
        return fresh_stmts(rule.replacement, binding, s.label)

    prelude: list[Stmt] = []
    for op in ops:
        for g, _, init in op.ghosts:
            stmt = Assign(g, init_expr(init))
            _stamp(stmt, labels, origin=-1)
            prelude.append(stmt)

    body = rewrite(program.body)[0]
    assert isinstance(body, Block)
    new_body = Block(prelude + body.stmts, label=body.label, origin=body.origin)
    decls = list(program.decls) + [Decl(g, t) for g, t in ghost_env.items()]
    instrumented = Program(decls, new_body)
    typecheck(instrumented)
    return Instrumented(instrumented, program, dict(tp.env) | ghost_env,
                        list(ops), selection, menus)


def _stamp(s: Stmt, labels: LabelAllocator, origin: Label) -> None:
    s.label = labels.fresh()
    s.origin = origin
    if isinstance(s, Block):
        for c in s.stmts:
            _stamp(c, labels, origin)
    elif isinstance(s, If):
        _stamp(s.then_b, labels, origin)
        _stamp(s.else_b, labels, origin)
    elif isinstance(s, While):
        _stamp(s.body, labels, origin)


# ---------------------------------------------------------------------------
# Counterexample projection
# ---------------------------------------------------------------------------

def project_counterexample(instr: Instrumented,
                           cex: Counterexample) -> Counterexample:
    """Lift a counterexample for P_r back to P.

    Valid only when the failing assert is an original one; the projected
    trace is re-validated by replaying it through the interpreter.
    """
    original = instr.original_labels()
    if cex.failing not in original:
        raise NotOriginalAssert(
            f"assert at label {cex.failing} was added by instrumentation")
    ghosts = set(instr.ghost_names())
    base_vars = {d.name for d in instr.base.decls}

    def strip(state: State) -> State:
        return {k: v for k, v in state.items() if k in base_vars and k not in ghosts}

    steps = [(lbl, strip(st)) for lbl, st in cex.steps if lbl in original]
    projected = Counterexample(steps, cex.failing)

    rerun = run(instr.base, projected.initial_state(), trace=True)
    if not isinstance(rerun, Failed) or rerun.trace.failing != cex.failing \
            or rerun.trace.steps != steps:
        raise AssertionError(
            "projected counterexample failed to replay on the base program")
    return projected


# ---------------------------------------------------------------------------
# Operator certification (bounded checks of the correctness conditions)
# ---------------------------------------------------------------------------

@dataclass
class CertifyConfig:
    """Bounded domains for the certification checks.

    These are test parameters, not a proof: every operator-condition
    violation we can construct manifests within the defaults.
    """

    int_lo: int = -4
    int_hi: int = 4
    elem_lo: int = -2
    elem_hi: int = 2
    max_window: int = 3
    use_smt: bool = True
    fuel: int = 10_000

    def ints(self) -> range:
        return range(self.int_lo, self.int_hi + 1)

    def elems(self) -> range:
        return range(self.elem_lo, self.elem_hi + 1)


@dataclass
class ConditionResult:
    rule: str
    condition: str
    passed: bool
    witness: Optional[State] = None
    detail: str = ""

    def to_json(self) -> dict[str, object]:
        out: dict[str, object] = {"rule": self.rule, "condition": self.condition,
                                  "passed": self.passed}
        if self.witness is not None:
            out["witness"] = state_to_json(self.witness)
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ConditionReport:
    operator: str
    results: list[ConditionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[ConditionResult]:
        return [r for r in self.results if not r.passed]

    def to_json(self) -> dict[str, object]:
        return {"operator": self.operator, "passed": self.passed,
                "conditions": [r.to_json() for r in self.results]}


def asserts_to_assumes(stmts: tuple[Stmt, ...] | list[Stmt]) -> list[Stmt]:
    def go(s: Stmt) -> Stmt:
        if isinstance(s, Assert):
            return Assume(s.cond)
        if isinstance(s, Block):
            return Block([go(c) for c in s.stmts])
        if isinstance(s, If):
            then_b = go(s.then_b)
            else_b = go(s.else_b)
            assert isinstance(then_b, Block) and isinstance(else_b, Block)
            return If(s.cond, then_b, else_b)
        if isinstance(s, While):
            body = go(s.body)
            assert isinstance(body, Block)
            return While(s.cond, body)
        return copy_stmt(s)
    return [go(s) for s in stmts]


def _assigned_targets(stmts: tuple[Stmt, ...] | list[Stmt]) -> set[str]:
    targets: set[str] = set()
    for s in stmts:
        for sub in statements(s) if isinstance(s, (Block, If, While)) else [s]:
            if isinstance(sub, Assign):
                targets.add(sub.target)
    return targets


def _contains_while(stmts: tuple[Stmt, ...] | list[Stmt]) -> bool:
    for s in stmts:
        for sub in statements(s) if isinstance(s, (Block, If, While)) else [s]:
            if isinstance(sub, While):
                return True
    return False


def _array_candidates(state: State, cfg: CertifyConfig) -> list[ArrayV]:
    """Meta-array values: ghost arrays, one-point perturbations, fresh."""
    out: list[ArrayV] = []
    ghost_arrays = [v for v in state.values() if isinstance(v, ArrayV)]
    for g in ghost_arrays:
        out.append(g)
        idxs = [i for i, _ in g.overrides] or [0]
        out.append(g.set(idxs[0], IntV(cfg.elem_hi + 1)))
    out.append(ArrayV(IntV(0)))
    seen: list[ArrayV] = []
    for a in out:
        if a not in seen:
            seen.append(a)
    return seen


def _int_window(state: State, cfg: CertifyConfig) -> list[int]:
    vals = {0, 1, -1}
    for v in state.values():
        if isinstance(v, IntV) and abs(v.value) <= abs(cfg.int_hi) + 2:
            vals.update({v.value - 1, v.value, v.value + 1})
    return sorted(vals)


def _meta_states(rule: RewriteRule, ghost_state: State,
                 cfg: CertifyConfig) -> Iterator[State]:
    """Instantiations of the rule's meta-variables against a ghost state."""
    kind = rule.pattern.kind
    target = rule.pattern.target_meta
    if kind in ("ground_assign", "increment", "scale"):
        for x in cfg.ints():
            for alpha in cfg.ints():
                yield {target: IntV(x), "alpha": IntV(alpha)}
        return
    if kind == "square":
        for y in (-2, 0, 1):
            for x in cfg.ints():
                yield {target: IntV(y), "x": IntV(x)}
        return
    window = _int_window(ghost_state, cfg)
    arrays = _array_candidates(ghost_state, cfg)
    if kind == "store":
        for a in arrays:
            for i in window:
                for x in (cfg.elem_lo, 0, cfg.elem_hi, cfg.elem_hi + 1):
                    yield {target: a, "a": a, "i": IntV(i), "x": IntV(x)}
        return
    if kind == "select":
        for a in arrays:
            for i in window:
                yield {target: IntV(0), "a": a, "i": IntV(i)}
        return
    if kind in ("forall", "exists", "aggregate"):
        init = BoolV(False) if kind in ("forall", "exists") else IntV(0)
        for a in arrays:
            for lo in window:
                for hi in window:
                    yield {target: init, "a": a, "l": IntV(lo), "u": IntV(hi)}
        return
    raise ValueError(f"unknown pattern kind {kind!r}")


def _ghost_states(op: InstrumentationOperator,
                  cfg: CertifyConfig) -> Iterator[State]:
    """Bounded stream of ghost states satisfying the invariant.

    Interval-shaped operators (ghost arrays with integer bounds) get a
    structured enumeration; scalar operators enumerate and filter.
    """
    names = op.ghost_names()
    types = op.ghost_types()
    int_ghosts = [g for g in names if types[g] == INT]
    bool_ghosts = [g for g in names if types[g] == BOOL]
    array_ghosts = [g for g in names if isinstance(types[g], ArrayType)]

    if not array_ghosts:
        domains = []
        for g in names:
            if types[g] == INT:
                domains.append([IntV(k) for k in cfg.ints()])
            else:
                domains.append([BoolV(False), BoolV(True)])
        for combo in itertools.product(*domains):
            state = dict(zip(names, combo))
            holds = eval_expr(op.invariant, state)
            if isinstance(holds, BoolV) and holds.value:
                yield state
        return

    # Interval-tracking shape: two Int bounds, one array, optional extras.
    lo_name = next(g for g in int_ghosts if g.endswith("lo") or "lo" in g)
    hi_name = next(g for g in int_ghosts if g.endswith("hi") or "hi" in g)
    extras = [g for g in int_ghosts if g not in (lo_name, hi_name)]
    arr_name = array_ghosts[0]

    def filtered(state: State) -> Iterator[State]:
        holds = eval_expr(op.invariant, state)
        if isinstance(holds, BoolV) and holds.value:
            yield state

    for lo in (-1, 0, 1):
        for length in range(0, cfg.max_window + 1):
            hi = lo + length
            elem_tuples = itertools.product(cfg.elems(), repeat=length)
            for tup in elem_tuples:
                arr = ArrayV.make(IntV(0), {lo + k: IntV(v)
                                            for k, v in enumerate(tup)})
                base: State = {lo_name: IntV(lo), hi_name: IntV(hi),
                               arr_name: arr}
                extra_domains = []
                for g in extras:
                    if length == 0:
                        extra_domains.append([IntV(-1), IntV(0), IntV(2)])
                    else:
                        # Derive plausible values from the tracked slice.
                        slice_vals = [arr.get(j).value for j in range(lo, hi)]
                        cands = {sum(slice_vals), max(slice_vals),
                                 min(slice_vals)}
                        cands.update(range(lo, hi))
                        extra_domains.append([IntV(v) for v in sorted(cands)])
                bool_domains = [[BoolV(False), BoolV(True)] for _ in bool_ghosts]
                for combo in itertools.product(*extra_domains, *bool_domains):
                    state = dict(base)
                    for g, v in zip(extras + bool_ghosts, combo):
                        state[g] = v
                    yield from filtered(state)


def certify_operator(op: InstrumentationOperator,
                     cfg: Optional[CertifyConfig] = None,
                     solver_cmd: Optional[list[str]] = None) -> ConditionReport:
    """Check the operator correctness conditions.

    Per rule: (1) invariant at initial ghosts, (2a) replacement loop-free,
    (2b) assignment-target audit, (2c) invariant preservation, (2d)
    assignment-semantics preservation.  2c and 2d run by bounded-exhaustive
    enumeration over I-states and meta instantiations; straight-line rules
    additionally get an SMT validity query.
    """
    cfg = cfg or CertifyConfig()
    report = ConditionReport(op.name)
    init = op.init_state()
    holds = eval_expr(op.invariant, init)
    report.results.append(ConditionResult(
        "-", "1-invariant-at-init",
        isinstance(holds, BoolV) and holds.value,
        None if isinstance(holds, BoolV) and holds.value else dict(init)))

    ghost_states = list(_ghost_states(op, cfg))
    for rule in op.rules:
        report.results.append(ConditionResult(
            rule.id, "2a-loop-free", not _contains_while(rule.replacement)))
        allowed = set(op.ghost_names()) | {rule.pattern.target_meta}
        targets = _assigned_targets(rule.replacement)
        report.results.append(ConditionResult(
            rule.id, "2b-assign-audit", targets <= allowed,
            detail="" if targets <= allowed else
            f"assigns {sorted(targets - allowed)}"))

        body = asserts_to_assumes(rule.replacement)
        schema_rhs = rule.pattern.schema_rhs()
        target = rule.pattern.target_meta
        c2c = ConditionResult(rule.id, "2c-preserves-invariant", True)
        c2d = ConditionResult(rule.id, "2d-preserves-assignment", True)
        program = Program([], Block([copy_stmt(s) for s in body]))
        from .syntax import relabel
        relabel(program)
        for ghost_state in ghost_states:
            if not c2c.passed and not c2d.passed:
                break
            for metas in _meta_states(rule, ghost_state, cfg):
                pre: State = dict(ghost_state) | metas
                try:
                    expected = eval_expr(schema_rhs, pre)
                except (KeyError, AssertionError):
                    continue  # ill-typed instantiation for this rule
                result = run(program, pre, fuel=cfg.fuel)
                if isinstance(result, Blocked):
                    continue  # an inserted assert rejected this state
                if not isinstance(result, Terminated):
                    c2c.passed = False
                    c2c.witness = pre
                    c2c.detail = "replacement did not terminate normally"
                    break
                post = result.final
                inv = eval_expr(op.invariant, post)
                if c2c.passed and not (isinstance(inv, BoolV) and inv.value):
                    c2c.passed = False
                    c2c.witness = post
                    c2c.detail = f"from pre-state {state_to_json(pre)}"
                if c2d.passed and post[_target_name(metas, target)] != expected:
                    c2d.passed = False
                    c2d.witness = post
                    c2d.detail = (f"expected {value_to_json(expected)} in "
                                  f"{target!r} from {state_to_json(pre)}")
            else:
                continue
            break
        report.results.append(c2c)
        report.results.append(c2d)

        if cfg.use_smt and not _branches(rule.replacement):
            smt_result = _certify_smt(op, rule, solver_cmd)
            if smt_result is not None:
                report.results.extend(smt_result)
    return report


def _target_name(metas: State, target: str) -> str:
    return target  # metas are stored under their meta names


def _branches(stmts: tuple[Stmt, ...] | list[Stmt]) -> bool:
    for s in stmts:
        for sub in statements(s) if isinstance(s, (Block, If, While)) else [s]:
            if isinstance(sub, (If, While)):
                return True
    return False


def _certify_smt(op: InstrumentationOperator, rule: RewriteRule,
                 solver_cmd: Optional[list[str]]) -> Optional[list[ConditionResult]]:
    """Validity queries for straight-line rules; None when no solver."""
    from .smt import SolverError, SolverSession, default_solver_command
    from .encode import straight_line_formula

    try:
        cmd = solver_cmd or default_solver_command()
    except SolverError:
        return None
    types: dict[str, Type] = dict(op.ghost_types())
    for m in rule.meta_names():
        types[m] = INT
    out: list[ConditionResult] = []
    try:
        with SolverSession(cmd) as session:
            body = asserts_to_assumes(rule.replacement)
            vc2c = straight_line_formula(
                types, op.invariant, body, op.invariant)
            res = session.check_valid(vc2c)
            out.append(ConditionResult(rule.id, "2c-smt", res == "unsat",
                                       detail="" if res == "unsat" else res))
            schema = rule.pattern.schema_rhs()
            pre = And(op.invariant, Eq(Var("__z"), schema))
            types2 = dict(types)
            types2["__z"] = INT
            vc2d = straight_line_formula(
                types2, pre, body, Eq(Var("__z"), Var(rule.pattern.target_meta)))
            res = session.check_valid(vc2d)
            out.append(ConditionResult(rule.id, "2d-smt", res == "unsat",
                                       detail="" if res == "unsat" else res))
    except SolverError as exc:
        out.append(ConditionResult(rule.id, "smt", False, detail=str(exc)))
    return out


# ---------------------------------------------------------------------------
# Witness back-translation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantFormula:
    """A formula with存 existentially quantified ghost variables."""

    exists: tuple[tuple[str, Type], ...]
    body: Expr

    def pretty(self) -> str:
        body = printer.print_expr(self.body)
        if not self.exists:
            return body
        names = ", ".join(n for n, _ in self.exists)
        return f"exists {names}. {body}"


Witness = dict[Label, QuantFormula]


def back_translate_witness(witness: Witness,
                           ops: list[InstrumentationOperator]) -> Witness:
    """Conjoin the instrumentation invariants and quantify the ghosts.

    Ghost-free formulas pass through unchanged: the closed invariant
    conjunct is valid because the invariant holds at the initial ghost
    values (certification condition 1).
    """
    ghost_types: dict[str, Type] = {}
    for op in ops:
        ghost_types.update(op.ghost_types())
    invariant = [op.invariant for op in ops]
    out: Witness = {}
    for label, qf in witness.items():
        mentioned = free_vars(qf.body) & set(ghost_types)
        if not mentioned and not qf.exists:
            out[label] = qf
            continue
        body = qf.body
        for inv in invariant:
            body = And(body, inv)
        bound = tuple((g, ghost_types[g]) for g in sorted(set(ghost_types)))
        out[label] = QuantFormula(tuple(qf.exists) + bound, body)
    return out
