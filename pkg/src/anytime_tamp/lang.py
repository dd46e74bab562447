"""Parser and grounder for a small PPDDL-like stochastic planning language.

Action schemas carry discrete parameters (bound to problem objects during
grounding) and continuous parameters of type ``Pose`` or ``Trajectory``
(left symbolic; they are bound later by generators).  Probabilities are kept
as exact :class:`fractions.Fraction` values.

The grammar is documented in ``README.md``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator

CONTINUOUS_TYPES = frozenset({"Pose", "Trajectory"})


class LangError(ValueError):
    """Base class for domain/problem errors."""


class ParseError(LangError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})" if line else message)


class ProbabilitySumError(LangError):
    pass


class UnknownTypeError(LangError):
    pass


class UnknownSymbolError(LangError):
    pass


class HorizonError(LangError):
    pass


# ---------------------------------------------------------------------------
# S-expressions


class Symbol(str):
    """An atom token that remembers where it was read."""

    line: int
    col: int

    def __new__(cls, text: str, line: int = 0, col: int = 0):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            col += 1
            i += 1
        else:
            start, start_col = i, col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            yield text[start:i], line, start_col


def read_sexprs(text: str) -> list:
    """Read every top-level S-expression in ``text``."""
    stack: list[SList] = []
    out: list = []
    for tok, line, col in _tokens(text):
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            sym = Symbol(tok, line, col)
            (stack[-1] if stack else out).append(sym)
    if stack:
        raise ParseError("unclosed '('", stack[-1].line, stack[-1].col)
    return out


def _pos(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, list):
        raise ParseError(f"expected {what}, got {node!r}", *_pos(node))
    return node


def _expect_symbol(node, what: str) -> Symbol:
    if isinstance(node, list):
        raise ParseError(f"expected {what}, got a list", *_pos(node))
    return node


# ---------------------------------------------------------------------------
# Model


@dataclass(frozen=True, order=True)
class GroundedFact:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"({' '.join((self.predicate,) + self.args)})"


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class NumericTest:
    """A builtin comparison such as ``batterySufficient`` over a numeric fluent."""

    schema: PredicateSchema
    fluent: str


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[str, ...] = ()
    positive: bool = True

    def __str__(self) -> str:
        atom = f"({' '.join((self.predicate,) + self.args)})"
        return atom if self.positive else f"(not {atom})"


@dataclass(frozen=True)
class NumericEffect:
    """``(decrease (fluent) expr)`` or ``(restore (fluent))``."""

    op: str
    fluent: str
    expr: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.op == "restore":
            return f"(restore ({self.fluent}))"
        expr = self.expr[0] if len(self.expr) == 1 else f"({' '.join(self.expr)})"
        return f"({self.op} ({self.fluent}) {expr})"


@dataclass(frozen=True)
class Outcome:
    probability: Fraction
    effects: tuple[Literal, ...]

    @property
    def add(self) -> tuple[Literal, ...]:
        return tuple(e for e in self.effects if e.positive)

    @property
    def delete(self) -> tuple[Literal, ...]:
        return tuple(e for e in self.effects if not e.positive)


def canonical_effects(effects) -> tuple[Literal, ...]:
    """Deduplicated, sorted effect list; deletes apply before adds, so order is irrelevant."""
    return tuple(sorted(set(effects), key=lambda e: (e.predicate, e.args, e.positive)))


@dataclass(frozen=True)
class ActionSchema:
    name: str
    discrete_params: tuple[tuple[str, str], ...]
    continuous_params: tuple[tuple[str, str], ...]
    precondition: tuple[Literal, ...]
    outcomes: tuple[Outcome, ...]
    numeric_effects: tuple[NumericEffect, ...] = ()
    cost: Fraction = Fraction(1)

    @property
    def params(self) -> tuple[tuple[str, str], ...]:
        return self.discrete_params + self.continuous_params


@dataclass(frozen=True)
class Domain:
    name: str
    types: tuple[str, ...]
    predicates: tuple[PredicateSchema, ...]
    functions: tuple[str, ...]
    numeric_tests: tuple[NumericTest, ...]
    actions: tuple[ActionSchema, ...]
    probability_constants: tuple[tuple[str, Fraction], ...] = ()

    def predicate(self, name: str) -> PredicateSchema:
        for p in self.predicates:
            if p.name == name:
                return p
        for t in self.numeric_tests:
            if t.schema.name == name:
                return t.schema
        raise UnknownSymbolError(f"unknown predicate {name!r}")

    def numeric_test(self, name: str) -> NumericTest | None:
        for t in self.numeric_tests:
            if t.schema.name == name:
                return t
        return None

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise UnknownSymbolError(f"unknown action {name!r}")


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]
    init: frozenset[GroundedFact]
    numeric_init: tuple[tuple[str, float], ...]
    goal: frozenset[GroundedFact]
    horizon: int

    def objects_of_type(self, type_name: str) -> list[str]:
        return [o for o, t in self.objects if t == type_name]

    @property
    def object_names(self) -> frozenset[str]:
        return frozenset(o for o, _ in self.objects)


@dataclass(frozen=True)
class GroundedAction:
    """An action schema with its discrete parameters bound; continuous ones stay free."""

    schema: ActionSchema
    binding: tuple[tuple[str, str], ...]

    @cached_property
    def args(self) -> tuple[str, ...]:
        return tuple(o for _, o in self.binding)

    @cached_property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.schema.name, self.args)

    @property
    def unbound(self) -> tuple[tuple[str, str], ...]:
        return self.schema.continuous_params

    def __str__(self) -> str:
        return f"{self.schema.name}({','.join(self.args)})"


# ---------------------------------------------------------------------------
# Parsing helpers


def _typed_list(items, *, stop: str | None = None) -> tuple[list[tuple[Symbol, Symbol]], int]:
    """Parse ``a b - T c - U`` into [(a, T), (b, T), (c, U)].

    Returns the pairs and the index where parsing stopped.
    """
    out: list[tuple[Symbol, Symbol]] = []
    pending: list[Symbol] = []
    i = 0
    while i < len(items):
        tok = _expect_symbol(items[i], "name")
        if stop is not None and tok == stop:
            break
        if tok == "-":
            if i + 1 >= len(items) or not pending:
                raise ParseError("dangling '-' in typed list", *_pos(tok))
            tname = _expect_symbol(items[i + 1], "type name")
            out.extend((p, tname) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    if pending:
        raise ParseError(f"missing type for {', '.join(pending)}", *_pos(pending[0]))
    return out, i


def _parse_number(tok: Symbol) -> Fraction:
    try:
        return Fraction(str(tok))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a number, got {tok!r}", *_pos(tok)) from None


def _parse_probability(node, constants: dict[str, Fraction]) -> Fraction:
    if isinstance(node, list):
        if len(node) == 3 and node[0] == "-":
            return _parse_probability(node[1], constants) - _parse_probability(node[2], constants)
        raise ParseError("probability must be a number, a constant or (- a b)", *_pos(node))
    if str(node) in constants:
        return constants[str(node)]
    return _parse_number(node)


def _parse_literal(node) -> Literal:
    lst = _expect_list(node, "literal")
    if not lst:
        raise ParseError("empty literal", *_pos(lst))
    if lst[0] == "not":
        if len(lst) != 2:
            raise ParseError("(not ...) takes one literal", *_pos(lst))
        inner = _parse_literal(lst[1])
        if not inner.positive:
            raise ParseError("double negation", *_pos(lst))
        return Literal(inner.predicate, inner.args, False)
    for tok in lst:
        _expect_symbol(tok, "predicate or argument")
    return Literal(str(lst[0]), tuple(str(t) for t in lst[1:]))


def _conjuncts(node) -> list:
    lst = _expect_list(node, "formula")
    if lst and lst[0] == "and":
        return list(lst[1:])
    return [lst]


# ---------------------------------------------------------------------------
# Domain


def parse_domain(text: str, constants: dict[str, Fraction | float | str] | None = None) -> Domain:
    """Parse domain text.

    ``constants`` overrides the probability constants declared in the file,
    e.g. ``{"fail": Fraction(1, 10)}``.
    """
    forms = read_sexprs(text)
    if len(forms) != 1:
        raise ParseError("expected exactly one (define ...) form")
    top = _expect_list(forms[0], "(define ...)")
    if len(top) < 2 or top[0] != "define":
        raise ParseError("expected (define (domain NAME) ...)", *_pos(top))
    head = _expect_list(top[1], "(domain NAME)")
    if len(head) != 2 or head[0] != "domain":
        raise ParseError("expected (domain NAME)", *_pos(head))
    name = str(head[1])

    types: list[str] = []
    predicates: list[PredicateSchema] = []
    functions: list[str] = []
    tests: list[tuple[PredicateSchema, str, SList]] = []
    consts: dict[str, Fraction] = {}
    action_forms: list[SList] = []
    seen_sections: set[str] = set()

    for section in top[2:]:
        sec = _expect_list(section, "domain section")
        if not sec:
            raise ParseError("empty section", *_pos(sec))
        kind = str(sec[0])
        if kind != ":action":
            if kind in seen_sections:
                raise ParseError(f"duplicate section {kind}", *_pos(sec))
            seen_sections.add(kind)
        if kind == ":types":
            types.extend(str(_expect_symbol(t, "type")) for t in sec[1:])
        elif kind == ":predicates":
            for p in sec[1:]:
                plist = _expect_list(p, "predicate declaration")
                params, _ = _typed_list(plist[1:])
                predicates.append(PredicateSchema(str(plist[0]), tuple((str(a), str(b)) for a, b in params)))
        elif kind == ":functions":
            for f in sec[1:]:
                flist = _expect_list(f, "(fluent)")
                if len(flist) != 1:
                    raise ParseError("only zero-arity numeric fluents are supported", *_pos(flist))
                functions.append(str(flist[0]))
        elif kind == ":numeric-tests":
            for t in sec[1:]:
                tlist = _expect_list(t, "numeric test")
                params, stop = _typed_list(tlist[1:], stop=":fluent")
                rest = tlist[1 + stop:]
                if len(rest) != 2:
                    raise ParseError("numeric test needs ':fluent NAME'", *_pos(tlist))
                tests.append(
                    (PredicateSchema(str(tlist[0]), tuple((str(a), str(b)) for a, b in params)), str(rest[1]), tlist)
                )
        elif kind == ":probabilities":
            for c in sec[1:]:
                clist = _expect_list(c, "(NAME VALUE)")
                if len(clist) != 2:
                    raise ParseError("expected (NAME VALUE)", *_pos(clist))
                consts[str(clist[0])] = _parse_number(clist[1])
        elif kind == ":action":
            action_forms.append(sec)
        else:
            raise ParseError(f"unknown domain section {kind}", *_pos(sec))

    for k, v in (constants or {}).items():
        consts[k] = Fraction(str(v)) if isinstance(v, (float, str)) else Fraction(v)

    known_types = set(types) | CONTINUOUS_TYPES
    names_seen: set[str] = set()
    for p in predicates + [t[0] for t in tests]:
        if p.name in names_seen:
            raise LangError(f"duplicate predicate {p.name!r}")
        names_seen.add(p.name)
        _check_params(p.params, known_types, f"predicate {p.name}")
    for schema, fluent, node in tests:
        if fluent not in functions:
            raise UnknownSymbolError(f"numeric test {schema.name!r} refers to undeclared fluent {fluent!r}")
        if any(t not in CONTINUOUS_TYPES for _, t in schema.params):
            raise ParseError(f"numeric test {schema.name!r} may only take continuous parameters", *_pos(node))

    pred_by_name = {p.name: p for p in predicates}
    pred_by_name.update({t[0].name: t[0] for t in tests})
    test_names = {t[0].name for t in tests}
    actions = [_parse_action(f, known_types, pred_by_name, functions, consts, test_names) for f in action_forms]
    if len({a.name for a in actions}) != len(actions):
        raise LangError("duplicate action name")

    return Domain(
        name=name,
        types=tuple(types),
        predicates=tuple(predicates),
        functions=tuple(functions),
        numeric_tests=tuple(NumericTest(s, f) for s, f, _ in tests),
        actions=tuple(actions),
        probability_constants=tuple(sorted(consts.items())),
    )


def _check_params(params, known_types, where: str) -> None:
    names = [n for n, _ in params]
    if len(set(names)) != len(names):
        raise LangError(f"duplicate parameter name in {where}")
    for _, t in params:
        if t not in known_types:
            raise UnknownTypeError(f"undeclared type {t!r} in {where}")


def _parse_action(sec: SList, known_types, preds, functions, consts, test_names) -> ActionSchema:
    if len(sec) < 2:
        raise ParseError("action needs a name", *_pos(sec))
    name = str(_expect_symbol(sec[1], "action name"))
    fields: dict[str, object] = {}
    i = 2
    while i < len(sec):
        key = _expect_symbol(sec[i], "action keyword")
        if key not in (":parameters", ":precondition", ":effect", ":cost"):
            raise ParseError(f"unknown action keyword {key}", *_pos(key))
        if i + 1 >= len(sec):
            raise ParseError(f"{key} needs a value", *_pos(key))
        fields[str(key)] = sec[i + 1]
        i += 2

    params_raw, _ = _typed_list(_expect_list(fields.get(":parameters", SList()), "parameter list"))
    params = tuple((str(a), str(b)) for a, b in params_raw)
    _check_params(params, known_types, f"action {name}")
    discrete = tuple(p for p in params if p[1] not in CONTINUOUS_TYPES)
    continuous = tuple(p for p in params if p[1] in CONTINUOUS_TYPES)
    var_names = {p[0] for p in params}

    def check_lit(lit: Literal, node) -> Literal:
        if lit.predicate not in preds:
            raise UnknownSymbolError(f"unknown predicate {lit.predicate!r} in action {name}")
        schema = preds[lit.predicate]
        if len(lit.args) != schema.arity and not (not lit.args and lit.predicate in test_names):
            raise LangError(f"wrong arity for {lit.predicate!r} in action {name}")
        for a in lit.args:
            if a.startswith("?") and a not in var_names:
                raise UnknownSymbolError(f"unbound variable {a} in action {name}")
        return lit

    pre_node = fields.get(":precondition")
    precondition = tuple(check_lit(_parse_literal(c), c) for c in _conjuncts(pre_node)) if pre_node is not None else ()

    det: list[Literal] = []
    numeric: list[NumericEffect] = []
    branches: list[tuple[Fraction, list[Literal]]] | None = None
    eff_node = fields.get(":effect")
    for part in _conjuncts(eff_node) if eff_node is not None else []:
        head = part[0] if part else None
        if head == "probabilistic":
            if branches is not None:
                raise ParseError("only one probabilistic block per action", *_pos(part))
            items = part[1:]
            if len(items) % 2:
                raise ParseError("probabilistic needs PROB EFFECT pairs", *_pos(part))
            branches = []
            for k in range(0, len(items), 2):
                prob = _parse_probability(items[k], consts)
                if prob < 0 or prob > 1:
                    raise ProbabilitySumError(f"probability {prob} outside [0, 1] in action {name}")
                lits = [check_lit(_parse_literal(c), c) for c in _conjuncts(items[k + 1])] if items[k + 1] else []
                branches.append((prob, lits))
        elif head in ("decrease", "restore"):
            numeric.append(_parse_numeric_effect(part, functions, var_names, name))
        else:
            det.append(check_lit(_parse_literal(part), part))

    if branches is None:
        branches = [(Fraction(1), [])]
    total = sum(p for p, _ in branches)
    if total != 1:
        raise ProbabilitySumError(f"outcome probabilities of action {name} sum to {total}, not 1")
    outcomes = tuple(Outcome(p, canonical_effects(det + lits)) for p, lits in branches)

    cost = Fraction(1)
    if ":cost" in fields:
        cost = _parse_number(_expect_symbol(fields[":cost"], "cost"))
        if cost < 0:
            raise LangError(f"negative cost in action {name}")
    return ActionSchema(name, discrete, continuous, precondition, outcomes, tuple(numeric), cost)


def _parse_numeric_effect(part, functions, var_names, action_name) -> NumericEffect:
    op = str(part[0])
    if len(part) < 2:
        raise ParseError(f"({op} ...) needs a fluent", *_pos(part))
    fl = _expect_list(part[1], "(fluent)")
    if len(fl) != 1 or str(fl[0]) not in functions:
        raise UnknownSymbolError(f"unknown fluent in action {action_name}")
    if op == "restore":
        if len(part) != 2:
            raise ParseError("(restore (fluent)) takes no expression", *_pos(part))
        return NumericEffect("restore", str(fl[0]))
    if len(part) != 3:
        raise ParseError("(decrease (fluent) EXPR)", *_pos(part))
    expr = part[2]
    if isinstance(expr, list):
        toks = tuple(str(_expect_symbol(t, "expression term")) for t in expr)
        if toks[0] != "cost" or len(toks) != 2 or toks[1] not in var_names:
            raise ParseError("expression must be a number or (cost ?var)", *_pos(expr))
    else:
        _parse_number(expr)
        toks = (str(expr),)
    return NumericEffect("decrease", str(fl[0]), toks)


# ---------------------------------------------------------------------------
# Problem


def parse_problem(text: str, domain: Domain) -> Problem:
    forms = read_sexprs(text)
    if len(forms) != 1:
        raise ParseError("expected exactly one (define ...) form")
    top = _expect_list(forms[0], "(define ...)")
    if len(top) < 2 or top[0] != "define":
        raise ParseError("expected (define (problem NAME) ...)", *_pos(top))
    head = _expect_list(top[1], "(problem NAME)")
    if len(head) != 2 or head[0] != "problem":
        raise ParseError("expected (problem NAME)", *_pos(head))

    domain_name = domain.name
    objects: list[tuple[str, str]] = []
    init_nodes: list = []
    goal_nodes: list = []
    horizon: int | None = None
    seen: set[str] = set()
    for section in top[2:]:
        sec = _expect_list(section, "problem section")
        if not sec:
            raise ParseError("empty section", *_pos(sec))
        kind = str(sec[0])
        if kind in seen:
            raise ParseError(f"duplicate section {kind}", *_pos(sec))
        seen.add(kind)
        if kind == ":domain":
            domain_name = str(sec[1])
            if domain_name != domain.name:
                raise LangError(f"problem targets domain {domain_name!r}, not {domain.name!r}")
        elif kind == ":objects":
            pairs, _ = _typed_list(sec[1:])
            objects.extend((str(a), str(b)) for a, b in pairs)
        elif kind == ":init":
            init_nodes = list(sec[1:])
        elif kind == ":goal":
            goal_nodes = _conjuncts(sec[1]) if len(sec) > 1 else []
        elif kind == ":horizon":
            if len(sec) != 2:
                raise HorizonError("(:horizon N) takes one integer")
            try:
                horizon = int(str(sec[1]))
            except ValueError:
                raise HorizonError(f"horizon must be an integer, got {sec[1]!r}") from None
        else:
            raise ParseError(f"unknown problem section {kind}", *_pos(sec))

    if horizon is None:
        raise HorizonError("problem has no (:horizon N)")
    if horizon < 1:
        raise HorizonError(f"horizon must be >= 1, got {horizon}")

    for o, t in objects:
        if t not in domain.types:
            raise UnknownTypeError(f"object {o!r} has undeclared type {t!r}")
    if len({o for o, _ in objects}) != len(objects):
        raise LangError("duplicate object name")
    obj_types = dict(objects)

    def ground_fact(node) -> GroundedFact:
        lit = _parse_literal(node)
        if not lit.positive:
            raise ParseError("negative literals are not allowed here", *_pos(node))
        schema = domain.predicate(lit.predicate)
        test = domain.numeric_test(lit.predicate)
        if test is not None:
            if lit.args:
                raise LangError(f"numeric test {lit.predicate!r} is used without arguments in problems")
            return GroundedFact(lit.predicate)
        if len(lit.args) != schema.arity:
            raise LangError(f"wrong arity for {lit.predicate!r}")
        for a, (_, t) in zip(lit.args, schema.params):
            if a not in obj_types:
                raise UnknownSymbolError(f"unknown object {a!r}")
            if obj_types[a] != t:
                raise LangError(f"object {a!r} has type {obj_types[a]!r}, expected {t!r}")
        return GroundedFact(lit.predicate, lit.args)

    init: set[GroundedFact] = set()
    numeric: dict[str, float] = {}
    for node in init_nodes:
        lst = _expect_list(node, "fact")
        if lst and lst[0] == "=":
            fl = _expect_list(lst[1], "(fluent)")
            if str(fl[0]) not in domain.functions:
                raise UnknownSymbolError(f"unknown fluent {fl[0]!r}")
            value = float(_parse_number(lst[2]))
            numeric[str(fl[0])] = value
        else:
            init.add(ground_fact(node))
    goal = frozenset(ground_fact(n) for n in goal_nodes)
    return Problem(
        name=str(head[1]),
        domain_name=domain_name,
        objects=tuple(objects),
        init=frozenset(init),
        numeric_init=tuple(sorted(numeric.items())),
        goal=goal,
        horizon=horizon,
    )


# ---------------------------------------------------------------------------
# Printing (round-trips through parse_domain)


def _fmt_params(params) -> str:
    return " ".join(f"{n} - {t}" for n, t in params)


def _fmt_fraction(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def format_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.types:
        lines.append(f"  (:types {' '.join(domain.types)})")
    if domain.predicates:
        lines.append("  (:predicates")
        for p in domain.predicates:
            inner = f"{p.name} {_fmt_params(p.params)}".rstrip()
            lines.append(f"    ({inner})")
        lines.append("  )")
    if domain.functions:
        lines.append(f"  (:functions {' '.join(f'({f})' for f in domain.functions)})")
    if domain.numeric_tests:
        lines.append("  (:numeric-tests")
        for t in domain.numeric_tests:
            lines.append(f"    ({t.schema.name} {_fmt_params(t.schema.params)} :fluent {t.fluent})")
        lines.append("  )")
    if domain.probability_constants:
        body = " ".join(f"({k} {_fmt_fraction(v)})" for k, v in domain.probability_constants)
        lines.append(f"  (:probabilities {body})")
    for a in domain.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_fmt_params(a.params)})")
        if a.precondition:
            lines.append(f"    :precondition (and {' '.join(str(l) for l in a.precondition)})")
        common = set(a.outcomes[0].effects)
        for o in a.outcomes[1:]:
            common &= set(o.effects)
        det = [e for e in a.outcomes[0].effects if e in common]
        parts = [str(e) for e in det] + [str(n) for n in a.numeric_effects]
        if len(a.outcomes) > 1 or any(len(o.effects) != len(det) for o in a.outcomes):
            branches = []
            for o in a.outcomes:
                rest = [str(e) for e in o.effects if e not in common]
                branches.append(f"{_fmt_fraction(o.probability)} (and {' '.join(rest)})")
            parts.append(f"(probabilistic {' '.join(branches)})")
        lines.append(f"    :effect (and {' '.join(parts)})")
        if a.cost != 1:
            lines.append(f"    :cost {_fmt_fraction(a.cost)}")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Grounding


def ground_actions(domain: Domain, problem: Problem) -> list[GroundedAction]:
    """Every type-compatible instantiation of the discrete parameters.

    Continuous parameters are never enumerated.  Order follows the domain's
    action order, then objects in declaration order.
    """
    out: list[GroundedAction] = []
    for schema in domain.actions:
        pools = [problem.objects_of_type(t) for _, t in schema.discrete_params]
        for combo in itertools.product(*pools):
            binding = tuple((v, o) for (v, _), o in zip(schema.discrete_params, combo))
            out.append(GroundedAction(schema, binding))
    return out


def substitute(args: tuple[str, ...], binding: dict[str, str]) -> tuple[str, ...]:
    return tuple(binding.get(a, a) for a in args)
