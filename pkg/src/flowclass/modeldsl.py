"""Plain-text model files (``.fcm``) compiled to vector fields.

A model file is a sequence of line statements::

    # Two-gene toggle switch
    state u v
    param a = 1
    let pu = a / (1 + v^2)
    eq u' = pu - u
    eq v' = a / (1 + u^2) - v
    bound u = [0, 2]
    bound v = [0, 2]

Expressions support ``+ - * / ^`` (``^`` binds tightest and is
right-associative, then unary minus, then ``* /``, then ``+ -``),
parentheses and the functions ``exp log sin cos tan tanh sqrt abs min max``.
States and parameters may be declared anywhere in the file; a ``let`` may
only use lets defined above it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import ModelParseError, UnknownParameterError
from .numerics import Dual
from .vectorfield import VectorField

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ModelDocument",
    "parse_model",
    "parse_expression",
    "load_model",
    "format_model",
    "format_expression",
    "evaluate",
    "compile_model",
    "FUNCTIONS",
]

# name -> allowed argument counts (None: two or more)
FUNCTIONS = {
    "exp": 1, "log": 1, "sin": 1, "cos": 1, "tan": 1, "tanh": 1, "sqrt": 1, "abs": 1,
    "min": None, "max": None,
}
KEYWORDS = {"state", "param", "let", "eq", "bound"}
# recursion guards: parser nesting, and depth of the finished tree (the code
# generator and printer recurse over it)
MAX_DEPTH = 100
MAX_TREE_DEPTH = 120


# ---------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    line: int = field(default=0, compare=False, repr=False)
    column: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass
class ModelDocument:
    states: tuple = ()
    params: dict = field(default_factory=dict)
    lets: tuple = ()
    equations: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.states)

    def bounds_list(self):
        """Bounds in state order, or ``None`` unless every state has one."""
        if set(self.bounds) != set(self.states):
            return None
        return [tuple(self.bounds[s]) for s in self.states]


# -------------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\f\v]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),=\[\]'−])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    column: int


def _tokenize(line, lineno):
    out = []
    pos = 0
    n = len(line)
    while pos < n:
        if line[pos] == "#":
            break
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ModelParseError("syntax", f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if text == "−":
                text = "-"
            out.append(Token(kind, text, pos + 1))
        pos = m.end()
    out.append(Token("end", "", n + 1))
    return out


# ------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens, lineno):
        self.toks = tokens
        self.i = 0
        self.line = lineno
        self.depth = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, message, tok=None, kind="syntax"):
        tok = tok or self.tok
        raise ModelParseError(kind, message, self.line, tok.column)

    def _describe(self, tok):
        return "end of line" if tok.kind == "end" else repr(tok.text)

    def advance(self):
        t = self.tok
        if t.kind != "end":
            self.i += 1
        return t

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}, found {self._describe(self.tok)}")
        return t

    def name(self, what="name"):
        t = self.tok
        if t.kind != "name":
            self.error(f"expected {what}, found {self._describe(t)}")
        if t.text in KEYWORDS or t.text in FUNCTIONS:
            self.error(f"{t.text!r} is reserved and cannot be used as a {what}")
        return self.advance()

    def number(self):
        sign = -1.0 if self.accept("-") else 1.0
        if sign > 0:
            self.accept("+")
        t = self.tok
        if t.kind != "num":
            self.error(f"expected a number, found {self._describe(t)}")
        self.advance()
        return sign * self._value(t)

    def _value(self, t):
        v = float(t.text)
        if not math.isfinite(v):
            self.error(f"number {t.text} is out of range", t)
        return v

    def full_expr(self):
        start = self.tok
        e = self.expr()
        if tree_depth(e) > MAX_TREE_DEPTH:
            self.error(f"expression nested more than {MAX_TREE_DEPTH} levels deep", start)
        return e

    def end(self):
        if self.tok.kind != "end":
            self.error(f"unexpected {self._describe(self.tok)}")

    # expression grammar
    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.error("expression nested too deeply")
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._operator()
            left = BinOp(op, left, self.term())
        self.depth -= 1
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._operator()
            left = BinOp(op, left, self.unary())
        return left

    def _operator(self):
        t = self.advance()
        if self.tok.kind == "end":
            self.error(f"operator {t.text!r} is missing its right operand", t)
        return t.text

    def unary(self):
        if self.accept("-"):
            return Neg(self._nested(self.unary))
        if self.accept("+"):
            return self._nested(self.unary)
        return self.power()

    def _nested(self, rule):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.error("expression nested too deeply")
        out = rule()
        self.depth -= 1
        return out

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._operator()
            return BinOp("^", base, self._nested(self.unary))
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(self._value(t))
        if t.kind == "name":
            self.advance()
            if self.accept("("):
                return self.call(t)
            if t.text in FUNCTIONS:
                self.error(f"function {t.text!r} must be called with arguments", t)
            if t.text in KEYWORDS:
                self.error(f"{t.text!r} is reserved", t)
            return Var(t.text, self.line, t.column)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"expected an expression, found {self._describe(t)}")

    def call(self, name_tok):
        fname = name_tok.text
        if fname not in FUNCTIONS:
            raise ModelParseError("unknown-identifier", f"unknown function {fname!r}",
                                  self.line, name_tok.column)
        args = []
        if not self.accept(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
        arity = FUNCTIONS[fname]
        if (arity is None and len(args) < 2) or (arity is not None and len(args) != arity):
            want = "at least 2 arguments" if arity is None else f"{arity} argument"
            self.error(f"{fname}() takes {want}, got {len(args)}", name_tok)
        return Call(fname, tuple(args))


def _children(e):
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    return ()


def tree_depth(e):
    """Depth of an expression tree, computed without recursion."""
    best = 0
    stack = [(e, 1)]
    while stack:
        node, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in _children(node))
    return best


def _variables(expr):
    if isinstance(expr, Var):
        yield expr
    elif isinstance(expr, Neg):
        yield from _variables(expr.operand)
    elif isinstance(expr, BinOp):
        yield from _variables(expr.left)
        yield from _variables(expr.right)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from _variables(a)


def parse_expression(text):
    """Parse a single expression (used by tests and the printer round trip)."""
    p = _Parser(_tokenize(text, 1), 1)
    e = p.full_expr()
    p.end()
    return e


def _decode(text):
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text)[: exc.start].count(b"\n") + 1
            col = exc.start - (bytes(text).rfind(b"\n", 0, exc.start) + 1) + 1
            raise ModelParseError("syntax", "file is not valid UTF-8", line, col) from None
    return text


def parse_model(text):
    """Parse model-file text (``str`` or UTF-8 ``bytes``) into a :class:`ModelDocument`.

    Raises
    ------
    ModelParseError
        With ``kind`` naming the problem and the 1-based line and column.
    """
    text = _decode(text)
    states = []
    params = {}
    lets = []
    equations = {}
    bounds = {}
    declared = {}  # name -> (line, column, kind)
    state_pos = {}
    let_refs = []  # (let index, set of lets visible)
    eq_exprs = []

    def declare(tok, kind, lineno):
        if tok.text in declared:
            prev = declared[tok.text][0]
            raise ModelParseError("duplicate-declaration",
                                  f"{tok.text!r} already declared on line {prev}",
                                  lineno, tok.column)
        declared[tok.text] = (lineno, tok.column, kind)

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        toks = _tokenize(line, lineno)
        if toks[0].kind == "end":
            continue
        p = _Parser(toks, lineno)
        head = p.tok
        if head.kind != "name" or head.text not in KEYWORDS:
            p.error(f"expected one of {', '.join(sorted(KEYWORDS))}, found {p._describe(head)}")
        p.advance()
        kw = head.text
        if kw == "state":
            t = p.name("state name")
            while True:
                declare(t, "state", lineno)
                states.append(t.text)
                state_pos[t.text] = (lineno, t.column)
                if p.tok.kind == "end":
                    break
                t = p.name("state name")
        elif kw == "param":
            t = p.name("parameter name")
            p.expect("=")
            value = p.number()
            p.end()
            declare(t, "param", lineno)
            params[t.text] = value
        elif kw == "let":
            t = p.name("let name")
            p.expect("=")
            e = p.full_expr()
            p.end()
            let_refs.append((e, {name for name, _ in lets}))
            declare(t, "let", lineno)
            lets.append((t.text, e))
        elif kw == "eq":
            t = p.name("state name")
            p.expect("'")
            p.expect("=")
            e = p.full_expr()
            p.end()
            if t.text in equations:
                raise ModelParseError("duplicate-equation",
                                      f"second equation for {t.text!r}", lineno, t.column)
            equations[t.text] = e
            eq_exprs.append((t, lineno, e))
        else:  # bound
            t = p.name("state name")
            p.expect("=")
            p.expect("[")
            lo_tok = p.tok
            lo = p.number()
            p.expect(",")
            hi = p.number()
            p.expect("]")
            p.end()
            if t.text in bounds:
                raise ModelParseError("duplicate-declaration",
                                      f"second bound for {t.text!r}", lineno, t.column)
            if not lo < hi:
                raise ModelParseError("invalid-bound", f"bound for {t.text!r} needs lo < hi, "
                                      f"got [{lo:g}, {hi:g}]", lineno, lo_tok.column)
            bounds[t.text] = (lo, hi)
            eq_exprs.append((t, lineno, None))

    if not states:
        raise ModelParseError("missing-equation", "model declares no states", 1, 1)
    global_names = set(states) | set(params)
    for e, visible in let_refs:
        for v in _variables(e):
            if v.name not in global_names and v.name not in visible:
                _unknown(v)
    all_lets = {name for name, _ in lets}
    for t, lineno, e in eq_exprs:
        if t.text not in states:
            raise ModelParseError("unknown-identifier", f"{t.text!r} is not a declared state",
                                  lineno, t.column)
        if e is not None:
            for v in _variables(e):
                if v.name not in global_names and v.name not in all_lets:
                    _unknown(v)
    for s in states:
        if s not in equations:
            line, col = state_pos[s]
            raise ModelParseError("missing-equation", f"state {s!r} has no equation", line, col)
    return ModelDocument(
        states=tuple(states),
        params=params,
        lets=tuple(lets),
        equations={s: equations[s] for s in states},
        bounds={s: bounds[s] for s in states if s in bounds},
    )


def _unknown(v):
    raise ModelParseError("unknown-identifier", f"unknown identifier {v.name!r}", v.line, v.column)


def load_model(path):
    with open(path, "rb") as fh:
        return parse_model(fh.read())


# ------------------------------------------------------------------ printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return 5


def format_expression(e):
    """Canonical text for ``e`` with the minimum parentheses to reparse identically."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expression(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = format_expression(e.operand)
        return f"-({inner})" if _prec(e.operand) < 3 else f"-{inner}"
    p = _PREC[e.op]
    left = format_expression(e.left)
    right = format_expression(e.right)
    if e.op == "^":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def format_model(doc):
    lines = ["state " + " ".join(doc.states)]
    lines += [f"param {k} = {float(v)!r}" for k, v in doc.params.items()]
    lines += [f"let {k} = {format_expression(e)}" for k, e in doc.lets]
    lines += [f"eq {s}' = {format_expression(doc.equations[s])}" for s in doc.states]
    lines += [
        f"bound {s} = [{float(lo)!r}, {float(hi)!r}]" for s, (lo, hi) in doc.bounds.items()
    ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- evaluation


def _abs(x):
    return abs(x) if isinstance(x, Dual) else np.abs(x)


def _pick(args, better):
    out = args[0]
    for a in args[1:]:
        if isinstance(out, Dual) or isinstance(a, Dual):
            av = a.value if isinstance(a, Dual) else a
            ov = out.value if isinstance(out, Dual) else out
            if better(av, ov):
                out = a
        else:
            out = np.minimum(out, a) if better is _lt else np.maximum(out, a)
    return out


def _lt(a, b):
    return a < b


def _gt(a, b):
    return a > b


def _min(*args):
    return _pick(args, _lt)


def _max(*args):
    return _pick(args, _gt)


_RUNTIME = {
    "exp": numerics.exp, "log": numerics.log, "sin": numerics.sin, "cos": numerics.cos,
    "tan": numerics.tan, "tanh": numerics.tanh, "sqrt": numerics.sqrt, "abs": _abs,
    "min": _min, "max": _max,
}


def evaluate(e, env):
    """Tree-walking evaluation of ``e`` with variables from ``env``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, Call):
        return _RUNTIME[e.func](*(evaluate(a, env) for a in e.args))
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return a / b
    return a**b


def _codegen(e, names):
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Neg):
        return f"(-{_codegen(e.operand, names)})"
    if isinstance(e, Call):
        return f"_f_{e.func}({', '.join(_codegen(a, names) for a in e.args)})"
    op = "**" if e.op == "^" else e.op
    return f"({_codegen(e.left, names)} {op} {_codegen(e.right, names)})"


def compile_model(doc, overrides=None, name="model"):
    """Build a :class:`VectorField` and the file's bounds (``None`` if incomplete).

    The generated function evaluates parameters, then lets in order, then
    equations; it accepts float vectors, ``Dual`` arrays and column-stacked
    state arrays alike.

    Raises
    ------
    UnknownParameterError
        If ``overrides`` names a parameter the model does not declare.
    """
    params = dict(doc.params)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise UnknownParameterError(f"model has no parameter {key!r}")
        params[key] = float(value)
    names = {}
    body = []
    for i, s in enumerate(doc.states):
        names[s] = f"s_{s}"
        body.append(f"    s_{s} = x[{i}]")
    for k, v in params.items():
        names[k] = f"p_{k}"
        body.append(f"    p_{k} = {float(v)!r}")
    for k, e in doc.lets:
        code = _codegen(e, names)
        names[k] = f"l_{k}"
        body.append(f"    l_{k} = {code}")
    outs = ", ".join(_codegen(doc.equations[s], names) for s in doc.states)
    src = "def f(x):\n" + "\n".join(body) + f"\n    return [{outs}]\n"
    env = {f"_f_{k}": v for k, v in _RUNTIME.items()}
    exec(compile(src, f"<{name}>", "exec"), env)
    fn = env["f"]
    fn.source = src
    vf = VectorField(fn=fn, dim=doc.dim, name=name, vectorized=True, params=params)
    return vf, doc.bounds_list()
