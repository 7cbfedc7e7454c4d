"""Lexer and recursive-descent parser for the tuning language.

Grammar:

    program  := stmt*
    stmt     := IDENT '=' expr ';'
              | 'while' '(' cond ')' '{' stmt* '}'
              | 'if' '(' cond ')' '{' stmt* '}' [ 'else' '{' stmt* '}' ]
              | 'require_nsb' '(' IDENT ',' INT ')' ';'
    cond     := expr CMP expr          CMP in < <= > >= == !=
    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | atom
    atom     := NUMBER | IDENT | 'sqrt' '(' expr ')' | '(' expr ')'

'#' starts a comment running to end of line.  A unary minus applied
directly to a numeral folds into the literal, so -0.5 is one control
point, not two.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .program import (
    Assign, BinOp, Compare, If, Neg, Num, Program, Require, Sqrt, Stmt, Var,
    While, label_program,
)

KEYWORDS = {"while", "if", "else", "sqrt", "require_nsb"}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>      [ \t\r\n]+ | \#[^\n]* )
    | (?P<number>  (?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)? )
    | (?P<ident>   [A-Za-z_][A-Za-z_0-9]* )
    | (?P<cmp>     <=|>=|==|!=|<|> )
    | (?P<sym>     [-+*/=(){};,] )
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str      # number | ident | cmp | sym | end
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("end", "", line, len(src) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def fail(self, message: str) -> "ParseError":
        t = self.peek()
        return ParseError(message + (f", got {t.text!r}" if t.text else ", got end of input"),
                          t.line, t.col)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            raise self.fail(f"expected {text!r}")
        return self.next()

    def at_ident(self) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text not in KEYWORDS

    def program(self) -> list[Stmt]:
        stmts = []
        while self.peek().kind != "end":
            stmts.append(self.statement())
        return stmts

    def statement(self) -> Stmt:
        t = self.peek()
        if t.text == "while":
            self.next()
            self.expect("(")
            cond = self.condition()
            self.expect(")")
            body = self.block()
            return While(cond, body)
        if t.text == "if":
            self.next()
            self.expect("(")
            cond = self.condition()
            self.expect(")")
            then_body = self.block()
            else_body = []
            if self.peek().text == "else":
                self.next()
                else_body = self.block()
            return If(cond, then_body, else_body)
        if t.text == "require_nsb":
            self.next()
            self.expect("(")
            name = self.ident()
            self.expect(",")
            bits_tok = self.peek()
            if bits_tok.kind != "number" or not bits_tok.text.isdigit():
                raise self.fail("expected an integer bit count")
            self.next()
            self.expect(")")
            self.expect(";")
            return Require(name, int(bits_tok.text))
        if self.at_ident():
            name = self.ident()
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return Assign(name, expr)
        raise self.fail("expected a statement")

    def ident(self) -> str:
        t = self.peek()
        if not self.at_ident():
            raise self.fail("expected a variable name")
        self.next()
        return t.text

    def block(self) -> list[Stmt]:
        self.expect("{")
        stmts = []
        while self.peek().text != "}":
            if self.peek().kind == "end":
                raise self.fail("expected '}'")
            stmts.append(self.statement())
        self.expect("}")
        return stmts

    def condition(self) -> Compare:
        left = self.expr()
        t = self.peek()
        if t.kind != "cmp":
            raise self.fail("expected a comparison operator")
        self.next()
        right = self.expr()
        return Compare(t.text, left, right)

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek().text == "-":
            self.next()
            inner = self.factor()
            if isinstance(inner, Num) and not inner.text.startswith("-"):
                inner.text = "-" + inner.text
                return inner
            return Neg(inner)
        return self.atom()

    def atom(self):
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Num(t.text)
        if t.text == "sqrt":
            self.next()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Sqrt(arg)
        if t.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if self.at_ident():
            self.next()
            return Var(t.text)
        raise self.fail("expected a value")


def parse_program(src: str, inputs=()) -> Program:
    """Parse and label source text; raises ParseError on malformed input.

    Variable names listed in inputs are treated as externally bound, so
    reading them before any assignment is not an error.
    """
    stmts = _Parser(tokenize(src)).program()
    prog = Program(stmts, source=src)
    label_program(prog)
    from .flow import check_defined_before_use
    check_defined_before_use(prog, inputs)
    return prog
