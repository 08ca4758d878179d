"""Concrete syntax for command sequences.

Grammar::

    program := command*
    command := ("add_extrude" "(" face "," face "," op ")"
               | "add_revolve" "(" face "," op ")") ";"
    face    := "f" integer
    op      := "newbody" | "intersection" | "union" | "subtraction"

Whitespace and newlines are insignificant; ``#`` starts a line comment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import BOOL_OPS
from .errors import DslSemanticError, DslSyntaxError


@dataclass(frozen=True)
class AddExtrude:
    f_start: int
    f_end: int
    op: str

    def render(self):
        return f"add_extrude(f{self.f_start}, f{self.f_end}, {self.op});"


@dataclass(frozen=True)
class AddRevolve:
    face: int
    op: str

    def render(self):
        return f"add_revolve(f{self.face}, {self.op});"


@dataclass(frozen=True)
class CommandAst:
    commands: tuple

    def __iter__(self):
        return iter(self.commands)

    def __len__(self):
        return len(self.commands)


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, msg):
        raise DslSyntaxError(msg, self.line, self.col)

    def _advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_ws(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif c == "#":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            else:
                return

    def next_token(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            return ("eof", None, self.line, self.col)
        c = self.text[self.pos]
        line, col = self.line, self.col
        if c in "(),;":
            self._advance()
            return (c, c, line, col)
        if c.isalpha() or c == "_":
            start = self.pos
            while self.pos < len(self.text) and (
                    self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                self._advance()
            return ("ident", self.text[start:self.pos], line, col)
        self.error(f"unexpected character {c!r}")


class _Parser:
    def __init__(self, text):
        self.lex = _Lexer(text)
        self.tok = self.lex.next_token()

    def error(self, msg):
        raise DslSyntaxError(msg, self.tok[2], self.tok[3])

    def advance(self):
        self.tok = self.lex.next_token()

    def expect(self, kind, what=None):
        if self.tok[0] != kind:
            self.error(f"expected {what or kind!r}, found {self.tok[1]!r}")
        val = self.tok[1]
        self.advance()
        return val

    def face(self):
        if self.tok[0] != "ident" or not self.tok[1].startswith("f"):
            self.error(f"expected face id like 'f3', found {self.tok[1]!r}")
        digits = self.tok[1][1:]
        if not digits.isdigit():
            self.error(f"malformed face id {self.tok[1]!r}")
        self.advance()
        return int(digits)

    def bool_op(self):
        line, col = self.tok[2], self.tok[3]
        val = self.expect("ident", "boolean op")
        if val not in BOOL_OPS:
            raise DslSyntaxError(f"unknown boolean op {val!r}", line, col)
        return val

    def command(self):
        name = self.tok[1]
        line, col = self.tok[2], self.tok[3]
        self.expect("ident", "command name")
        if name == "add_extrude":
            self.expect("(")
            fs = self.face()
            self.expect(",")
            fe = self.face()
            self.expect(",")
            op = self.bool_op()
            self.expect(")")
            self.expect(";")
            if fs == fe:
                raise DslSemanticError(
                    f"{line}:{col}: add_extrude start and end faces must differ (f{fs})")
            return AddExtrude(fs, fe, op)
        if name == "add_revolve":
            self.expect("(")
            f = self.face()
            self.expect(",")
            op = self.bool_op()
            self.expect(")")
            self.expect(";")
            return AddRevolve(f, op)
        raise DslSyntaxError(f"unknown command {name!r}", line, col)

    def program(self):
        cmds = []
        while self.tok[0] != "eof":
            cmds.append(self.command())
        return CommandAst(tuple(cmds))


def parse(text):
    """Parse DSL text into a command AST; raises on syntax/semantic errors."""
    return _Parser(text).program()


def print_ast(ast):
    """Canonical form: one command per line, trailing semicolons."""
    return "\n".join(cmd.render() for cmd in ast.commands)


def format_text(text):
    """Canonicalize DSL text (parse then print)."""
    return print_ast(parse(text))
