"""S-expression reader that keeps source positions."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan | None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class Symbol(str):
    """A token that remembers where it came from."""

    span: SourceSpan

    def __new__(cls, text: str, span: SourceSpan):
        s = super().__new__(cls, text)
        s.span = span
        return s


class SList(list):
    span: SourceSpan

    def __init__(self, items=(), span: SourceSpan | None = None):
        super().__init__(items)
        self.span = span


def read_all(text: str, file: str = "<string>") -> list:
    """Parse every top-level form in `text`.

    Symbols are lower-cased, as PDDL is case-insensitive.  Comments start
    with ``;`` and run to the end of the line.
    """
    stack: list[SList] = []
    top: list = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "(":
            lst = SList(span=SourceSpan(file, line, col, line, col))
            stack.append(lst)
            i += 1
            col += 1
            continue
        if c == ")":
            if not stack:
                raise ParseError("unbalanced ')'", SourceSpan(file, line, col, line, col))
            lst = stack.pop()
            s = lst.span
            lst.span = SourceSpan(file, s.line, s.column, line, col)
            (stack[-1] if stack else top).append(lst)
            i += 1
            col += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "();":
            j += 1
        tok = Symbol(text[i:j].lower(), SourceSpan(file, line, col, line, col + j - i))
        (stack[-1] if stack else top).append(tok)
        col += j - i
        i = j
    if stack:
        raise ParseError("unclosed '('", stack[-1].span)
    return top


def span_of(node) -> SourceSpan | None:
    return getattr(node, "span", None)
