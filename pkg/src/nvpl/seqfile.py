"""Reader and writer for ``.seq`` pulse-sequence files.

A file holds any number of blocks::

    # comments run to the end of the line
    sequence seq1 {
      pulse minus pi/2 phase 0
      cpulse plus detuning 250kHz rabi 500kHz cycles 2
      pulse minus pi/2 phase 0
    }

Statements::

    pulse  SUB ANGLE phase NUM
    cpulse SUB detuning FREQ rabi FREQ (cycles NUM | fraction NUM) [phase NUM]
    wait   TIME [detuning SUB FREQ]

with ``SUB`` one of ``plus``/``minus``, ``ANGLE`` one of ``pi/2``, ``pi`` or
``NUM rad``, frequencies in Hz/kHz/MHz and times in ns/us/ms. Phases are in
radians.

The parser is hand-written recursive descent with one token of lookahead.
Values are stored in SI units. Numbers are converted through ``Decimal`` so
that a value written in any unit and read back is bit-identical.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from .model import DriveParams, t_two_pi
from .quantum import Subspace, ket
from .sequences import (
    DEFAULT_RABI,
    WAIT_CAP,
    CPulse,
    Mode,
    Pulse,
    Schedule,
    Wait,
    build_nested_spin_echo,
    build_sequence1,
    build_sequence2,
    build_sequence3,
    build_sequence4,
)

FREQ_UNITS = {"Hz": 0, "kHz": 3, "MHz": 6}
TIME_UNITS = {"ns": -9, "us": -6, "ms": -3}
SUBSPACES = {"plus": Subspace.PLUS, "minus": Subspace.MINUS}
STATEMENT_KEYWORDS = ("pulse", "cpulse", "wait")


# ------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class PulseStmt:
    subspace: str
    angle: float
    phase: float = 0.0
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CPulseStmt:
    subspace: str
    detuning: float
    rabi: float
    cycles: float | None = None
    fraction: float | None = None
    phase: float = 0.0
    span: Span | None = field(default=None, compare=False)

    @property
    def periods(self) -> float:
        return self.cycles if self.cycles is not None else self.fraction


@dataclass(frozen=True)
class WaitStmt:
    duration: float
    detuning_subspace: str | None = None
    detuning: float | None = None
    span: Span | None = field(default=None, compare=False)


Statement = PulseStmt | CPulseStmt | WaitStmt


@dataclass(frozen=True)
class SequenceDoc:
    name: str
    statements: tuple[Statement, ...] = ()
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: Span
    message: str
    hint: str = ""

    def __str__(self) -> str:
        text = f"{self.span}: {self.severity}: {self.message}"
        return f"{text} ({self.hint})" if self.hint else text


@dataclass
class ParseResult:
    docs: list[SequenceDoc]
    diagnostics: list[Diagnostic]

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def doc(self, name: str) -> SequenceDoc:
        for d in self.docs:
            if d.name == name:
                return d
        raise KeyError(name)


class SeqFileError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# ----------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "num", "angle", "{", "}", "eof", "bad"
    text: str
    span: Span


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<angle>pi/2(?![A-Za-z0-9_]))
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<brace>[{}])
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        value = m.group()
        span = Span(line, m.start() - line_start + 1, len(value))
        if kind == "brace":
            tokens.append(Token(value, value, span))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, span))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rindex("\n") + 1
    tokens.append(Token("eof", "", Span(line, len(text) - line_start + 1, 1)))
    return tokens


# ---------------------------------------------------------------- parser


class _Abort(Exception):
    pass


def _scaled(text: str, exponent: int) -> float:
    return float(Decimal(text).scaleb(exponent))


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        for tok in self.tokens:
            if tok.kind == "bad":
                self.diagnostics.append(
                    Diagnostic("error", tok.span, f"unexpected character {tok.text!r}")
                )
        self.tokens = [t for t in self.tokens if t.kind != "bad"]

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: Token, message: str, hint: str = "") -> _Abort:
        self.diagnostics.append(Diagnostic("error", tok.span, message, hint))
        return _Abort()

    def expect_word(self, word: str) -> Token:
        tok = self.tok
        if tok.kind == "ident" and tok.text == word:
            return self.advance()
        raise self.error(tok, f"expected '{word}', found {_describe(tok)}")

    def number(self, what: str) -> Token:
        tok = self.tok
        if tok.kind != "num":
            raise self.error(tok, f"expected {what}, found {_describe(tok)}")
        return self.advance()

    def quantity(self, units: dict[str, int], what: str) -> float:
        num = self.number(what)
        unit = self.tok
        if unit.kind == "ident" and unit.text in units:
            self.advance()
            return _scaled(num.text, units[unit.text])
        raise self.error(
            num,
            f"missing {what} unit",
            "append one of " + ", ".join(units),
        )

    def subspace(self) -> str:
        tok = self.tok
        if tok.kind == "ident" and tok.text in SUBSPACES:
            return self.advance().text
        raise self.error(tok, f"expected subspace 'plus' or 'minus', found {_describe(tok)}")

    # grammar -------------------------------------------------------------

    def parse_file(self) -> list[SequenceDoc]:
        docs = []
        seen: dict[str, Span] = {}
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind == "ident" and tok.text == "sequence":
                doc = self.parse_sequence()
                if doc is None:
                    continue
                if doc.name in seen:
                    self.diagnostics.append(
                        Diagnostic(
                            "error",
                            doc.span,
                            f"duplicate sequence name '{doc.name}'",
                            f"first defined at {seen[doc.name]}",
                        )
                    )
                else:
                    seen[doc.name] = doc.span
                    docs.append(doc)
            else:
                self.error(tok, f"expected 'sequence', found {_describe(tok)}")
                self.advance()
                while self.tok.kind != "eof" and not (
                    self.tok.kind == "ident" and self.tok.text == "sequence"
                ):
                    self.advance()
        return docs

    def parse_sequence(self) -> SequenceDoc | None:
        self.advance()
        name_tok = self.tok
        if name_tok.kind != "ident":
            self.error(name_tok, f"expected sequence name, found {_describe(name_tok)}")
            self._skip_block()
            return None
        self.advance()
        if self.tok.kind != "{":
            self.error(self.tok, f"expected '{{', found {_describe(self.tok)}")
            self._skip_block()
            return None
        self.advance()
        statements = []
        errors_before = len(self.diagnostics)
        while self.tok.kind not in ("}", "eof") and not (
            self.tok.kind == "ident" and self.tok.text == "sequence"
        ):
            start = self.pos
            try:
                statements.append(self.parse_statement())
            except _Abort:
                self._recover(start)
        if self.tok.kind == "}":
            self.advance()
        else:
            self.error(self.tok, f"unterminated sequence '{name_tok.text}'", "add a closing '}'")
        doc = SequenceDoc(name_tok.text, tuple(statements), name_tok.span)
        if not statements and len(self.diagnostics) == errors_before:
            self.diagnostics.append(
                Diagnostic("warning", name_tok.span, f"sequence '{doc.name}' has no statements")
            )
        return doc

    def parse_statement(self) -> Statement:
        tok = self.tok
        if tok.kind == "ident" and tok.text == "pulse":
            return self.parse_pulse()
        if tok.kind == "ident" and tok.text == "cpulse":
            return self.parse_cpulse()
        if tok.kind == "ident" and tok.text == "wait":
            return self.parse_wait()
        raise self.error(
            tok, f"unknown keyword {_describe(tok)}", "statements start with pulse, cpulse or wait"
        )

    def parse_pulse(self) -> PulseStmt:
        kw = self.advance()
        sub = self.subspace()
        angle = self.parse_angle()
        self.expect_word("phase")
        phase = float(Decimal(self.number("phase (rad)").text))
        return PulseStmt(sub, angle, phase, kw.span)

    def parse_angle(self) -> float:
        tok = self.tok
        if tok.kind == "angle":
            self.advance()
            return math.pi / 2
        if tok.kind == "ident" and tok.text == "pi":
            self.advance()
            return math.pi
        if tok.kind == "num":
            self.advance()
            if self.tok.kind == "ident" and self.tok.text == "rad":
                self.advance()
                return float(Decimal(tok.text))
            raise self.error(tok, "missing angle unit", "write pi/2, pi or a number followed by 'rad'")
        raise self.error(tok, f"expected pulse angle, found {_describe(tok)}")

    def parse_cpulse(self) -> CPulseStmt:
        kw = self.advance()
        sub = self.subspace()
        self.expect_word("detuning")
        detuning = self.quantity(FREQ_UNITS, "frequency")
        self.expect_word("rabi")
        rabi = self.quantity(FREQ_UNITS, "frequency")
        tok = self.tok
        cycles = fraction = None
        if tok.kind == "ident" and tok.text == "cycles":
            self.advance()
            cycles = float(Decimal(self.number("cycle count").text))
        elif tok.kind == "ident" and tok.text == "fraction":
            self.advance()
            fraction = float(Decimal(self.number("fraction").text))
        else:
            raise self.error(tok, f"expected 'cycles' or 'fraction', found {_describe(tok)}")
        phase = 0.0
        if self.tok.kind == "ident" and self.tok.text == "phase":
            self.advance()
            phase = float(Decimal(self.number("phase (rad)").text))
        return CPulseStmt(sub, detuning, rabi, cycles, fraction, phase, kw.span)

    def parse_wait(self) -> WaitStmt:
        kw = self.advance()
        duration = self.quantity(TIME_UNITS, "time")
        if self.tok.kind == "ident" and self.tok.text == "detuning":
            self.advance()
            sub = self.subspace()
            detuning = self.quantity(FREQ_UNITS, "frequency")
            return WaitStmt(duration, sub, detuning, kw.span)
        return WaitStmt(duration, span=kw.span)

    # recovery ------------------------------------------------------------

    def _recover(self, start: int) -> None:
        # resume at the next statement keyword, or at whatever begins a later line
        line = self.tokens[start].span.line
        if self.pos == start:
            self.advance()
        while self.tok.kind not in ("}", "eof"):
            tok = self.tok
            if tok.kind == "ident" and tok.text in STATEMENT_KEYWORDS + ("sequence",):
                break
            prev = self.tokens[self.pos - 1]
            if tok.span.line > line and prev.span.line < tok.span.line:
                break
            self.advance()

    def _skip_block(self) -> None:
        while self.tok.kind not in ("}", "eof"):
            self.advance()
        if self.tok.kind == "}":
            self.advance()


def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else f"'{tok.text}'"


def parse(text: str) -> ParseResult:
    """Parse every ``sequence`` block in ``text``; errors are collected, not raised."""
    parser = _Parser(text)
    docs = parser.parse_file()
    diagnostics = sorted(parser.diagnostics, key=lambda d: (d.span.line, d.span.column))
    return ParseResult(docs, diagnostics)


# ------------------------------------------------------------- serializer


def format_number(value: float) -> str:
    """Shortest decimal text that reads back as exactly ``value``."""
    if value == 0:
        return "0"
    return format(Decimal(repr(float(value))).normalize(), "f")


def format_quantity(value: float, units: dict[str, int]) -> str:
    """Render with the largest unit that keeps the mantissa at or above 1."""
    ordered = sorted(units.items(), key=lambda kv: kv[1])
    if value == 0:
        return "0" + ordered[0][0]
    exact = Decimal(repr(float(value)))
    name, exponent = ordered[0]
    for unit, exp in ordered:
        if abs(exact).scaleb(-exp) >= 1:
            name, exponent = unit, exp
    return format(exact.scaleb(-exponent).normalize(), "f") + name


def _format_angle(angle: float) -> str:
    if angle == math.pi / 2:
        return "pi/2"
    if angle == math.pi:
        return "pi"
    return format_number(angle) + "rad"


def serialize_statement(stmt: Statement) -> str:
    if isinstance(stmt, PulseStmt):
        return f"pulse {stmt.subspace} {_format_angle(stmt.angle)} phase {format_number(stmt.phase)}"
    if isinstance(stmt, CPulseStmt):
        parts = [
            f"cpulse {stmt.subspace}",
            f"detuning {format_quantity(stmt.detuning, FREQ_UNITS)}",
            f"rabi {format_quantity(stmt.rabi, FREQ_UNITS)}",
        ]
        if stmt.cycles is not None:
            parts.append(f"cycles {format_number(stmt.cycles)}")
        else:
            parts.append(f"fraction {format_number(stmt.fraction)}")
        if stmt.phase != 0:
            parts.append(f"phase {format_number(stmt.phase)}")
        return " ".join(parts)
    text = f"wait {format_quantity(stmt.duration, TIME_UNITS)}"
    if stmt.detuning_subspace is not None:
        text += f" detuning {stmt.detuning_subspace} {format_quantity(stmt.detuning, FREQ_UNITS)}"
    return text


def serialize(doc: SequenceDoc | list[SequenceDoc]) -> str:
    """Canonical text: one statement per line, two-space indent, blank line between blocks."""
    docs = doc if isinstance(doc, (list, tuple)) else [doc]
    blocks = []
    for d in docs:
        lines = [f"sequence {d.name} {{"]
        lines += ["  " + serialize_statement(s) for s in d.statements]
        lines.append("}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


# -------------------------------------------------------------- lowering


def _frames(doc: SequenceDoc, diagnostics: list[Diagnostic]) -> dict[str, float]:
    frames: dict[str, float] = {}
    for stmt in doc.statements:
        if isinstance(stmt, WaitStmt) and stmt.detuning_subspace is not None:
            prev = frames.setdefault(stmt.detuning_subspace, stmt.detuning)
            if prev != stmt.detuning:
                diagnostics.append(
                    Diagnostic(
                        "error",
                        stmt.span or Span(0, 0),
                        f"conflicting wait detunings on {stmt.detuning_subspace}",
                        "a subspace keeps one rotating frame for the whole sequence",
                    )
                )
    return {"plus": frames.get("plus", 0.0), "minus": frames.get("minus", 0.0)}


def to_schedule(
    doc: SequenceDoc,
    mode: Mode = Mode.HARD,
    initial_state: np.ndarray | None = None,
    pulse_rabi: float | None = None,
) -> Schedule:
    """Lower a parsed sequence to a :class:`~nvpl.sequences.Schedule`.

    Each subspace uses one rotating frame: the detuning named by its
    ``wait ... detuning`` clauses, or resonance if there are none. Waits,
    pulses and idle levels all follow that frame. A ``cpulse`` on a subspace
    that is also addressed by ``pulse`` statements is carried back into
    that frame after it ends. ``pulse`` statements use ``pulse_rabi``,
    defaulting to the first ``cpulse`` Rabi frequency or 500 kHz.
    """
    diagnostics: list[Diagnostic] = []
    frames = _frames(doc, diagnostics)
    pulsed = {s.subspace for s in doc.statements if isinstance(s, PulseStmt)}
    if pulse_rabi is None:
        pulse_rabi = next(
            (s.rabi for s in doc.statements if isinstance(s, CPulseStmt)), DEFAULT_RABI
        )
    other = {"plus": "minus", "minus": "plus"}
    segments = []
    for k, stmt in enumerate(doc.statements):
        span = stmt.span or Span(0, 0)
        label = f"{doc.name}[{k}]"
        if isinstance(stmt, PulseStmt):
            segments.append(
                Pulse(
                    SUBSPACES[stmt.subspace],
                    stmt.angle,
                    stmt.phase,
                    pulse_rabi,
                    frames[stmt.subspace],
                    frames[other[stmt.subspace]],
                    label,
                )
            )
        elif isinstance(stmt, CPulseStmt):
            bad = _check_cpulse(stmt, span)
            if bad:
                diagnostics.append(bad)
                continue
            try:
                drive = DriveParams(SUBSPACES[stmt.subspace], stmt.rabi, stmt.detuning, stmt.phase)
            except ValueError as exc:
                diagnostics.append(Diagnostic("error", span, str(exc)))
                continue
            frame = frames[stmt.subspace] if stmt.subspace in pulsed else None
            segments.append(
                CPulse(drive, stmt.periods * t_two_pi(drive), frame, frames[other[stmt.subspace]], label)
            )
        else:
            if stmt.duration < 0:
                diagnostics.append(Diagnostic("error", span, "wait duration must be non-negative"))
                continue
            if stmt.duration > WAIT_CAP:
                diagnostics.append(
                    Diagnostic(
                        "error",
                        span,
                        f"wait of {format_quantity(stmt.duration, TIME_UNITS)} exceeds the 10us cap",
                        "free precession is capped at 10us near resonance",
                    )
                )
                continue
            segments.append(Wait(stmt.duration, frames["plus"], frames["minus"], label))
    if any(d.severity == "error" for d in diagnostics):
        raise SeqFileError(diagnostics)
    init = ket(0) if initial_state is None else initial_state
    return Schedule(tuple(segments), init, mode, name=doc.name)


def _check_cpulse(stmt: CPulseStmt, span: Span) -> Diagnostic | None:
    if stmt.rabi <= 0:
        return Diagnostic("error", span, "cpulse rabi frequency must be positive")
    if stmt.cycles is not None:
        if stmt.cycles < 1 or stmt.cycles != int(stmt.cycles):
            return Diagnostic(
                "error", span, f"cycles must be a positive integer, got {format_number(stmt.cycles)}"
            )
    elif not 0 < stmt.fraction <= 1:
        return Diagnostic(
            "error",
            span,
            f"fraction must lie in (0, 1], got {format_number(stmt.fraction)}",
            "use 'cycles N' for whole Rabi periods",
        )
    return None


def load(path: str | Path) -> ParseResult:
    return parse(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------- export


def schedule_to_doc(schedule: Schedule, name: str | None = None) -> SequenceDoc:
    """Describe a builder schedule in the file format (labels are not kept)."""
    statements: list[Statement] = []
    for seg in schedule.segments:
        if isinstance(seg, Pulse):
            statements.append(PulseStmt(_sub_name(seg.subspace), seg.angle, seg.phase))
        elif isinstance(seg, CPulse):
            periods = seg.length / t_two_pi(seg.drive)
            whole = round(periods)
            d = seg.drive
            if whole >= 1 and abs(periods - whole) < 1e-9:
                statements.append(CPulseStmt(_sub_name(d.subspace), d.detuning, d.rabi, float(whole), None, d.phase))
            else:
                statements.append(
                    CPulseStmt(_sub_name(d.subspace), d.detuning, d.rabi, None, round(periods, 12), d.phase)
                )
        else:
            if seg.detuning_plus and seg.detuning_minus:
                raise ValueError("the file format holds one wait detuning per statement")
            if seg.detuning_plus:
                statements.append(WaitStmt(seg.length, "plus", seg.detuning_plus))
            elif seg.detuning_minus:
                statements.append(WaitStmt(seg.length, "minus", seg.detuning_minus))
            else:
                statements.append(WaitStmt(seg.length))
    return SequenceDoc(name or schedule.name or "sequence", tuple(statements))


def _sub_name(sub: Subspace) -> str:
    return "plus" if sub is Subspace.PLUS else "minus"


def reference_schedules(delta: float = 250e3, rabi: float = DEFAULT_RABI) -> dict[str, Schedule]:
    """The five builder schedules shipped as example files."""
    return {
        "nested_se": build_nested_spin_echo(delta, 10e-6, 12e-6, rabi),
        "seq1": build_sequence1(delta, rabi, 2),
        "seq2": build_sequence2(delta, rabi, 1, 0.7),
        "seq3": build_sequence3(delta, rabi),
        "seq4": build_sequence4(delta, rabi, 0.5),
    }


def export_builders(directory: str | Path, delta: float = 250e3, rabi: float = DEFAULT_RABI) -> dict[str, Path]:
    """Write one ``.seq`` file per reference schedule; returns name -> path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, schedule in reference_schedules(delta, rabi).items():
        path = directory / f"{name}.seq"
        path.write_text(serialize(schedule_to_doc(schedule, name)), encoding="utf-8")
        paths[name] = path
    return paths
