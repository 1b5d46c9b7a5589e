"""Parser for the model description language.

Grammar (informal EBNF):

    document   = (system | refinement | property | proof)+
    system     = "system" NAME (var | invariant | event)+ "end"
    var        = "var" NAME ":" INT ".." INT
    invariant  = "invariant" predicate
    event      = "event" NAME "when" predicate "then" updates "end"
    refinement = "refinement" NAME "refines" NAME (var | gluing | cevent)+ "end"
    gluing     = "gluing" predicate
    cevent     = "event" NAME "refines" (NAME | "skip")
                 "when" predicate "then" updates "end"
    property   = "property" NAME
                 ("ensures" "helpful" "{" NAME ("," NAME)* "}" | "leadsto" | "unless")
                 "from" predicate "to" predicate
    proof      = "proof" NAME "goal" NAME step+ "end"
    step       = "step" NAME rule
    rule       = "brl" (NAME | conclusion)
               | ("tra" | "psp" | "can") NAME NAME [conclusion]
               | "dsj" NAME+ [conclusion]
               | "thlto" NAME conclusion
    conclusion = "from" predicate "to" predicate

    updates    = update (";" update)*
    update     = NAME ":=" expr
               | NAME "::" "{" expr ("," expr)* "}"
               | "any" NAME ":" INT ".." INT "where" predicate
                 "then" updates "end"

    predicate  = implication over "or" / "and" / "not" / comparisons
    comparison = expr ("=" | "/=" | "!=" | "<" | "<=" | ">" | ">=") expr
    expr       = integer arithmetic with + - * and unary minus

Line comments start with //. Updates within one event act simultaneously
(all right-hand sides read the pre-state); an "any" block must be the only
update of its event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
KEYWORDS = {
    "system", "refinement", "property", "proof", "var", "invariant", "event",
    "when", "then", "end", "refines", "gluing", "ensures", "helpful",
    "leadsto", "unless", "from", "to", "goal", "step", "any", "where",
    "and", "or", "not", "true", "false", "skip",
    "brl", "tra", "dsj", "psp", "can", "thlto",
}

SYMBOLS = (
    "..", ":=", "::", "=>", "<=", ">=", "/=", "!=",
    "(", ")", "{", "}", ",", ":", ";", "=", "<", ">", "+", "-", "*",
)


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    span: Span
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # NAME | INT | symbol text | keyword text | EOF
    text: str
    span: Span


class ParseError(Exception):
    def __init__(self, span: Span, message: str):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


def _lex(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    problems: list[Diagnostic] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = Span(line, col)
        matched = None
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                matched = sym
                break
        if matched:
            tokens.append(Token(matched, matched, span))
            i += len(matched)
            col += len(matched)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", text[i:j], span))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in KEYWORDS else "NAME"
            tokens.append(Token(kind, word, span))
            col += j - i
            i = j
            continue
        problems.append(Diagnostic("error", span, f"unexpected character {ch!r}"))
        i += 1
        col += 1
    tokens.append(Token("EOF", "", Span(line, col)))
    return tokens, problems


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class EInt(Expr):
    value: int


@dataclass(frozen=True)
class EVar(Expr):
    name: str


@dataclass(frozen=True)
class ENeg(Expr):
    inner: Expr


@dataclass(frozen=True)
class EBin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pred:
    pass


@dataclass(frozen=True)
class PBool(Pred):
    value: bool


@dataclass(frozen=True)
class PCmp(Pred):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class PNot(Pred):
    inner: Pred


@dataclass(frozen=True)
class PAnd(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class POr(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class PImp(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Update:
    pass


@dataclass(frozen=True)
class UAssign(Update):
    var: str
    value: Expr


@dataclass(frozen=True)
class UChoose(Update):
    var: str
    options: tuple[Expr, ...]


@dataclass(frozen=True)
class UAny(Update):
    var: str
    lo: int
    hi: int
    where: Pred
    updates: tuple[Update, ...]


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    span: Span


@dataclass(frozen=True)
class EventDecl:
    name: str
    guard: Pred
    updates: tuple[Update, ...]
    span: Span
    refines: str | None = None  # concrete events: abstract name or "skip"


@dataclass(frozen=True)
class SystemDecl:
    name: str
    variables: tuple[VarDecl, ...]
    invariants: tuple[Pred, ...]
    events: tuple[EventDecl, ...]
    span: Span


@dataclass(frozen=True)
class RefinementDecl:
    name: str
    refined: str
    variables: tuple[VarDecl, ...]
    gluings: tuple[Pred, ...]
    events: tuple[EventDecl, ...]
    span: Span


@dataclass(frozen=True)
class PropertyDecl:
    name: str
    kind: str  # ensures | leadsto | unless
    helpful: tuple[str, ...]
    source: str  # owning system or refinement, filled at parse time
    frm: Pred
    to: Pred
    span: Span


@dataclass(frozen=True)
class StepDecl:
    name: str
    rule: str
    refs: tuple[str, ...]
    frm: Pred | None
    to: Pred | None
    span: Span


@dataclass(frozen=True)
class ProofDecl:
    name: str
    goal: str
    steps: tuple[StepDecl, ...]
    span: Span


@dataclass(frozen=True)
class ModelDocument:
    systems: tuple[SystemDecl, ...]
    refinements: tuple[RefinementDecl, ...]
    properties: tuple[PropertyDecl, ...]
    proofs: tuple[ProofDecl, ...]


@dataclass
class ParseResult:
    document: ModelDocument | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.document is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(tok.span, f"expected {kind!r}, found {tok.text or 'end of file'!r}")
        return self.advance()

    def name(self) -> str:
        return self.expect("NAME").text

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        return sign * int(self.expect("INT").text)

    # -- predicates and expressions --

    def predicate(self) -> Pred:
        left = self.disjunction()
        if self.at("=>"):
            self.advance()
            return PImp(left, self.predicate())
        return left

    def disjunction(self) -> Pred:
        left = self.conjunction()
        while self.at("or"):
            self.advance()
            left = POr(left, self.conjunction())
        return left

    def conjunction(self) -> Pred:
        left = self.negation()
        while self.at("and"):
            self.advance()
            left = PAnd(left, self.negation())
        return left

    def negation(self) -> Pred:
        if self.at("not"):
            self.advance()
            return PNot(self.negation())
        return self.atom_pred()

    def atom_pred(self) -> Pred:
        if self.at("true"):
            self.advance()
            return PBool(True)
        if self.at("false"):
            self.advance()
            return PBool(False)
        if self.at("("):
            # could be a parenthesized predicate or the start of an
            # arithmetic comparison; try the predicate reading first
            saved = self.pos
            try:
                self.advance()
                inner = self.predicate()
                self.expect(")")
                if self.at("=", "/=", "!=", "<", "<=", ">", ">=", "+", "-", "*"):
                    raise ParseError(self.peek().span, "arithmetic context")
                return inner
            except ParseError:
                self.pos = saved
        return self.comparison()

    def comparison(self) -> Pred:
        left = self.expr()
        tok = self.peek()
        if tok.kind in ("=", "/=", "!=", "<", "<=", ">", ">="):
            self.advance()
            right = self.expr()
            op = "/=" if tok.kind == "!=" else tok.kind
            return PCmp(op, left, right)
        raise ParseError(tok.span, "expected a comparison operator")

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+", "-"):
            op = self.advance().kind
            left = EBin(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.at("*"):
            self.advance()
            left = EBin("*", left, self.factor())
        return left

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return EInt(int(tok.text))
        if tok.kind == "NAME":
            self.advance()
            return EVar(tok.text)
        if tok.kind == "-":
            self.advance()
            return ENeg(self.factor())
        if tok.kind == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(tok.span, f"expected an expression, found {tok.text or 'end of file'!r}")

    # -- updates --

    def updates(self) -> tuple[Update, ...]:
        out = [self.update()]
        while self.at(";"):
            self.advance()
            if self.at("end"):
                break
            out.append(self.update())
        return tuple(out)

    def update(self) -> Update:
        if self.at("any"):
            self.advance()
            var = self.name()
            self.expect(":")
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            self.expect("where")
            where = self.predicate()
            self.expect("then")
            inner = self.updates()
            self.expect("end")
            return UAny(var, lo, hi, where, inner)
        var = self.name()
        if self.at("::"):
            self.advance()
            self.expect("{")
            options = [self.expr()]
            while self.at(","):
                self.advance()
                options.append(self.expr())
            self.expect("}")
            return UChoose(var, tuple(options))
        self.expect(":=")
        return UAssign(var, self.expr())

    # -- declarations --

    def var_decl(self) -> VarDecl:
        span = self.expect("var").span
        name = self.name()
        self.expect(":")
        lo = self.integer()
        self.expect("..")
        hi = self.integer()
        return VarDecl(name, lo, hi, span)

    def event_decl(self, concrete: bool) -> EventDecl:
        span = self.expect("event").span
        name = self.name()
        refines = None
        if concrete:
            self.expect("refines")
            if self.at("skip"):
                self.advance()
                refines = "skip"
            else:
                refines = self.name()
        self.expect("when")
        guard = self.predicate()
        self.expect("then")
        updates = self.updates()
        self.expect("end")
        return EventDecl(name, guard, updates, span, refines)

    def system_decl(self) -> SystemDecl:
        span = self.expect("system").span
        name = self.name()
        variables: list[VarDecl] = []
        invariants: list[Pred] = []
        events: list[EventDecl] = []
        while not self.at("end"):
            if self.at("var"):
                variables.append(self.var_decl())
            elif self.at("invariant"):
                self.advance()
                invariants.append(self.predicate())
            elif self.at("event"):
                events.append(self.event_decl(concrete=False))
            else:
                tok = self.peek()
                raise ParseError(
                    tok.span, f"expected var, invariant, event or end, found {tok.text!r}"
                )
        self.expect("end")
        return SystemDecl(name, tuple(variables), tuple(invariants), tuple(events), span)

    def refinement_decl(self) -> RefinementDecl:
        span = self.expect("refinement").span
        name = self.name()
        self.expect("refines")
        refined = self.name()
        variables: list[VarDecl] = []
        gluings: list[Pred] = []
        events: list[EventDecl] = []
        while not self.at("end"):
            if self.at("var"):
                variables.append(self.var_decl())
            elif self.at("gluing"):
                self.advance()
                gluings.append(self.predicate())
            elif self.at("event"):
                events.append(self.event_decl(concrete=True))
            else:
                tok = self.peek()
                raise ParseError(
                    tok.span, f"expected var, gluing, event or end, found {tok.text!r}"
                )
        self.expect("end")
        return RefinementDecl(name, refined, tuple(variables), tuple(gluings), tuple(events), span)

    def property_decl(self, source: str) -> PropertyDecl:
        span = self.expect("property").span
        name = self.name()
        helpful: tuple[str, ...] = ()
        if self.at("ensures"):
            self.advance()
            self.expect("helpful")
            self.expect("{")
            names = [self.name()]
            while self.at(","):
                self.advance()
                names.append(self.name())
            self.expect("}")
            helpful = tuple(names)
            kind = "ensures"
        elif self.at("leadsto"):
            self.advance()
            kind = "leadsto"
        elif self.at("unless"):
            self.advance()
            kind = "unless"
        else:
            raise ParseError(self.peek().span, "expected ensures, leadsto or unless")
        self.expect("from")
        frm = self.predicate()
        self.expect("to")
        to = self.predicate()
        return PropertyDecl(name, kind, helpful, source, frm, to, span)

    def step_decl(self) -> StepDecl:
        span = self.expect("step").span
        name = self.name()
        tok = self.peek()
        if tok.kind not in ("brl", "tra", "dsj", "psp", "can", "thlto"):
            raise ParseError(tok.span, f"expected a rule name, found {tok.text!r}")
        rule = self.advance().kind
        refs: list[str] = []
        while self.at("NAME"):
            refs.append(self.name())
        frm = to = None
        if self.at("from"):
            self.advance()
            frm = self.predicate()
            self.expect("to")
            to = self.predicate()
        return StepDecl(name, rule, tuple(refs), frm, to, span)

    def proof_decl(self) -> ProofDecl:
        span = self.expect("proof").span
        name = self.name()
        self.expect("goal")
        goal = self.name()
        steps: list[StepDecl] = []
        while self.at("step"):
            steps.append(self.step_decl())
        self.expect("end")
        if not steps:
            raise ParseError(span, f"proof {name!r} has no steps")
        return ProofDecl(name, goal, tuple(steps), span)


_TOP_LEVEL = ("system", "refinement", "property", "proof")


def parse_document(text: str) -> ParseResult:
    """Parse a model document; collects diagnostics and recovers at the next
    top-level declaration after an error."""
    tokens, diagnostics = _lex(text)
    parser = _Parser(tokens)
    systems: list[SystemDecl] = []
    refinements: list[RefinementDecl] = []
    properties: list[PropertyDecl] = []
    proofs: list[ProofDecl] = []
    current_source = ""
    while not parser.at("EOF"):
        try:
            if parser.at("system"):
                decl = parser.system_decl()
                systems.append(decl)
                current_source = decl.name
            elif parser.at("refinement"):
                rdecl = parser.refinement_decl()
                refinements.append(rdecl)
                current_source = rdecl.name
            elif parser.at("property"):
                if not current_source:
                    raise ParseError(parser.peek().span, "property appears before any system")
                properties.append(parser.property_decl(current_source))
            elif parser.at("proof"):
                proofs.append(parser.proof_decl())
            else:
                tok = parser.peek()
                raise ParseError(
                    tok.span,
                    f"expected system, refinement, property or proof, found {tok.text!r}",
                )
        except ParseError as err:
            diagnostics.append(Diagnostic("error", err.span, err.message))
            parser.advance()
            while not parser.at("EOF", *_TOP_LEVEL):
                parser.advance()
    if not systems and not any(d.severity == "error" for d in diagnostics):
        diagnostics.append(Diagnostic("error", Span(1, 1), "no system declared"))
    if any(d.severity == "error" for d in diagnostics):
        return ParseResult(None, diagnostics)
    document = ModelDocument(
        tuple(systems), tuple(refinements), tuple(properties), tuple(proofs)
    )
    return ParseResult(document, diagnostics)


# ---------------------------------------------------------------------------
# Printer (used for round-trip stability tests and report echoes)
# ---------------------------------------------------------------------------


def render_expr(e: Expr) -> str:
    if isinstance(e, EInt):
        return str(e.value)
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, ENeg):
        return f"-{render_expr(e.inner)}"
    if isinstance(e, EBin):
        return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"
    raise TypeError(e)


def render_pred(p: Pred) -> str:
    if isinstance(p, PBool):
        return "true" if p.value else "false"
    if isinstance(p, PCmp):
        return f"{render_expr(p.left)} {p.op} {render_expr(p.right)}"
    if isinstance(p, PNot):
        return f"not ({render_pred(p.inner)})"
    if isinstance(p, PAnd):
        return f"({render_pred(p.left)} and {render_pred(p.right)})"
    if isinstance(p, POr):
        return f"({render_pred(p.left)} or {render_pred(p.right)})"
    if isinstance(p, PImp):
        return f"({render_pred(p.left)} => {render_pred(p.right)})"
    raise TypeError(p)


def _render_update(u: Update) -> str:
    if isinstance(u, UAssign):
        return f"{u.var} := {render_expr(u.value)}"
    if isinstance(u, UChoose):
        return f"{u.var} :: {{{', '.join(render_expr(o) for o in u.options)}}}"
    if isinstance(u, UAny):
        inner = " ; ".join(_render_update(x) for x in u.updates)
        return (
            f"any {u.var} : {u.lo} .. {u.hi} where {render_pred(u.where)} "
            f"then {inner} end"
        )
    raise TypeError(u)


def _render_event(e: EventDecl) -> list[str]:
    refines = ""
    if e.refines is not None:
        refines = f" refines {e.refines}"
    body = " ; ".join(_render_update(u) for u in e.updates)
    return [f"  event {e.name}{refines} when {render_pred(e.guard)} then {body} end"]


def render_document(doc: ModelDocument) -> str:
    """Render a document back to source; parse(render(parse(x))) is stable."""
    lines: list[str] = []
    by_source: dict[str, list[PropertyDecl]] = {}
    for prop in doc.properties:
        by_source.setdefault(prop.source, []).append(prop)

    def emit_properties(source: str) -> None:
        for prop in by_source.get(source, []):
            if prop.kind == "ensures":
                kind = f"ensures helpful {{{', '.join(prop.helpful)}}}"
            else:
                kind = prop.kind
            lines.append(
                f"property {prop.name} {kind} from {render_pred(prop.frm)} "
                f"to {render_pred(prop.to)}"
            )

    for sysd in doc.systems:
        lines.append(f"system {sysd.name}")
        for v in sysd.variables:
            lines.append(f"  var {v.name} : {v.lo} .. {v.hi}")
        for inv in sysd.invariants:
            lines.append(f"  invariant {render_pred(inv)}")
        for e in sysd.events:
            lines.extend(_render_event(e))
        lines.append("end")
        emit_properties(sysd.name)
    for refd in doc.refinements:
        lines.append(f"refinement {refd.name} refines {refd.refined}")
        for v in refd.variables:
            lines.append(f"  var {v.name} : {v.lo} .. {v.hi}")
        for g in refd.gluings:
            lines.append(f"  gluing {render_pred(g)}")
        for e in refd.events:
            lines.extend(_render_event(e))
        lines.append("end")
        emit_properties(refd.name)
    for proof in doc.proofs:
        lines.append(f"proof {proof.name} goal {proof.goal}")
        for s in proof.steps:
            concl = ""
            if s.frm is not None and s.to is not None:
                concl = f" from {render_pred(s.frm)} to {render_pred(s.to)}"
            refs = (" " + " ".join(s.refs)) if s.refs else ""
            lines.append(f"  step {s.name} {s.rule}{refs}{concl}")
        lines.append("end")
    return "\n".join(lines) + "\n"
