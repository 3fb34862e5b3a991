"""Text syntax for knowledge bases and queries.

One axiom per statement, terminated by ``.``; ``#`` starts a comment.
Concept names begin with an uppercase letter, role and individual names with
a lowercase letter.  Machine-generated names (prefix ``#``) and the reserved
vocabulary are only accepted in internal mode, used when reading back
certificates the engine produced itself.

    A(a).  r(a,b).  a ~ b.  not r(a,b).
    A [= exists(r, B).
    A == exists(auto[(r)* test(B) s], Top).
    r & s [= t.  t = inv(r).
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    AtLeast,
    Atomic,
    Axiom,
    BOT,
    Bottom,
    Concept,
    ConceptAssert,
    ConceptAtom,
    ConceptEq,
    ConjunctiveQuery,
    EqAssert,
    Exists,
    ExistsAuto,
    GEN_PREFIX,
    Gci,
    Inverse,
    KnowledgeBase,
    NegAssert,
    Nfa,
    Nominal,
    Not,
    And,
    RESERVED_CONCEPTS,
    RESERVED_ROLES,
    RoleAnd,
    RoleAssert,
    RoleAtom,
    RoleDiff,
    RoleEq,
    RoleIncl,
    RoleName,
    RoleOr,
    SelfLoop,
    SimpleRole,
    TOP,
    Term,
    Test,
    at_most,
    forall_auto,
    forall_role,
    make_kb,
    or_,
)
from . import regex as rx


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


CONCEPT_KEYWORDS = {
    "Top",
    "Bot",
    "not",
    "and",
    "or",
    "exists",
    "forall",
    "atleast",
    "atmost",
    "self",
}

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    "]": "RBRACKET",
    ",": "COMMA",
    ".": "DOT",
    "~": "TILDE",
    "&": "AMP",
    "|": "PIPE",
    "\\": "DIFF",
    "+": "PLUS",
    "*": "STAR",
}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, GENIDENT, INT, VAR, or a punct kind
    text: str
    line: int
    col: int


def tokenize(text: str, internal: bool = False) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)

    def error(msg: str) -> ParseError:
        return ParseError(msg, line, col)

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
        if ch == "#":
            j = i + 1
            if internal and j < n and (text[j].isalnum() or text[j] in "_."):
                while j < n and (text[j].isalnum() or text[j] in "_."):
                    j += 1
                while text[j - 1] == ".":  # generated names never end in a dot
                    j -= 1
                tokens.append(Token("GENIDENT", text[i:j], line, col))
                col += j - i
                i = j
                continue
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "[":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(Token("SUBSUMED", "[=", line, col))
                i += 2
                col += 2
            else:
                tokens.append(Token("LBRACKET", "[", line, col))
                i += 1
                col += 1
            continue
        if ch == "=":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(Token("EQEQ", "==", line, col))
                i += 2
                col += 2
            else:
                tokens.append(Token("EQ", "=", line, col))
                i += 1
                col += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, col))
            i += 1
            col += 1
            continue
        if ch == "?":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise error("expected variable name after '?'")
            tokens.append(Token("VAR", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and (text[j].isalpha() or text[j] == "_"):
                raise error(f"malformed number {text[i:j + 1]!r}")
            tokens.append(Token("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch == "-":
            raise error("negative or malformed cardinality")
        raise error(f"unexpected character {ch!r}")
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], internal: bool):
        self.tokens = tokens
        self.pos = 0
        self.internal = internal

    # -- token plumbing ----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        if self.cur.kind != kind:
            raise self.error(f"expected {kind}, found {self.cur.text!r}")
        return self.advance()

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.cur.line, self.cur.col)

    # -- names -------------------------------------------------------------

    def name_token(self) -> Token:
        if self.cur.kind == "GENIDENT":
            return self.advance()
        return self.expect("IDENT")

    def concept_name(self) -> str:
        tok = self.name_token()
        if tok.kind == "GENIDENT":
            return tok.text
        if tok.text in RESERVED_CONCEPTS:
            if not self.internal:
                raise ParseError(
                    f"{tok.text!r} is reserved", tok.line, tok.col
                )
            return tok.text
        if tok.text in CONCEPT_KEYWORDS:
            raise ParseError(f"{tok.text!r} is a keyword", tok.line, tok.col)
        if not tok.text[0].isupper():
            raise ParseError(
                f"concept names start uppercase: {tok.text!r}", tok.line, tok.col
            )
        return tok.text

    def role_name(self) -> str:
        tok = self.name_token()
        if tok.kind == "GENIDENT":
            return tok.text
        if tok.text in RESERVED_ROLES:
            if not self.internal:
                raise ParseError(f"{tok.text!r} is reserved", tok.line, tok.col)
            return tok.text
        if not tok.text[0].islower():
            raise ParseError(
                f"role names start lowercase: {tok.text!r}", tok.line, tok.col
            )
        return tok.text

    def individual(self) -> str:
        tok = self.name_token()
        if tok.kind == "GENIDENT":
            return tok.text
        if not tok.text[0].islower():
            raise ParseError(
                f"individual names start lowercase: {tok.text!r}", tok.line, tok.col
            )
        return tok.text

    # -- simple roles --------------------------------------------------------

    def role_primary(self) -> SimpleRole:
        if self.cur.kind == "LPAREN":
            self.advance()
            role = self.role()
            self.expect("RPAREN")
            return role
        if self.cur.kind == "IDENT" and self.cur.text == "inv":
            self.advance()
            self.expect("LPAREN")
            role = self.role()
            self.expect("RPAREN")
            return Inverse(role)
        return RoleName(self.role_name())

    def role(self) -> SimpleRole:
        out = self.role_primary()
        while self.cur.kind in ("AMP", "PIPE", "DIFF"):
            op = self.advance().kind
            rhs = self.role_primary()
            if op == "AMP":
                out = RoleAnd(out, rhs)
            elif op == "PIPE":
                out = RoleOr(out, rhs)
            else:
                out = RoleDiff(out, rhs)
        return out

    # -- regular expressions -------------------------------------------------

    def regex(self) -> rx.Regex:
        out = self.regex_concat()
        while self.cur.kind == "PLUS":
            self.advance()
            out = rx.Alt(out, self.regex_concat())
        return out

    def regex_concat(self) -> rx.Regex:
        out = self.regex_primary()
        while self._regex_primary_starts():
            out = rx.Cat(out, self.regex_primary())
        return out

    def _regex_primary_starts(self) -> bool:
        if self.cur.kind in ("LPAREN", "GENIDENT"):
            return True
        if self.cur.kind == "IDENT":
            return True
        return False

    def regex_primary(self) -> rx.Regex:
        if self.cur.kind == "LPAREN":
            self.advance()
            inner = self.regex()
            self.expect("RPAREN")
            if self.cur.kind == "STAR":
                self.advance()
                return rx.Star(inner)
            if self.cur.kind == "PLUS":
                # `(RE)+` only when the plus hugs the paren; a spaced `+` is
                # union, which regex() handles after we return.
                prev = self.tokens[self.pos - 1]
                plus = self.cur
                if plus.line == prev.line and plus.col == prev.col + 1:
                    self.advance()
                    return rx.Plus(inner)
            return inner
        if self.cur.kind == "IDENT" and self.cur.text == "test":
            self.advance()
            self.expect("LPAREN")
            concept = self.concept()
            self.expect("RPAREN")
            return rx.TestSym(concept)
        return rx.Sym(self.role())

    # -- concepts --------------------------------------------------------------

    def concept(self) -> Concept:
        tok = self.cur
        if tok.kind == "LBRACE":
            self.advance()
            ind = self.individual()
            self.expect("RBRACE")
            return Nominal(ind)
        if tok.kind == "GENIDENT":
            return Atomic(self.advance().text)
        if tok.kind != "IDENT":
            raise self.error(f"expected concept, found {tok.text!r}")
        word = tok.text
        if word == "Top":
            self.advance()
            return TOP
        if word == "Bot":
            self.advance()
            return BOT
        if word == "not":
            self.advance()
            self.expect("LPAREN")
            inner = self.concept()
            self.expect("RPAREN")
            return Not(inner)
        if word in ("and", "or"):
            self.advance()
            self.expect("LPAREN")
            left = self.concept()
            self.expect("COMMA")
            right = self.concept()
            self.expect("RPAREN")
            return And(left, right) if word == "and" else or_(left, right)
        if word in ("exists", "forall"):
            self.advance()
            self.expect("LPAREN")
            if self.cur.kind == "IDENT" and self.cur.text == "auto":
                self.advance()
                self.expect("LBRACKET")
                re_ast = self.regex()
                self.expect("RBRACKET")
                self.expect("COMMA")
                filler = self.concept()
                self.expect("RPAREN")
                nfa = rx.compile_regex(re_ast)
                return (
                    ExistsAuto(nfa, filler)
                    if word == "exists"
                    else forall_auto(nfa, filler)
                )
            role = self.role()
            self.expect("COMMA")
            filler = self.concept()
            self.expect("RPAREN")
            return (
                Exists(role, filler) if word == "exists" else forall_role(role, filler)
            )
        if word in ("atleast", "atmost"):
            self.advance()
            self.expect("LPAREN")
            count = int(self.expect("INT").text)
            self.expect("COMMA")
            role = self.role()
            self.expect("COMMA")
            filler = self.concept()
            self.expect("RPAREN")
            return (
                AtLeast(count, role, filler)
                if word == "atleast"
                else at_most(count, role, filler)
            )
        if word == "self":
            self.advance()
            self.expect("LPAREN")
            role = self.role()
            self.expect("RPAREN")
            return SelfLoop(role)
        return Atomic(self.concept_name())

    # -- axioms ---------------------------------------------------------------

    def assertion(self) -> Axiom:
        first = self.cur
        if self.peek().kind == "TILDE":
            left = self.individual()
            self.expect("TILDE")
            right = self.individual()
            return EqAssert(left, right)
        name = self.name_token()
        self.expect("LPAREN")
        arg1 = self.individual()
        if self.cur.kind == "COMMA":
            self.advance()
            arg2 = self.individual()
            self.expect("RPAREN")
            rname = name.text
            if rname in RESERVED_ROLES and not self.internal:
                raise ParseError(f"{rname!r} is reserved", name.line, name.col)
            if name.kind == "IDENT" and not rname[0].islower():
                raise ParseError(
                    f"role names start lowercase: {rname!r}", name.line, name.col
                )
            return RoleAssert(rname, arg1, arg2)
        self.expect("RPAREN")
        cname = name.text
        if cname in RESERVED_CONCEPTS and not self.internal:
            raise ParseError(f"{cname!r} is reserved", name.line, name.col)
        if name.kind == "IDENT" and cname not in RESERVED_CONCEPTS:
            if not cname[0].isupper():
                raise ParseError(
                    f"concept assertions need a concept name: {cname!r}",
                    first.line,
                    first.col,
                )
        return ConceptAssert(cname, arg1)

    def _concept_starts(self) -> bool:
        tok = self.cur
        if tok.kind == "LBRACE":
            return True
        if tok.kind != "IDENT" and tok.kind != "GENIDENT":
            return False
        if tok.kind == "GENIDENT":
            # Generated concept vs role names are disambiguated by usage site;
            # a bare generated ident at axiom level is treated as a concept.
            return self.peek().kind in ("SUBSUMED", "EQEQ")
        word = tok.text
        return word in CONCEPT_KEYWORDS or word[0].isupper()

    def axiom(self) -> Axiom:
        tok = self.cur
        if tok.kind == "IDENT" and tok.text == "not" and self.peek().kind != "LPAREN":
            self.advance()
            return NegAssert(self.assertion())
        if tok.kind in ("IDENT", "GENIDENT"):
            nxt = self.peek()
            if nxt.kind == "TILDE":
                return self.assertion()
            if nxt.kind == "LPAREN" and not (tok.kind == "IDENT" and tok.text in CONCEPT_KEYWORDS):
                return self.assertion()
            if nxt.kind == "EQ":
                name = self.role_name()
                self.expect("EQ")
                role = self.role()
                return RoleEq(name, role)
        if self._concept_starts():
            left = self.concept()
            if self.cur.kind == "SUBSUMED":
                self.advance()
                return Gci(left, self.concept())
            if self.cur.kind == "EQEQ":
                self.advance()
                return ConceptEq(left, self.concept())
            raise self.error("expected '[=' or '==' after concept")
        left_role = self.role()
        if self.cur.kind == "SUBSUMED":
            self.advance()
            return RoleIncl(left_role, self.role())
        raise self.error("expected '[=' after role")

    def kb(self) -> tuple[list[Axiom], list[Axiom]]:
        abox: list[Axiom] = []
        tbox: list[Axiom] = []
        while self.cur.kind != "EOF":
            ax = self.axiom()
            self.expect("DOT")
            if isinstance(ax, (ConceptAssert, RoleAssert, EqAssert, NegAssert)):
                abox.append(ax)
            else:
                tbox.append(ax)
        return abox, tbox

    # -- queries ----------------------------------------------------------------

    def query_term(self) -> Term:
        if self.cur.kind == "VAR":
            return Term(self.advance().text, True)
        return Term(self.individual(), False)

    def query_atom(self):
        name = self.name_token()
        self.expect("LPAREN")
        t1 = self.query_term()
        if self.cur.kind == "COMMA":
            self.advance()
            t2 = self.query_term()
            self.expect("RPAREN")
            return RoleAtom(name.text, t1, t2)
        self.expect("RPAREN")
        if name.kind == "IDENT" and not name.text[0].isupper():
            raise ParseError(
                f"concept atoms need a concept name: {name.text!r}",
                name.line,
                name.col,
            )
        return ConceptAtom(name.text, t1)

    def query_disjunct(self) -> ConjunctiveQuery:
        atoms = [self.query_atom()]
        while self.cur.kind == "AMP":
            self.advance()
            atoms.append(self.query_atom())
        return ConjunctiveQuery(frozenset(atoms))

    def ucq(self) -> list[ConjunctiveQuery]:
        out = [self.query_disjunct()]
        while self.cur.kind == "PIPE":
            self.advance()
            out.append(self.query_disjunct())
        return out


def parse_kb(text: str, internal: bool = False) -> KnowledgeBase:
    parser = _Parser(tokenize(text, internal=internal), internal)
    abox, tbox = parser.kb()
    return make_kb(abox, tbox)


def parse_concept(text: str, internal: bool = False) -> Concept:
    parser = _Parser(tokenize(text, internal=internal), internal)
    c = parser.concept()
    parser.expect("EOF")
    return c


def parse_query(text: str) -> list[ConjunctiveQuery]:
    """Parse a union of conjunctive queries: atoms joined by ``&``, disjuncts by ``|``."""
    parser = _Parser(tokenize(text), False)
    out = parser.ucq()
    parser.expect("EOF")
    return out


# ---------------------------------------------------------------------------
# Pretty printing (inverse of the parser on ASTs)
# ---------------------------------------------------------------------------


def role_text(role: SimpleRole) -> str:
    if isinstance(role, RoleName):
        return role.name
    if isinstance(role, Inverse):
        return f"inv({role_text(role.arg)})"
    op = {"RoleAnd": "&", "RoleOr": "|", "RoleDiff": "\\"}[type(role).__name__]

    def wrap(r: SimpleRole) -> str:
        if isinstance(r, (RoleAnd, RoleOr, RoleDiff)):
            return f"({role_text(r)})"
        return role_text(r)

    return f"{wrap(role.left)} {op} {wrap(role.right)}"


def regex_text(re_ast: rx.Regex) -> str:
    if isinstance(re_ast, rx.Sym):
        text = role_text(re_ast.role)
        if isinstance(re_ast.role, (RoleAnd, RoleOr, RoleDiff)):
            return f"({text})"
        return text
    if isinstance(re_ast, rx.TestSym):
        return f"test({concept_text(re_ast.concept)})"
    if isinstance(re_ast, rx.Cat):
        return f"{regex_text(re_ast.left)} {regex_text(re_ast.right)}"
    if isinstance(re_ast, rx.Alt):
        def wrap(r: rx.Regex) -> str:
            return f"({regex_text(r)})" if isinstance(r, rx.Cat) else regex_text(r)

        return f"{wrap(re_ast.left)} + {wrap(re_ast.right)}"
    if isinstance(re_ast, rx.Star):
        return f"({regex_text(re_ast.arg)})*"
    if isinstance(re_ast, rx.Plus):
        return f"({regex_text(re_ast.arg)})+"
    raise TypeError(f"not a regex: {re_ast!r}")


def nfa_text(nfa: Nfa) -> str:
    if nfa.source is None:
        raise ValueError("automaton has no printable source expression")
    return f"auto[{regex_text(nfa.source)}]"


def concept_text(c: Concept) -> str:
    if isinstance(c, Bottom):
        return "Bot"
    if c == TOP:
        return "Top"
    if isinstance(c, Atomic):
        return c.name
    if isinstance(c, Nominal):
        return "{" + c.individual + "}"
    if isinstance(c, Not):
        return f"not({concept_text(c.arg)})"
    if isinstance(c, And):
        return f"and({concept_text(c.left)}, {concept_text(c.right)})"
    if isinstance(c, Exists):
        return f"exists({role_text(c.role)}, {concept_text(c.filler)})"
    if isinstance(c, AtLeast):
        return f"atleast({c.count}, {role_text(c.role)}, {concept_text(c.filler)})"
    if isinstance(c, SelfLoop):
        return f"self({role_text(c.role)})"
    if isinstance(c, ExistsAuto):
        return f"exists({nfa_text(c.nfa)}, {concept_text(c.filler)})"
    raise TypeError(f"not a concept: {c!r}")


def axiom_text(ax: Axiom) -> str:
    if isinstance(ax, Gci):
        return f"{concept_text(ax.sub)} [= {concept_text(ax.sup)}."
    if isinstance(ax, ConceptEq):
        return f"{concept_text(ax.left)} == {concept_text(ax.right)}."
    if isinstance(ax, RoleIncl):
        return f"{role_text(ax.sub)} [= {role_text(ax.sup)}."
    if isinstance(ax, RoleEq):
        return f"{ax.name} = {role_text(ax.role)}."
    if isinstance(ax, ConceptAssert):
        return f"{ax.concept_name}({ax.individual})."
    if isinstance(ax, RoleAssert):
        return f"{ax.role_name}({ax.subject}, {ax.object})."
    if isinstance(ax, EqAssert):
        return f"{ax.left} ~ {ax.right}."
    if isinstance(ax, NegAssert):
        return f"not {axiom_text(ax.inner)[:-1]}."
    raise TypeError(f"not an axiom: {ax!r}")


def kb_text(kb: KnowledgeBase) -> str:
    lines = [axiom_text(ax) for ax in kb.abox]
    lines += [axiom_text(ax) for ax in kb.tbox]
    return "\n".join(lines) + ("\n" if lines else "")


def term_text(t: Term) -> str:
    return t.text if not t.is_var else t.text


def query_text(disjuncts: list[ConjunctiveQuery]) -> str:
    parts = []
    for q in disjuncts:
        atom_texts = []
        for atom in sorted(q.atoms, key=repr):
            if isinstance(atom, ConceptAtom):
                atom_texts.append(f"{atom.concept_name}({term_text(atom.term)})")
            else:
                atom_texts.append(
                    f"{atom.role_name}({term_text(atom.subject)}, {term_text(atom.object)})"
                )
        parts.append(" & ".join(atom_texts))
    return " | ".join(parts)
