"""Parser for the supported Verilog subset.

Accepts the canonical printer output plus common hand-written variations
(precedence without full parenthesization, comma declaration lists, else-if
chains, single-statement bodies). Anything that is recognizable Verilog but
outside the subset raises UnsupportedConstructError naming the construct;
everything else malformed raises HdlSyntaxError with line/column.

The top module is the unique uninstantiated module when there is exactly one,
otherwise the last module in the file (the canonical printer always places
the top module last).
"""

import re

from .ast import (
    AlwaysBlock, Binary, BitSelect, Blocking, Case, CaseArm, Concat, Cond,
    Const, ContinuousAssign, Design, If, Instance, ModuleDef, NetDecl,
    NonBlocking, PartSelect, Port, Ref, RegDecl, Unary, INPUT, OUTPUT,
)
from .errors import HdlSyntaxError, UnsupportedConstructError

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>//[^\n]*|/\*.*?\*/)
      | (?P<sized>\d+\s*'\s*[bodhBODH]\s*[0-9a-fA-F_xXzZ?]+)
      | (?P<num>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
      | (?P<op><<<|>>>|<<|>>|<=|>=|===|!==|==|!=|&&|\|\||~&|~\||~\^|\^~
              |[~!&|^+\-*/%<>=?:;,.(){}\[\]@\#])
    """,
    re.VERBOSE | re.DOTALL,
)

_UNSUPPORTED_KEYWORDS = {
    "inout", "real", "integer", "time", "realtime", "initial", "task",
    "function", "casex", "casez", "negedge", "generate", "genvar", "for",
    "while", "repeat", "forever", "wait", "fork", "join", "deassign",
    "force", "release", "defparam", "specify", "parameter", "localparam",
    "tri", "tri0", "tri1", "trireg", "supply0", "supply1", "event",
    "primitive", "table", "wand", "wor", "automatic", "disable",
}

_UNSUPPORTED_OPS = {"/", "%", "!", "===", "!==", "~&", "~|", "~^", "^~", "#"}

KEYWORDS = {
    "module", "endmodule", "input", "output", "signed", "wire", "reg",
    "assign", "always", "posedge", "begin", "end", "if", "else", "case",
    "endcase", "default",
} | _UNSUPPORTED_KEYWORDS


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text):
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise HdlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok_text = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, tok_text, line, col))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            col = len(tok_text) - tok_text.rfind("\n")
        else:
            col += len(tok_text)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


def _parse_sized(tok):
    body = re.sub(r"\s+", "", tok.text)
    width_s, rest = body.split("'")
    base_ch = rest[0].lower()
    digits = rest[1:].replace("_", "")
    if re.search(r"[xXzZ?]", digits):
        raise UnsupportedConstructError(
            f"four-state literal {tok.text!r}", tok.line, tok.col)
    width = int(width_s)
    base = {"b": 2, "o": 8, "d": 10, "h": 16}[base_ch]
    value = int(digits, base)
    if width < 1 or value >> width:
        raise HdlSyntaxError(
            f"constant {tok.text!r} does not fit its width", tok.line, tok.col)
    return Const(value, width)


# binding power per binary operator (higher binds tighter)
_BIN_PREC = {
    "*": 11,
    "+": 10, "-": 10,
    "<<": 9, ">>": 9, ">>>": 9, "<<<": 9,
    "<": 8, "<=": 8, ">": 8, ">=": 8,
    "==": 7, "!=": 7,
    "&": 6,
    "^": 5,
    "|": 4,
    "&&": 3,
    "||": 2,
}


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers -----------------------------------------------------
    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text):
        t = self.next()
        if t.text != text:
            raise HdlSyntaxError(f"expected {text!r}, found {t.text!r}",
                                 t.line, t.col)
        return t

    def expect_ident(self):
        t = self.next()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise HdlSyntaxError(f"expected identifier, found {t.text!r}",
                                 t.line, t.col)
        return t.text

    def at(self, text):
        return self.peek().text == text

    def _unsupported_check(self, t):
        if t.kind == "ident" and t.text in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstructError(t.text, t.line, t.col)
        if t.kind == "op" and t.text in _UNSUPPORTED_OPS:
            raise UnsupportedConstructError(f"operator {t.text}", t.line, t.col)

    # -- expressions -------------------------------------------------------
    def parse_expr(self, min_prec=1):
        t = self.peek()
        self._unsupported_check(t)
        lhs = self._parse_primary()
        while True:
            t = self.peek()
            self._unsupported_check(t)
            if t.text == "?" and min_prec <= 1:
                self.next()
                if_true = self.parse_expr(1)
                self.expect(":")
                if_false = self.parse_expr(1)
                lhs = Cond(lhs, if_true, if_false)
                continue
            prec = _BIN_PREC.get(t.text)
            if prec is None or prec < min_prec:
                return lhs
            self.next()
            op = {"<<<": "<<"}.get(t.text, t.text)
            rhs = self.parse_expr(prec + 1)
            lhs = Binary(op, lhs, rhs)

    def _parse_primary(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            e = self.parse_expr(1)
            self.expect(")")
            return e
        if t.text == "{":
            self.next()
            first = self.parse_expr(1)
            if self.at("{"):
                raise UnsupportedConstructError("replication", t.line, t.col)
            parts = [first]
            while self.at(","):
                self.next()
                parts.append(self.parse_expr(1))
            self.expect("}")
            return Concat(tuple(parts))
        if t.text in ("~", "-", "&", "|", "^"):
            self.next()
            return Unary(t.text, self._parse_primary())
        if t.kind == "sized":
            self.next()
            return _parse_sized(t)
        if t.kind == "num":
            self.next()
            return Const(int(t.text), 32)
        if t.kind == "ident":
            self._unsupported_check(t)
            name = self.expect_ident()
            return self._maybe_select(name)
        raise HdlSyntaxError(f"expected expression, found {t.text!r}",
                             t.line, t.col)

    def _maybe_select(self, name):
        if not self.at("["):
            return Ref(name)
        self.next()
        first = self.parse_expr(1)
        if self.at(":"):
            self.next()
            t = self.peek()
            lsb = self.parse_expr(1)
            if not isinstance(first, Const) or not isinstance(lsb, Const):
                raise HdlSyntaxError("part-select bounds must be constants",
                                     t.line, t.col)
            self.expect("]")
            return PartSelect(name, first.value, lsb.value)
        self.expect("]")
        return BitSelect(name, first)

    # -- statements ----------------------------------------------------------
    def parse_stmt(self):
        t = self.peek()
        self._unsupported_check(t)
        if t.text == "if":
            self.next()
            self.expect("(")
            cond = self.parse_expr(1)
            self.expect(")")
            then_body = self.parse_block()
            else_body = ()
            if self.at("else"):
                self.next()
                if self.at("if"):
                    else_body = (self.parse_stmt(),)
                else:
                    else_body = self.parse_block()
            return If(cond, then_body, else_body)
        if t.text == "case":
            return self._parse_case()
        if t.kind == "ident":
            name = self.expect_ident()
            target = self._maybe_select(name)
            op = self.next()
            if op.text == "<=":
                klass = NonBlocking
            elif op.text == "=":
                klass = Blocking
            else:
                raise HdlSyntaxError(f"expected assignment, found {op.text!r}",
                                     op.line, op.col)
            rhs = self.parse_expr(1)
            self.expect(";")
            return klass(target, rhs)
        raise HdlSyntaxError(f"expected statement, found {t.text!r}",
                             t.line, t.col)

    def _parse_case(self):
        self.expect("case")
        self.expect("(")
        subject = self.parse_expr(1)
        self.expect(")")
        arms = []
        default = ()
        saw_default = False
        while not self.at("endcase"):
            t = self.peek()
            if t.kind == "eof":
                raise HdlSyntaxError("unterminated case", t.line, t.col)
            if self.at("default"):
                self.next()
                self.expect(":")
                default = self.parse_block()
                saw_default = True
                continue
            labels = [self.parse_expr(1)]
            while self.at(","):
                self.next()
                labels.append(self.parse_expr(1))
            self.expect(":")
            body = self.parse_block()
            for lab in labels:
                if not isinstance(lab, Const):
                    raise HdlSyntaxError("case labels must be constants",
                                         t.line, t.col)
                arms.append(CaseArm(lab, body))
        self.expect("endcase")
        if not saw_default:
            default = ()
        return Case(subject, tuple(arms), default)

    def parse_block(self):
        if self.at("begin"):
            self.next()
            body = []
            while not self.at("end"):
                t = self.peek()
                if t.kind == "eof":
                    raise HdlSyntaxError("unterminated begin block", t.line, t.col)
                body.append(self.parse_stmt())
            self.expect("end")
            return tuple(body)
        return (self.parse_stmt(),)

    # -- module items --------------------------------------------------------
    def _parse_range(self):
        if not self.at("["):
            return 1
        t = self.next()
        msb = self.parse_expr(1)
        self.expect(":")
        lsb = self.parse_expr(1)
        self.expect("]")
        if (not isinstance(msb, Const) or not isinstance(lsb, Const)
                or lsb.value != 0):
            raise HdlSyntaxError("ranges must be [N:0] with constant N",
                                 t.line, t.col)
        return msb.value + 1

    def parse_module(self):
        self.expect("module")
        name = self.expect_ident()
        self.expect("(")
        port_order = []
        if not self.at(")"):
            port_order.append(self.expect_ident())
            while self.at(","):
                self.next()
                port_order.append(self.expect_ident())
        self.expect(")")
        self.expect(";")

        port_specs = {}
        items = []
        while not self.at("endmodule"):
            t = self.peek()
            self._unsupported_check(t)
            if t.kind == "eof":
                raise HdlSyntaxError("unterminated module", t.line, t.col)
            if t.text in ("input", "output"):
                self.next()
                direction = INPUT if t.text == "input" else OUTPUT
                signed = False
                if self.at("signed"):
                    self.next()
                    signed = True
                width = self._parse_range()
                while True:
                    pname = self.expect_ident()
                    if pname not in port_order:
                        raise HdlSyntaxError(
                            f"declared port {pname!r} missing from header",
                            t.line, t.col)
                    if pname in port_specs:
                        raise HdlSyntaxError(f"port {pname!r} declared twice",
                                             t.line, t.col)
                    port_specs[pname] = Port(pname, direction, width, signed)
                    if self.at(","):
                        self.next()
                        continue
                    break
                self.expect(";")
            elif t.text in ("wire", "reg"):
                self.next()
                signed = False
                if self.at("signed"):
                    self.next()
                    signed = True
                width = self._parse_range()
                while True:
                    dname = self.expect_ident()
                    if t.text == "wire":
                        items.append(NetDecl(dname, width, signed))
                        if self.at("="):
                            raise UnsupportedConstructError(
                                "wire declaration assignment", t.line, t.col)
                    else:
                        init = 0
                        if self.at("="):
                            self.next()
                            c = self.next()
                            if c.kind == "sized":
                                init = _parse_sized(c).value
                            elif c.kind == "num":
                                init = int(c.text)
                            else:
                                raise HdlSyntaxError(
                                    "reg initializer must be a constant",
                                    c.line, c.col)
                            if init >> width:
                                raise HdlSyntaxError(
                                    f"initializer of {dname!r} does not fit",
                                    c.line, c.col)
                        items.append(RegDecl(dname, width, signed, init))
                    if self.at(","):
                        self.next()
                        continue
                    break
                self.expect(";")
            elif t.text == "assign":
                self.next()
                tname = self.expect_ident()
                target = self._maybe_select(tname)
                self.expect("=")
                rhs = self.parse_expr(1)
                self.expect(";")
                items.append(ContinuousAssign(target, rhs))
            elif t.text == "always":
                self.next()
                self.expect("@")
                self.expect("(")
                edge = self.next()
                if edge.text != "posedge":
                    raise UnsupportedConstructError(
                        f"sensitivity {edge.text!r}", edge.line, edge.col)
                clock = self.expect_ident()
                if self.at("or") or self.at(","):
                    raise UnsupportedConstructError(
                        "multiple sensitivity events", edge.line, edge.col)
                self.expect(")")
                body = self.parse_block()
                items.append(AlwaysBlock(body, clock))
            elif t.kind == "ident" and t.text not in KEYWORDS:
                mod_name = self.expect_ident()
                inst_name = self.expect_ident()
                self.expect("(")
                conns = []
                if not self.at(")"):
                    while True:
                        dot = self.next()
                        if dot.text != ".":
                            raise UnsupportedConstructError(
                                "positional port connection", dot.line, dot.col)
                        pname = self.expect_ident()
                        self.expect("(")
                        actual = self.parse_expr(1)
                        self.expect(")")
                        conns.append((pname, actual))
                        if self.at(","):
                            self.next()
                            continue
                        break
                self.expect(")")
                self.expect(";")
                items.append(Instance(mod_name, inst_name, tuple(conns)))
            else:
                raise HdlSyntaxError(f"unexpected {t.text!r} in module body",
                                     t.line, t.col)
        self.expect("endmodule")

        ports = []
        for pname in port_order:
            if pname not in port_specs:
                raise HdlSyntaxError(
                    f"port {pname!r} has no direction declaration", 1, 1)
            ports.append(port_specs[pname])
        return ModuleDef(name, tuple(ports), tuple(items))

    def parse_design(self):
        t = self.peek()
        if t.kind == "eof":
            raise HdlSyntaxError("empty input", t.line, t.col)
        modules = []
        while not self.peek().kind == "eof":
            tt = self.peek()
            self._unsupported_check(tt)
            if tt.text != "module":
                raise HdlSyntaxError(f"expected 'module', found {tt.text!r}",
                                     tt.line, tt.col)
            modules.append(self.parse_module())
        instantiated = set()
        for m in modules:
            for it in m.items:
                if isinstance(it, Instance):
                    instantiated.add(it.module)
        roots = [m.name for m in modules if m.name not in instantiated]
        top = roots[0] if len(roots) == 1 else modules[-1].name
        return Design(tuple(modules), top)


def parse_design(text: str) -> Design:
    return _Parser(text).parse_design()
