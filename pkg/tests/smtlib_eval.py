"""Miniature SMT-LIB2 evaluator used as an independent oracle for the
exported miters. Supports exactly the construct subset the exporter emits:
declare-const / define-fun over bitvectors, the QF_BV operators, ite,
and/or/not, =/distinct and the signed/unsigned comparisons. Satisfiability
is decided by enumerating every assignment of the declared constants, so
miters must stay within a small total input width (they do: the acceptance
bound is 12 bits)."""


def parse_sexprs(text):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "() \t\n":
            if ch in "()":
                tokens.append(ch)
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            tokens.append(text[i:j + 1])
            i = j + 1
        elif ch == ";":
            i = text.index("\n", i)
        else:
            j = i
            while j < len(text) and text[j] not in "() \t\n":
                j += 1
            tokens.append(text[i:j])
            i = j
    pos = [0]

    def read():
        tok = tokens[pos[0]]
        pos[0] += 1
        if tok == "(":
            out = []
            while tokens[pos[0]] != ")":
                out.append(read())
            pos[0] += 1
            return out
        return tok

    exprs = []
    while pos[0] < len(tokens):
        exprs.append(read())
    return exprs


def _mask(w):
    return (1 << w) - 1


def _sv(x, w):
    return x - (1 << w) if x >> (w - 1) else x


class MiterModel:
    """Parsed miter: declared inputs, ordered defines, asserted terms."""

    def __init__(self, text):
        self.inputs = []      # (name, width)
        self.defines = []     # (name, width, term)
        self.asserts = []
        for form in parse_sexprs(text):
            head = form[0] if isinstance(form, list) else form
            if head == "declare-const":
                name, sort = form[1], form[2]
                self.inputs.append((name, int(sort[2])))
            elif head == "define-fun":
                name, _args, sort, term = form[1], form[2], form[3], form[4]
                self.defines.append((name, int(sort[2]), term))
            elif head == "assert":
                self.asserts.append(form[1])

    def total_bits(self):
        return sum(w for _, w in self.inputs)

    def eval_term(self, term, env):
        if isinstance(term, str):
            return env[term]
        head = term[0]
        if isinstance(head, list):  # ((_ extract hi lo) x) and friends
            op = head[1]
            if op == "extract":
                hi, lo = int(head[2]), int(head[3])
                v, _ = self.eval_term(term[1], env)
                return ((v >> lo) & _mask(hi - lo + 1), hi - lo + 1)
            if op == "zero_extend":
                k = int(head[2])
                v, w = self.eval_term(term[1], env)
                return (v, w + k)
            if op == "sign_extend":
                k = int(head[2])
                v, w = self.eval_term(term[1], env)
                if v >> (w - 1):
                    v |= _mask(w + k) ^ _mask(w)
                return (v, w + k)
            raise ValueError(f"unknown indexed op {op}")
        if head == "_":  # (_ bvN W)
            return (int(term[1][2:]), int(term[2]))
        args = [self.eval_term(a, env) for a in term[1:]]
        if head == "ite":
            return args[1] if args[0] else args[2]
        if head in ("=", "distinct"):
            va = args[0][0] if isinstance(args[0], tuple) else args[0]
            vb = args[1][0] if isinstance(args[1], tuple) else args[1]
            return (va == vb) if head == "=" else (va != vb)
        if head == "and":
            return all(args)
        if head == "or":
            return any(args)
        if head == "not":
            return not args[0]
        (va, wa) = args[0]
        if head == "bvnot":
            return (va ^ _mask(wa), wa)
        if head == "bvneg":
            return ((-va) & _mask(wa), wa)
        (vb, wb) = args[1]
        if head == "concat":
            return ((va << wb) | vb, wa + wb)
        assert wa == wb, (head, wa, wb)
        w = wa
        if head == "bvand":
            return (va & vb, w)
        if head == "bvor":
            return (va | vb, w)
        if head == "bvxor":
            return (va ^ vb, w)
        if head == "bvadd":
            return ((va + vb) & _mask(w), w)
        if head == "bvsub":
            return ((va - vb) & _mask(w), w)
        if head == "bvmul":
            return ((va * vb) & _mask(w), w)
        if head == "bvshl":
            return ((va << vb) & _mask(w) if vb < w else 0, w)
        if head == "bvlshr":
            return (va >> vb if vb < w else 0, w)
        if head == "bvashr":
            s = _sv(va, w)
            if vb >= w:
                return (_mask(w) if s < 0 else 0, w)
            return ((s >> vb) & _mask(w), w)
        if head == "bvult":
            return va < vb
        if head == "bvule":
            return va <= vb
        if head == "bvugt":
            return va > vb
        if head == "bvuge":
            return va >= vb
        if head == "bvslt":
            return _sv(va, w) < _sv(vb, w)
        if head == "bvsle":
            return _sv(va, w) <= _sv(vb, w)
        if head == "bvsgt":
            return _sv(va, w) > _sv(vb, w)
        if head == "bvsge":
            return _sv(va, w) >= _sv(vb, w)
        raise ValueError(f"unknown operator {head}")

    def check_sat(self, max_bits=14):
        total = self.total_bits()
        if total > max_bits:
            raise ValueError(f"{total} input bits is too many to enumerate")
        for point in range(1 << total):
            env = {}
            acc = point
            for name, w in self.inputs:
                env[name] = (acc & _mask(w), w)
                acc >>= w
            for name, w, term in self.defines:
                env[name] = self.eval_term(term, env)
            if all(self.eval_term(a, env) for a in self.asserts):
                return "sat"
        return "unsat"


def solve_text(text, max_bits=14):
    return MiterModel(text).check_sat(max_bits)
