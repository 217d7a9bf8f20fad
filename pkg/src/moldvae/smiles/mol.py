"""Molecular graphs from SMILES tokens: parsing, valence checks, weight.

The graph semantics are intentionally minimal: enough structure to decide
validity under standard valence rules and to compute molecular weight.
Stereo markers (``/ \\ @ @@``) are accepted and ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .tokenizer import SmilesError, Token, TokenKind, tokenize


class UnclosedBranch(SmilesError):
    pass


class UnmatchedRingBond(SmilesError):
    def __init__(self, digit: str, msg: str = ""):
        self.digit = digit
        super().__init__(msg or f"ring-bond digit {digit!r} is not paired")


class EmptyBranch(SmilesError):
    pass


class DanglingBond(SmilesError):
    pass


class UnknownElement(SmilesError):
    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"no atomic weight for element {symbol!r}")


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: int = 0
    bracket: bool = False  # bracket atoms carry exactly the written H count


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: float  # 1, 1.5 (aromatic), 2 or 3


@dataclass
class MolGraph:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        out = []
        for b in self.bonds:
            if b.i == i:
                out.append((b.j, b.order))
            elif b.j == i:
                out.append((b.i, b.order))
        return out


_BRACKET_RE = re.compile(
    r"\[(?P<isotope>\d+)?(?P<symbol>[A-Z][a-z]?|[a-z]{1,2}|\*)(?P<chiral>@{1,2})?"
    r"(?P<hcount>H\d*)?(?P<charge>\+\d+|-\d+|\++|-+)?(?::\d+)?\]"
)

_BOND_ORDER = {"-": 1.0, "=": 2.0, "#": 3.0, ":": 1.5, "/": 1.0, "\\": 1.0}


def _parse_bracket(text: str) -> Atom:
    m = _BRACKET_RE.fullmatch(text)
    if m is None:
        raise SmilesError(f"malformed bracket atom {text!r}")
    symbol = m.group("symbol")
    aromatic = symbol[0].islower() and symbol != "*"
    element = symbol if not aromatic else symbol.capitalize()
    h = m.group("hcount")
    if h is None:
        explicit_h = 0
    elif h == "H":
        explicit_h = 1
    else:
        explicit_h = int(h[1:])
    c = m.group("charge")
    if c is None:
        charge = 0
    elif c[0] in "+-" and len(c) > 1 and c[1:].isdigit():
        charge = int(c[1:]) * (1 if c[0] == "+" else -1)
    else:
        charge = len(c) * (1 if c[0] == "+" else -1)
    return Atom(element, aromatic, charge, explicit_h, bracket=True)


def parse(tokens: list[Token]) -> MolGraph:
    """Build a MolGraph from a token sequence.

    Handles branches, ring-closure digits, aromatic atoms and bracket
    atoms.  Unspecified bonds default to single, or aromatic (order 1.5)
    between two aromatic atoms.
    """
    g = MolGraph()
    prev: int | None = None          # atom awaiting the next bond
    stack: list[int | None] = []     # saved prev at '('
    pending: str | None = None       # explicit bond symbol awaiting its target
    # open ring digits: digit -> (atom index, bond symbol or None)
    rings: dict[str, tuple[int, str | None]] = {}
    branch_had_atom = True

    def close_bond(a: int, b: int, symbol: str | None) -> None:
        if a == b:
            raise UnmatchedRingBond(str(b), "ring digit closes onto its own atom")
        if symbol is not None:
            order = _BOND_ORDER[symbol]
        elif g.atoms[a].aromatic and g.atoms[b].aromatic:
            order = 1.5
        else:
            order = 1.0
        g.bonds.append(Bond(a, b, order))

    for tok in tokens:
        if tok.kind in (TokenKind.ORGANIC_ATOM, TokenKind.AROMATIC_ATOM,
                        TokenKind.BRACKET_ATOM, TokenKind.WILDCARD):
            if tok.kind == TokenKind.BRACKET_ATOM:
                atom = _parse_bracket(tok.text)
            elif tok.kind == TokenKind.WILDCARD:
                atom = Atom("*")
            else:
                aromatic = tok.kind == TokenKind.AROMATIC_ATOM
                atom = Atom(tok.text.capitalize() if aromatic else tok.text, aromatic)
            g.atoms.append(atom)
            idx = len(g.atoms) - 1
            if prev is not None:
                close_bond(prev, idx, pending)
            elif pending is not None:
                raise DanglingBond("bond with no preceding atom")
            prev = idx
            pending = None
            branch_had_atom = True
        elif tok.kind == TokenKind.BOND:
            if pending is not None:
                raise DanglingBond("two bond symbols in a row")
            if prev is None:
                raise DanglingBond("bond with no preceding atom")
            pending = tok.text
        elif tok.kind == TokenKind.RING_BOND:
            digit = tok.text
            if prev is None:
                raise UnmatchedRingBond(digit, "ring digit before any atom")
            if digit in rings:
                other, sym0 = rings.pop(digit)
                sym = pending if pending is not None else sym0
                if sym0 is not None and pending is not None and sym0 != pending:
                    raise UnmatchedRingBond(digit, "conflicting ring-bond orders")
                close_bond(other, prev, sym)
                pending = None
            else:
                rings[digit] = (prev, pending)
                pending = None
        elif tok.kind == TokenKind.BRANCH:
            if tok.text == "(":
                if prev is None:
                    raise UnclosedBranch("branch with no preceding atom")
                if pending is not None:
                    raise DanglingBond("bond before '('")
                stack.append(prev)
                branch_had_atom = False
            else:
                if not stack:
                    raise UnclosedBranch("unmatched ')'")
                if pending is not None:
                    raise DanglingBond("bond before ')'")
                if not branch_had_atom:
                    raise EmptyBranch("empty '()' branch")
                prev = stack.pop()
                branch_had_atom = True
        elif tok.kind == TokenKind.DOT:
            if pending is not None:
                raise DanglingBond("bond before '.'")
            prev = None

    if pending is not None:
        raise DanglingBond("bond at end of input")
    if stack:
        raise UnclosedBranch("unclosed '(' at end of input")
    if rings:
        digit = sorted(rings)[0]
        raise UnmatchedRingBond(digit)
    return g


def parse_smiles(smiles: str) -> MolGraph:
    return parse(tokenize(smiles))


# Maximum total valence by element for neutral atoms.  A formal charge of
# c shifts the limit by +c (e.g. [N+]: 4, [O-]: 1).
MAX_VALENCE = {
    "B": 3, "C": 4, "N": 5, "O": 2, "P": 5, "S": 6,
    "F": 1, "Cl": 1, "Br": 1, "I": 1, "H": 1,
}

# Valence used to fill implicit hydrogens on organic-subset atoms.
DEFAULT_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
}

ATOMIC_WEIGHT = {
    "H": 1.008, "B": 10.811, "C": 12.011, "N": 14.007, "O": 15.999,
    "F": 18.998, "P": 30.974, "S": 32.06, "Cl": 35.45, "Br": 79.904,
    "I": 126.904,
}


def _bond_order_sum(g: MolGraph, i: int) -> float:
    """Heuristic bond-order total for valence accounting.

    Aromatic (1.5-order) bonds count as 1 each; an aromatic atom gets one
    extra unit for its ring membership.  Other orders count at face value.
    """
    total = 0.0
    aromatic_bonds = 0
    for _, order in g.neighbors(i):
        if order == 1.5:
            aromatic_bonds += 1
            total += 1.0
        else:
            total += order
    if g.atoms[i].aromatic:
        total += 1.0
    return total


@dataclass
class ValidityReport:
    valid: bool
    violations: list[int] = field(default_factory=list)


def check_valence(g: MolGraph) -> ValidityReport:
    """Flag atoms whose bond total plus explicit H exceeds the allowed valence.

    Total function on MolGraph: wildcard and unknown elements are never
    flagged (no valence model for them).
    """
    violations = []
    for i, atom in enumerate(g.atoms):
        limit = MAX_VALENCE.get(atom.element)
        if limit is None:
            continue
        limit += atom.charge
        if _bond_order_sum(g, i) + atom.explicit_h > limit:
            violations.append(i)
    return ValidityReport(valid=not violations, violations=violations)


def implicit_hydrogens(g: MolGraph, i: int) -> int:
    """Implicit H on atom i.  Bracket atoms carry only their explicit H."""
    atom = g.atoms[i]
    if atom.bracket or atom.element not in DEFAULT_VALENCE:
        return 0
    free = DEFAULT_VALENCE[atom.element] - _bond_order_sum(g, i)
    return max(0, int(free))


def molecular_weight(g: MolGraph) -> float:
    """Sum of atomic weights including implicit and explicit hydrogens."""
    total = 0.0
    for i, atom in enumerate(g.atoms):
        w = ATOMIC_WEIGHT.get(atom.element)
        if w is None:
            raise UnknownElement(atom.element)
        total += w
        total += ATOMIC_WEIGHT["H"] * (atom.explicit_h + implicit_hydrogens(g, i))
    return total


def is_valid_smiles(smiles: str) -> bool:
    """True when the string lexes, parses and passes the valence check."""
    try:
        g = parse_smiles(smiles)
    except SmilesError:
        return False
    return bool(g.atoms) and check_valence(g).valid
