"""Independent brute-force oracles used to cross-check the library.

Everything here is written from the definitions, with no shortcuts: maps are
enumerated exhaustively, LP optima are recomputed from basic solutions, and
decompositions are enumerated in canonical form.  Slow by design; only run
at small sizes.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from spjopt import (
    Hypergraph,
    KeySet,
    OpenStructure,
    Structure,
    check_tree_decomposition,
    color_number,
    satisfies_keys,
)
from spjopt.simplex import solve_lp


# ---------------------------------------------------------------------------
# Homomorphisms by exhaustive enumeration
# ---------------------------------------------------------------------------


def brute_homs(src: Structure, dst: Structure):
    """All homomorphisms src -> dst, as dicts, by filtering every map."""
    assert src.signature == dst.signature
    out = []
    src_elems = list(src.universe)
    atoms = list(src.atoms())
    for name in src.signature.symbols():
        if src.signature.arity(name) == 0 and src.relations[name] and not dst.relations[name]:
            return []
    if not src_elems:
        return [{}]
    for values in itertools.product(dst.universe, repeat=len(src_elems)):
        h = dict(zip(src_elems, values))
        if all(tuple(h[e] for e in row) in dst.relations[name] for name, row in atoms):
            out.append(h)
    return out


def brute_homs_relation(src: Structure, out_tuple, data: Structure):
    return frozenset(
        tuple(h[e] for e in out_tuple) for h in brute_homs(src, data)
    )


def brute_open_hom_exists(a: OpenStructure, b: OpenStructure) -> bool:
    return any(
        tuple(h[e] for e in a.tuple) == b.tuple
        for h in brute_homs(a.structure, b.structure)
    )


def has_proper_retraction(aug: Structure) -> bool:
    """Exhaustive: is there an idempotent non-surjective endomorphism?"""
    for h in brute_homs(aug, aug):
        if len(set(h.values())) < len(aug.universe) and all(h[h[x]] == h[x] for x in h):
            return True
    return False


# ---------------------------------------------------------------------------
# Randomized chase
# ---------------------------------------------------------------------------


def random_chase(value, keys: KeySet, rng):
    """Chase with a randomized step order; returns the fixpoint only."""
    is_open = isinstance(value, OpenStructure)
    struct = value.structure if is_open else value
    merge = {e: e for e in struct.universe}
    current = struct
    while True:
        violations = []
        for name in current.signature.symbols():
            for pos in keys.for_relation(name):
                idx = sorted(p - 1 for p in pos)
                rows = sorted(current.relations[name])
                for r1, r2 in itertools.combinations(rows, 2):
                    if tuple(r1[i] for i in idx) == tuple(r2[i] for i in idx):
                        for i in range(len(r1)):
                            if i not in idx and r1[i] != r2[i]:
                                violations.append((r1[i], r2[i]))
        if not violations:
            break
        x, y = violations[rng.randrange(len(violations))]
        if rng.random() < 0.5:
            x, y = y, x
        current = current.apply_map({x: y})
        for e, rep in merge.items():
            if rep == x:
                merge[e] = y
    if is_open:
        return OpenStructure(current, tuple(merge[e] for e in value.tuple))
    return current


# ---------------------------------------------------------------------------
# LP oracles
# ---------------------------------------------------------------------------


def _gauss_solve(matrix, rhs):
    """Exact solution of a square system, or None if singular."""
    n = len(matrix)
    a = [[Fraction(matrix[i][j]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        a[col] = [x / inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def packing_lp_by_basic_enumeration(columns, constraint_rows):
    """Max 1.w for Aw <= 1, w >= 0 by enumerating basic solutions.

    ``columns`` is the number of variables, ``constraint_rows`` a list of
    0/1 coefficient lists.  Returns the exact optimum.
    """
    m = len(constraint_rows)
    n = columns
    if m == 0:
        return None if n else Fraction(0)
    # Slack form: [A | I] w' = 1.
    total = n + m
    best = Fraction(0)  # w = 0 is always feasible
    full = [[Fraction(constraint_rows[i][j]) for j in range(n)]
            + [Fraction(1) if k == i else Fraction(0) for k in range(m)]
            for i in range(m)]
    for cols in itertools.combinations(range(total), m):
        mat = [[full[i][c] for c in cols] for i in range(m)]
        sol = _gauss_solve(mat, [Fraction(1)] * m)
        if sol is None or any(v < 0 for v in sol):
            continue
        value = sum(v for c, v in zip(cols, sol) if c < n)
        if value > best:
            best = value
    return best


def fractional_edge_cover(edges, target) -> Fraction:
    """Direct covering LP over the edges: min total weight with every target
    vertex covered at least once."""
    target = [v for v in target]
    edges = [frozenset(e) for e in edges]
    usable = [e for e in edges if e]
    rows = []
    for v in target:
        rows.append(([Fraction(1) if v in e else Fraction(0) for e in usable], ">=", 1))
    res = solve_lp([Fraction(1)] * len(usable), rows, maximize=False)
    assert res.status == "optimal", res.status
    return res.value


# ---------------------------------------------------------------------------
# Exhaustive decomposition enumeration
# ---------------------------------------------------------------------------


def _trees_on(nodes):
    """All labeled trees on the node list, as edge lists (Pruefer)."""
    k = len(nodes)
    if k == 1:
        yield []
        return
    if k == 2:
        yield [(nodes[0], nodes[1])]
        return
    for seq in itertools.product(range(k), repeat=k - 2):
        degree = [1] * k
        for s in seq:
            degree[s] += 1
        edges = []
        seq_list = list(seq)
        leaves = sorted(i for i in range(k) if degree[i] == 1)
        for s in seq_list:
            leaf = leaves.pop(0)
            edges.append((nodes[leaf], nodes[s]))
            degree[s] -= 1
            degree[leaf] -= 1
            if degree[s] == 1:
                # insert keeping sorted order
                lo = 0
                while lo < len(leaves) and leaves[lo] < s:
                    lo += 1
                leaves.insert(lo, s)
        u, v = [i for i in range(k) if degree[i] == 1]
        edges.append((nodes[u], nodes[v]))
        yield edges


def exhaustive_min_cwidth(open_structure: OpenStructure, keys: KeySet) -> Fraction:
    """Minimum width over all tree decompositions, enumerated exhaustively.

    Sound because any decomposition reduces, without raising the width of a
    monotone bag measure, to one with at most |universe| pairwise-distinct
    bags, none contained in a neighbor; those are all enumerated here.
    """
    from spjopt import hypergraph_of

    h = hypergraph_of(open_structure)
    verts = sorted(h.vertices)
    n = len(verts)
    if n == 0:
        return Fraction(0)
    f_memo = {}

    def f(bag):
        if bag not in f_memo:
            f_memo[bag] = color_number(open_structure.structure, keys, bag)[0]
        return f_memo[bag]

    subsets = []
    for r in range(1, n + 1):
        subsets.extend(frozenset(c) for c in itertools.combinations(verts, r))
    best = None
    for k in range(1, n + 1):
        for bags in itertools.combinations(subsets, k):
            width = max(f(b) for b in bags)
            if best is not None and width >= best:
                continue
            chi = dict(enumerate(bags))
            for edges in _trees_on(list(range(k))):
                if check_tree_decomposition(h, edges, chi):
                    best = width
                    break
    assert best is not None, "no decomposition found (single full bag is always valid)"
    return best


# ---------------------------------------------------------------------------
# Valid colorings, literally
# ---------------------------------------------------------------------------


def coloring_is_valid(structure: Structure, keys: KeySet, col) -> bool:
    """The two defining conditions of a valid coloring, checked verbatim on
    per-element color sets."""
    for name in structure.signature.symbols():
        for pos in keys.for_relation(name):
            idx = [p - 1 for p in pos]
            for row in structure.relations[name]:
                key_colors = set().union(*(col.get(row[i], set()) for i in idx))
                for i in range(len(row)):
                    if i not in idx and not set(col.get(row[i], set())) <= key_colors:
                        return False
    return any(col.get(e) for e in structure.universe)


def coloring_ratio(structure: Structure, col) -> Fraction:
    """|colors on target| over max per-tuple colors (target handled by the
    caller by restricting ``col``)."""
    denom = 0
    for _, row in structure.atoms():
        denom = max(denom, len(set().union(*(set(col.get(e, ())) for e in row)) if row else set()))
    if denom == 0:
        return Fraction(0)
    total = len(set().union(*(set(v) for v in col.values())) if col else set())
    return Fraction(total, denom)
