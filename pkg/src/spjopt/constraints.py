"""Key constraints and the chase.

Only unary keys are supported by the optimization pipeline; the chase and the
satisfaction check accept arbitrary key position sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .errors import KeyConstraintError
from .structures import OpenStructure, Signature, Structure


class KeySet:
    """A set of key constraints: (relation name, set of key positions).

    Positions are 1-based, matching the plan syntax.  ``is_unary`` holds when
    every position set is a singleton; the pipeline entry points require it.
    """

    __slots__ = ("_keys",)

    def __init__(self, keys: Iterable[tuple[str, Iterable[int]]] = ()):
        cleaned = set()
        for name, positions in keys:
            pos = frozenset(int(p) for p in positions)
            if not pos:
                raise KeyConstraintError(f"key for {name!r} has no positions")
            if any(p < 1 for p in pos):
                raise KeyConstraintError(f"key positions for {name!r} must be 1-based")
            cleaned.add((name, pos))
        self._keys = frozenset(cleaned)

    @classmethod
    def empty(cls) -> "KeySet":
        return cls(())

    @classmethod
    def unary(cls, mapping: Mapping[str, int]) -> "KeySet":
        """One single-position key per relation, from {name: position}."""
        return cls((name, (pos,)) for name, pos in mapping.items())

    @property
    def keys(self) -> frozenset:
        return self._keys

    @property
    def is_unary(self) -> bool:
        return all(len(pos) == 1 for _, pos in self._keys)

    def one_per_relation(self) -> bool:
        names = [name for name, _ in self._keys]
        return len(names) == len(set(names))

    def for_relation(self, name: str) -> tuple[frozenset, ...]:
        return tuple(sorted((pos for n, pos in self._keys if n == name), key=sorted))

    def validate_for(self, signature: Signature) -> None:
        for name, pos in self._keys:
            if name not in signature:
                raise KeyConstraintError(f"key declared for unknown relation {name!r}")
            ar = signature.arity(name)
            bad = [p for p in pos if p > ar]
            if bad:
                raise KeyConstraintError(
                    f"key position(s) {sorted(bad)} out of range for {name}/{ar}"
                )

    def unary_key_position(self, name: str) -> Optional[int]:
        """The single 1-based key position of ``name`` if it has exactly one
        unary key, else None."""
        found = [pos for n, pos in self._keys if n == name and len(pos) == 1]
        if len(found) == 1:
            return next(iter(found[0]))
        return None

    def __bool__(self) -> bool:
        return bool(self._keys)

    def __eq__(self, other) -> bool:
        return isinstance(other, KeySet) and self._keys == other._keys

    def __hash__(self) -> int:
        return hash(self._keys)

    def __repr__(self) -> str:
        inner = ", ".join(
            f"key({n})={{{','.join(map(str, sorted(p)))}}}" for n, p in sorted(self._keys, key=lambda k: (k[0], sorted(k[1])))
        )
        return f"KeySet({inner})"


def satisfies_keys(data: Structure, keys: KeySet) -> bool:
    """True iff every relation of ``data`` satisfies every applicable key."""
    keys.validate_for(data.signature)
    for name, pos in keys.keys:
        idx = sorted(p - 1 for p in pos)
        seen: dict[tuple, tuple] = {}
        for row in sorted(data.relations[name]):
            k = tuple(row[i] for i in idx)
            if k in seen and seen[k] != row:
                return False
            seen[k] = row
    return True


@dataclass(frozen=True)
class ChaseResult:
    """Chase fixpoint together with the global merge map (original id ->
    representative id, idempotent)."""

    result: Union[OpenStructure, Structure]
    merge_map: Mapping[int, int]

    @property
    def changed(self) -> bool:
        return any(k != v for k, v in self.merge_map.items())


def _find_violation(struct: Structure, keys: KeySet) -> Optional[tuple[int, int]]:
    """First chase step (x -> smaller representative) in deterministic order:
    relations by name, tuples sorted, positions left to right."""
    for name in struct.signature.symbols():
        positions = keys.for_relation(name)
        if not positions:
            continue
        rows = sorted(struct.relations[name])
        for pos in positions:
            idx = sorted(p - 1 for p in pos)
            groups: dict[tuple, tuple] = {}
            for row in rows:
                k = tuple(row[i] for i in idx)
                other = groups.get(k)
                if other is not None and other != row:
                    for i in range(len(row)):
                        if i not in idx and other[i] != row[i]:
                            a, b = other[i], row[i]
                            return (max(a, b), min(a, b))
                else:
                    groups[k] = row
    return None


def chase(value: Union[OpenStructure, Structure], keys: KeySet) -> ChaseResult:
    """Repeated chase steps until fixpoint.

    Merge representatives are the smaller element ids; the scan restarts
    after every merge, so the procedure is deterministic.  The fixpoint is
    unique up to isomorphism regardless of step order.
    """
    is_open = isinstance(value, OpenStructure)
    struct = value.structure if is_open else value
    keys.validate_for(struct.signature)
    merge = {e: e for e in struct.universe}
    current = struct
    while True:
        step = _find_violation(current, keys)
        if step is None:
            break
        src, dst = step
        current = current.apply_map({src: dst})
        for e, rep in merge.items():
            if rep == src:
                merge[e] = dst
    if is_open:
        out_tuple = tuple(merge[e] for e in value.tuple)
        return ChaseResult(OpenStructure(current, out_tuple), merge)
    return ChaseResult(current, merge)


def is_chase_fixpoint(value: Union[OpenStructure, Structure], keys: KeySet) -> bool:
    struct = value.structure if isinstance(value, OpenStructure) else value
    return satisfies_keys(struct, keys)
