"""Alias-map construction for the duplicate-grouping correction loops.

The dedup model proposes name groupings; this module enforces the contract
the rest of the pipeline relies on: the map covers exactly the observed raw
names, each name maps to exactly one canonical representative, and the
representative choice is deterministic (longest name, ties broken
lexicographically).
"""

from __future__ import annotations

from dataclasses import dataclass, field

ALIAS_KINDS = ("character", "location", "group")


@dataclass
class AliasMap:
    kind: str
    entries: dict[str, str] = field(default_factory=dict)
    repairs: list[str] = field(default_factory=list)

    def resolve(self, raw_name: str) -> str:
        return self.entries[raw_name]

    def canonical_names(self) -> list[str]:
        seen: list[str] = []
        for canonical in self.entries.values():
            if canonical not in seen:
                seen.append(canonical)
        return seen

    def merges(self) -> list[tuple[str, str]]:
        """(raw, canonical) pairs where the raw name was folded into another."""
        return [(raw, canon) for raw, canon in self.entries.items() if raw != canon]


def canonical_name(group: list[str]) -> str:
    """Representative for a group: longest member, lexicographically first on ties."""
    return sorted(group, key=lambda name: (-len(name), name))[0]


def build_alias_map(kind: str, raw_names: list[str], proposed_groups: list[list[str]]) -> AliasMap:
    """Turn a proposed grouping into a total, injective alias map.

    Enforcement, in order: names the model invented are discarded; a name
    placed in several groups stays with its first occurrence; names the model
    omitted become singleton groups. All repairs are recorded.
    """
    if kind not in ALIAS_KINDS:
        raise ValueError(f"unknown alias kind {kind!r}")
    known = dict.fromkeys(raw_names)  # insertion-ordered set
    amap = AliasMap(kind=kind)

    placed: set[str] = set()
    groups: list[list[str]] = []
    for proposal in proposed_groups:
        members: list[str] = []
        for name in proposal:
            if name not in known:
                amap.repairs.append(f"discarded invented name {name!r}")
                continue
            if name in placed:
                amap.repairs.append(f"kept first grouping of duplicated name {name!r}")
                continue
            placed.add(name)
            members.append(name)
        if members:
            groups.append(members)

    for name in known:
        if name not in placed:
            amap.repairs.append(f"omitted name {name!r} kept as singleton")
            groups.append([name])

    for group in groups:
        canon = canonical_name(group)
        for name in group:
            amap.entries[name] = canon
    return amap


def identity_alias_map(kind: str, raw_names: list[str], reason: str) -> AliasMap:
    """Fallback map (every name canonical) used when the dedup call fails."""
    amap = AliasMap(kind=kind, entries={n: n for n in dict.fromkeys(raw_names)})
    amap.repairs.append(f"identity fallback: {reason}")
    return amap
