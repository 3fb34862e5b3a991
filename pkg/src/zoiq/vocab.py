"""Deterministic names for the generated decoration vocabulary.

Names are dot-separated so summaries stay canonically comparable and can be
printed and re-read through the internal parser mode: family tag, automaton
id, optional nominal parameters, then the state pair.  Threshold names encode
the bucket as ``eq<m>`` or ``ge<m>``.
"""

from __future__ import annotations

from dataclasses import dataclass

# concept families
D_FAM = "D"
I_FAM = "I"
RT_FAM = "RT"
IO_FAM = "IO"
OI_FAM = "OI"
IN_FAM = "In"  # paths entering a subtree from a nominal
BY_FAM = "By"
REACH_FAM = "Reach"

# role families (lowercase mirrors of the concept families)
d_FAM = "d"
i_FAM = "i"
rt_FAM = "rt"
io_FAM = "io"
oi_FAM = "oi"
in_FAM = "in"
by_FAM = "by"

SKULL_ROLE_FAMILIES = frozenset({i_FAM, in_FAM})


def concept_name(family: str, auto_id: str, q: int, qp: int, *nominals: str) -> str:
    middle = "".join(f".{o}" for o in nominals)
    return f"#{family}.{auto_id}{middle}.{q}.{qp}"


def role_name(family: str, auto_id: str, q: int, qp: int, *nominals: str) -> str:
    middle = "".join(f".{o}" for o in nominals)
    return f"#{family}.{auto_id}{middle}.{q}.{qp}"


def reach_name(auto_id: str, q: int, qp: int) -> str:
    return concept_name(REACH_FAM, auto_id, q, qp)


@dataclass(frozen=True)
class DecorationName:
    family: str
    auto_id: str
    q: int
    qp: int
    nominals: tuple[str, ...]


def parse_decoration_name(name: str) -> DecorationName:
    if not name.startswith("#"):
        raise ValueError(f"not a generated name: {name!r}")
    parts = name[1:].split(".")
    if len(parts) < 4:
        raise ValueError(f"not a decoration name: {name!r}")
    family, auto_id = parts[0], parts[1]
    q, qp = int(parts[-2]), int(parts[-1])
    return DecorationName(family, auto_id, q, qp, tuple(parts[2:-2]))


# Counting vocabulary ---------------------------------------------------------


def threshold_text(threshold: int | None, n: int) -> str:
    """``=m`` buckets are ``eq<m>``; the overflow bucket is ``ge<n+1>``."""
    if threshold is None:
        return f"ge{n + 1}"
    return f"eq{threshold}"


def clearing_count_name(role: str, n: int, threshold: int | None) -> str:
    return f"#Clrng.{role}.{threshold_text(threshold, n)}"


def child_count_name(role: str, n: int, threshold: int | None) -> str:
    return f"#Chld.{role}.{threshold_text(threshold, n)}"


def descendant_count_name(
    role: str, nominal: str, n: int, threshold: int | None
) -> str:
    return f"#Des.{role}.{nominal}.{threshold_text(threshold, n)}"
