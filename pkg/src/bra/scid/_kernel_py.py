"""Backtracking search for role assignments, on bitmask-encoded circuits.

Circuits are numbered ``0..m-1`` in id order and sets of circuits are
integers used as bitmasks. This module is the reference kernel; the
compiled ``_kernel`` extension implements the same function for m <= 64.
"""

from __future__ import annotations


def path_exists(a: int, b: int, max_len: int, last_mask: int, used: int, adj: list[int]) -> bool:
    """Is there a walk a -> ... -> b of at most ``max_len`` hops?

    Intermediate circuits must avoid ``used`` and both endpoints; the final
    hop must start from a circuit in ``last_mask``. A walk that repeats an
    intermediate circuit shortens to a simple path with the same last hop,
    so walks and simple paths are interchangeable here.
    """
    allowed = ~(used | (1 << a) | (1 << b))
    frontier = 1 << a
    for hop in range(max_len):
        f = frontier & last_mask
        while f:
            low = f & -f
            if (adj[low.bit_length() - 1] >> b) & 1:
                return True
            f ^= low
        if hop == max_len - 1:
            break
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= adj[low.bit_length() - 1]
            f ^= low
        frontier = nxt & allowed
        if not frontier:
            return False
    return False


def enumerate_assignments(
    role_masks: list[int],
    edges: list[tuple[int, int, int, int]],
    adj: list[int],
    m: int,
    injective: bool = True,
    limit: int | None = None,
) -> tuple[list[tuple[int, ...]], bool]:
    """All assignments role -> circuit in lexicographic order.

    ``edges`` holds ``(source role, target role, max_len, last_mask)``.
    Returns ``(assignments, truncated)``; at most ``limit`` assignments are
    returned and ``truncated`` says whether more exist.
    """
    n = len(role_masks)
    if n == 0:
        return [()], False
    by_depth: list[list[tuple[int, int, int, int]]] = [[] for _ in range(n)]
    for e in edges:
        by_depth[max(e[0], e[1])].append(e)
    recheck = any(e[2] > 1 for e in edges)

    out: list[tuple[int, ...]] = []
    assign = [0] * n
    used_stack = [0] * (n + 1)

    def candidates(depth: int) -> list[int]:
        mask = role_masks[depth]
        if injective:
            mask &= ~used_stack[depth]
        res = []
        while mask:
            low = mask & -mask
            res.append(low.bit_length() - 1)
            mask ^= low
        return res

    stack = [iter(candidates(0))]
    while stack:
        depth = len(stack) - 1
        c = next(stack[-1], None)
        if c is None:
            stack.pop()
            continue
        assign[depth] = c
        used = used_stack[depth] | (1 << c)
        if not all(path_exists(assign[s], assign[t], L, lm, used, adj) for s, t, L, lm in by_depth[depth]):
            continue
        if depth + 1 < n:
            used_stack[depth + 1] = used
            stack.append(iter(candidates(depth + 1)))
            continue
        if recheck and not all(path_exists(assign[s], assign[t], L, lm, used, adj) for s, t, L, lm in edges):
            continue
        if limit is not None and len(out) >= limit:
            return out, True
        out.append(tuple(assign))
    return out, False
