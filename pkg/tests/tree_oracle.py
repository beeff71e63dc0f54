"""Brute-force tree edit distance, independent of the keyroot algorithm.

A set of node pairs is a valid edit mapping iff it is one-to-one and
preserves both preorder and postorder rank between every two pairs. The
oracle enumerates all such mappings and returns the cheapest one under
unit costs.
"""

from __future__ import annotations

import itertools
from functools import lru_cache


class Node:
    __slots__ = ("label", "kids")

    def __init__(self, label, kids=()):
        self.label = label
        self.kids = list(kids)

    def __repr__(self):
        if not self.kids:
            return str(self.label)
        return f"{self.label}({' '.join(map(repr, self.kids))})"


def build(t) -> Node:
    """(label, (child, ...)) tuple to Node."""
    return Node(t[0], [build(c) for c in t[1]])


def as_tuple(n: Node) -> tuple:
    return (n.label, tuple(as_tuple(k) for k in n.kids))


@lru_cache(maxsize=None)
def shapes(n: int) -> tuple:
    """All ordered unlabeled trees with n nodes, as nested tuples of children."""
    if n == 1:
        return ((),)
    out = []
    for forest in forests(n - 1):
        out.append(forest)
    return tuple(out)


@lru_cache(maxsize=None)
def forests(n: int) -> tuple:
    if n == 0:
        return ((),)
    out = []
    for first in range(1, n + 1):
        for head in shapes(first):
            for rest in forests(n - first):
                out.append((head,) + rest)
    return tuple(out)


def _size(shape) -> int:
    return 1 + sum(_size(c) for c in shape)


def labelings(shape, alphabet):
    n = _size(shape)
    for labels in itertools.product(alphabet, repeat=n):
        it = iter(labels)

        def fill(s):
            lab = next(it)
            return (lab, tuple(fill(c) for c in s))

        yield fill(shape)


def all_trees(n: int, alphabet=("a", "b", "c")) -> list[tuple]:
    return [t for s in shapes(n) for t in labelings(s, alphabet)]


def _orders(t: tuple):
    labels, pre, post = [], [], []
    counter = [0, 0]

    def walk(node):
        me = len(labels)
        labels.append(node[0])
        pre.append(counter[0])
        post.append(None)
        counter[0] += 1
        for c in node[1]:
            walk(c)
        post[me] = counter[1]
        counter[1] += 1

    walk(t)
    return labels, pre, post


def brute_force_distance(a: tuple, b: tuple) -> int:
    la, _, posta = _orders(a)
    lb, _, postb = _orders(b)
    na, nb = len(la), len(lb)
    best = na + nb

    # nodes of a in preorder; partners must also increase in preorder
    def search(i: int, last_b: int, pairs: list, relabels: int):
        nonlocal best
        if i == na:
            cost = na + nb - 2 * len(pairs) + relabels
            best = min(best, cost)
            return
        search(i + 1, last_b, pairs, relabels)
        for j in range(last_b + 1, nb):
            if all((posta[i] > posta[u]) == (postb[j] > postb[v]) for u, v in pairs):
                pairs.append((i, j))
                search(i + 1, j, pairs, relabels + (la[i] != lb[j]))
                pairs.pop()

    search(0, -1, [], 0)
    return best
