"""Independent brute-force oracles the implementation is checked against."""

from __future__ import annotations

import numpy as np

UP = "↑"
DOWN = "↓"


def root_to_leaf_paths(node, prefix=()):
    """Every root-to-leaf node chain of a tree, left to right."""
    chain = prefix + (node,)
    if not node.children:
        yield chain
        return
    for child in node.children:
        yield from root_to_leaf_paths(child, chain)


def brute_force_contexts(body, max_len=None, max_width=None):
    """Enumerate leaf-pair path triplets via root-to-leaf chain prefixes.

    Deliberately a different algorithm from the production extractor:
    computes the lowest common ancestor as the longest common chain prefix.
    """
    chains = list(root_to_leaf_paths(body))
    triplets = []
    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            a, b = chains[i], chains[j]
            k = 0
            while k < len(a) and k < len(b) and a[k] is b[k]:
                k += 1
            lca = a[k - 1]
            up_nodes = list(reversed(a[k:]))  # leaf .. child-of-lca
            down_nodes = list(b[k:])  # child-of-lca .. leaf
            length = len(up_nodes) + len(down_nodes)
            if max_len is not None and length > max_len:
                continue
            width = abs(lca.children.index(a[k]) - lca.children.index(b[k]))
            if max_width is not None and width > max_width:
                continue
            path = up_nodes[0].kind
            for node in up_nodes[1:] + [lca]:
                path += UP + node.kind
            for node in down_nodes:
                path += DOWN + node.kind
            triplets.append((a[-1].token, path, b[-1].token))
    return triplets


def scalar_aggregate(vectors, functions):
    """Column-by-column scalar recomputation of an aggregation output."""
    out = []
    for fn in functions:
        for col in range(len(vectors[0])):
            column = [float(v[col]) for v in vectors]
            if fn == "min":
                out.append(min(column))
            elif fn == "max":
                out.append(max(column))
            elif fn == "sum":
                out.append(float(np.sum(column)))
            elif fn == "mean":
                out.append(float(np.sum(column)) / len(column))
            elif fn == "median":
                ordered = sorted(column)
                n = len(ordered)
                mid = n // 2
                out.append(
                    ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0
                )
            elif fn == "stddev":
                mean = float(np.sum(column)) / len(column)
                out.append(
                    float(np.sqrt(sum((x - mean) ** 2 for x in column) / len(column)))
                )
            else:
                raise ValueError(fn)
    return np.array(out)


def numeric_gradients(params, batch, loss_fn, h=1e-6):
    """Central finite differences of loss_fn over every entry of params."""
    grads = {}
    for key, arr in params.as_dict().items():
        num = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            up = loss_fn(params, batch)
            arr[idx] = orig - h
            down = loss_fn(params, batch)
            arr[idx] = orig
            num[idx] = (up - down) / (2.0 * h)
            it.iternext()
        grads[key] = num
    return grads
