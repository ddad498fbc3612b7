"""Shared test oracles and generators.

Each oracle evaluates its quantity by a route independent of the code
under test: piecewise evaluation walks intervals instead of summing
hinges, longest paths come from exhaustive path enumeration, and the
largest singular value comes from a Jacobi eigenvalue sweep.
"""

import numpy as np

import unrectify as ur


def interval_walk_eval(spec: ur.CpwlSpec, xs):
    """Piecewise oracle: locate the interval, apply slope-intercept.

    Knot values accumulate from a single anchor left of every breakpoint,
    so the evaluation path shares nothing with the per-hinge sum.
    """
    knots = sorted({a for _, a in spec.right} | {t for _, t in spec.left})
    slopes = []  # slope on (-inf, k0), (k0, k1), ..., (k_last, inf)
    slope = -sum(l for l, _ in spec.left)
    slopes.append(slope)
    for k in knots:
        slope += sum(r for r, a in spec.right if a == k)
        slope += sum(l for l, t in spec.left if t == k)
        slopes.append(slope)
    if not knots:
        return np.zeros_like(np.asarray(xs, dtype=float))
    anchor = knots[0] - 1.0
    anchor_val = sum(l * (t - anchor) for l, t in spec.left)
    knot_vals = []
    x_prev, v_prev = anchor, anchor_val
    for i, k in enumerate(knots):
        v_prev = v_prev + slopes[i] * (k - x_prev)
        knot_vals.append(v_prev)
        x_prev = k
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    for idx, x in np.ndenumerate(xs):
        pos = np.searchsorted(knots, x, side="right")
        if pos == 0:
            out[idx] = knot_vals[0] + slopes[0] * (x - knots[0])
        else:
            out[idx] = knot_vals[pos - 1] + slopes[pos] * (x - knots[pos - 1])
    return out


def jacobi_sigma_max(w, sweeps: int = 60, tol: float = 1e-14) -> float:
    """Largest singular value via cyclic Jacobi diagonalization of W^T W."""
    w = np.asarray(w, dtype=np.float64)
    a = w.T @ w
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sum(a * a) - np.sum(np.diag(a) ** 2)
        if off <= tol * max(1.0, np.sum(np.diag(a) ** 2)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
    return float(np.sqrt(max(np.max(np.diag(a)), 0.0)))


def brute_longest_paths(net):
    """Longest input-to-node arc counts by exhaustive path enumeration."""
    best = {net.input_node: 0}

    def walk(node, length):
        for arc in net.out_arcs[node]:
            nxt = length + 1
            if nxt > best.get(arc.dst, -1):
                best[arc.dst] = nxt
            walk(arc.dst, nxt)

    walk(net.input_node, 0)
    return best


def random_cpwl_spec(rng, max_terms: int = 4) -> ur.CpwlSpec:
    n_right = rng.integers(1, max_terms + 1)
    n_left = rng.integers(0, max_terms + 1)
    right = tuple(
        (float(rng.uniform(-2, 2)), float(rng.uniform(-3, 3))) for _ in range(n_right)
    )
    left = tuple(
        (float(rng.uniform(-2, 2)), float(rng.uniform(-3, 3))) for _ in range(n_left)
    )
    return ur.CpwlSpec(right=right, left=left)


def random_net(seed: int, max_nodes: int = 12, input_dim=None, cpwl: bool = False):
    """Random valid network mixing series, branch, and fusion steps.

    All arcs are piecewise-linear (no transforms), so signatures exist at
    every node. Returns the frozen net.
    """
    rng = np.random.default_rng(seed)
    dim = int(input_dim if input_dim is not None else rng.integers(2, 5))
    builder = ur.GraphBuilder("n00", dim)
    frontier = "n00"
    fdim = dim
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"n{counter[0]:02d}"

    def series_op(in_dim):
        out_dim = int(rng.integers(1, 6))
        choice = rng.random()
        w = rng.normal(size=(out_dim, in_dim))
        b = rng.normal(size=out_dim)
        if choice < 0.45:
            return ur.activation_affine(ur.RELU, w, b), out_dim
        if cpwl and choice < 0.7:
            return ur.activation_affine(random_cpwl_spec(rng), w, b), out_dim
        if choice < 0.8:
            pre = 2 * out_dim
            w = rng.normal(size=(pre, in_dim))
            return ur.activation_affine(ur.MAXLU2, w, rng.normal(size=pre)), out_dim
        if choice < 0.92:
            return ur.affine(w, b), out_dim
        return ur.linear(w), out_dim

    while len(builder.nodes) < max_nodes - 4:
        if rng.random() < 0.55 or len(builder.nodes) > max_nodes - 6:
            op, fdim = series_op(fdim)
            nxt = fresh()
            builder.add_arc(frontier, nxt, op)
            frontier = nxt
        else:
            op1, d1 = series_op(fdim)
            op2, d2 = series_op(fdim)
            c1, c2, cat, out = fresh(), fresh(), fresh(), fresh()
            builder.add_arc(frontier, c1, op1)
            builder.add_arc(frontier, c2, op2)
            builder.add_arc(c1, cat, ur.linear(np.eye(d1)), port=0)
            builder.add_arc(c2, cat, ur.linear(np.eye(d2)), port=1)
            fdim = int(rng.integers(1, 6))
            builder.add_arc(cat, out, ur.linear(rng.normal(size=(fdim, d1 + d2))))
            frontier = out
    return builder.freeze()
