"""Shared oracles for the test suite, kept independent of the library paths."""

import numpy as np

from gaa import autodiff as ad

FD_H = 1e-5
FD_REL_TOL = 1e-4
FD_ABS_FLOOR = 1e-8
FD_ABS_TOL = 1e-7


def fd_check(build_loss, leaves, h=FD_H, rel_tol=FD_REL_TOL):
    """Compare autodiff gradients of ``build_loss(leaves)`` to central differences.

    ``build_loss`` must construct the scalar loss from the given leaf tensors
    alone; it is re-run for every perturbed entry, so it has to be
    deterministic (re-seed any RNG inside).
    """
    for leaf in leaves:
        leaf.zero_grad()
    with ad.Tape() as tape:
        loss = build_loss(leaves)
        ad.backward(loss, tape)
    analytic = [leaf.grad.copy() for leaf in leaves]

    def loss_value():
        with ad.Tape():
            return build_loss(leaves).item()

    for leaf, grad in zip(leaves, analytic):
        flat = leaf.data.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_value()
            flat[idx] = orig - h
            down = loss_value()
            flat[idx] = orig
            numeric = (up - down) / (2 * h)
            a = grad.reshape(-1)[idx]
            if abs(a) < FD_ABS_FLOOR:
                assert abs(numeric - a) < FD_ABS_TOL, (
                    f"abs mismatch at entry {idx}: analytic {a}, numeric {numeric}"
                )
            else:
                rel = abs(numeric - a) / max(abs(a), abs(numeric))
                assert rel <= rel_tol or abs(numeric - a) <= FD_ABS_TOL, (
                    f"rel mismatch at entry {idx}: analytic {a}, numeric {numeric}, rel {rel}"
                )


def loop_cosine_matrix(x):
    """Double-loop cosine similarity with zero-norm rows scoring 0."""
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ni = np.sqrt((x[i] ** 2).sum())
            nj = np.sqrt((x[j] ** 2).sum())
            if ni == 0.0 or nj == 0.0:
                out[i, j] = 0.0
            else:
                out[i, j] = float(x[i] @ x[j] / (ni * nj))
    return out


def loop_knn(sm, k):
    """Per-node top-k by similarity, ties to the lower index, union-symmetrized."""
    n = sm.shape[0]
    adj = np.zeros((n, n))
    for i in range(n):
        others = [j for j in range(n) if j != i]
        others.sort(key=lambda j: (-sm[i, j], j))
        for j in others[:k]:
            adj[i, j] = 1.0
            adj[j, i] = 1.0
    return adj


def loop_knn_selection(sm, k):
    """The pre-symmetrization selection: k chosen neighbors per node."""
    n = sm.shape[0]
    picks = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        others.sort(key=lambda j: (-sm[i, j], j))
        picks.append(others[:k])
    return picks


def loop_pair_bound(adj_s, x_s, adj_t, x_t, divisor):
    """Four-loop pairwise divergence sums, the slow reference."""
    u = adj_s @ x_s
    v = adj_t @ x_t
    topo = 0.0
    attr = 0.0
    for i in range(u.shape[0]):
        for j in range(v.shape[0]):
            topo += float(((u[i] - v[j]) ** 2).sum())
            attr += float(((x_s[i] - x_t[j]) ** 2).sum())
    return topo / divisor, attr / divisor


def loop_margin_loss(scores, labels, gamma):
    n = scores.shape[0]
    hits = 0
    for i in range(n):
        true = scores[i, labels[i]]
        best_other = max(scores[i, c] for c in range(scores.shape[1]) if c != labels[i])
        if true <= gamma + best_other:
            hits += 1
    return hits / n


def loop_source_ce(probs, labels, clamp=1e-12):
    total = 0.0
    for i, y in enumerate(labels):
        total += -np.log(max(probs[i, y], clamp))
    return total / len(labels)


def loop_domain_bce(p_source, p_target, clamp=1e-12):
    total = 0.0
    for p in p_source.reshape(-1):
        total += -np.log(max(p, clamp))
    for p in p_target.reshape(-1):
        total += -np.log(max(1.0 - p, clamp))
    return total / (p_source.size + p_target.size)


def loop_target_entropy(probs, clamp=1e-12):
    total = 0.0
    for row in probs:
        for p in row:
            total += -p * np.log(max(p, clamp))
    return total / probs.shape[0]
