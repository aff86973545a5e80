"""NumPy fallback for the hot kernels (tree growing, per-tree SHAP walk).

This module and `_kernels.pyx` implement the same algorithms with the same
floating-point operation order, so the two backends produce bit-identical
models and attributions. Keep every accumulation sequential (np.cumsum, not
np.sum) and every formula structurally identical to the compiled version.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "pure"

_NEG_INF = float("-inf")


def _seq_sum(a: np.ndarray) -> float:
    """Left-to-right sequential sum (bitwise match for a C accumulation loop)."""
    if a.size == 0:
        return 0.0
    return float(np.cumsum(a)[-1])


def grow_tree(
    x: np.ndarray,  # (n, d) float64, NaN = missing
    miss: np.ndarray,  # (n, d) uint8
    g: np.ndarray,  # (n,) float64 gradients
    h: np.ndarray,  # (n,) float64 hessians
    order: np.ndarray,  # (d, n) int32, rows sorted by feature, NaN last
    nonmiss: np.ndarray,  # (d,) int64 count of non-missing per feature
    max_depth: int,
    lam: float,
    eta: float,
    min_child_cover: float,
):
    """Grow one tree by exact greedy second-order split search.

    Returns the flat node arrays plus the per-training-row leaf value (already
    eta-scaled) for the margin update.
    """
    n, d = x.shape
    node_of_row = np.zeros(n, dtype=np.int32)
    row_values = np.zeros(n, dtype=np.float64)

    feature: list[int] = [-1]
    threshold: list[float] = [math.nan]
    left: list[int] = [-1]
    right: list[int] = [-1]
    missing_left: list[int] = [0]
    value: list[float] = [0.0]
    cover: list[float] = [0.0]

    queue: list[tuple[int, int]] = [(0, 0)]
    while queue:
        nid, depth = queue.pop(0)
        rows = np.nonzero(node_of_row == nid)[0]  # ascending row order
        g_node = _seq_sum(g[rows])
        h_node = _seq_sum(h[rows])
        cover[nid] = float(rows.size)

        best_gain = 0.0
        best = None  # (feature, threshold, missing_left)
        if depth < max_depth and rows.size >= 2:
            for f in range(d):
                ord_f = order[f]
                sel = ord_f[node_of_row[ord_f] == nid]
                present_mask = miss[sel, f] == 0
                pres = sel[present_mask]
                missing_rows = sel[~present_mask]
                m = int(pres.size)
                if m < 2:
                    continue
                gm = _seq_sum(g[missing_rows])
                hm = _seq_sum(h[missing_rows])
                cm = float(missing_rows.size)

                gp = g[pres]
                hp = h[pres]
                vals = x[pres, f]
                cg = np.cumsum(gp)
                ch = np.cumsum(hp)
                g_tot = float(cg[-1]) + gm
                h_tot = float(ch[-1]) + hm
                den_p = h_tot + lam
                if not den_p > 0.0:
                    continue
                parent_term = g_tot * g_tot / den_p

                vk = vals[:-1]
                vk1 = vals[1:]
                thr = 0.5 * (vk + vk1)
                boundary = (vk != vk1) & (thr > vk) & (thr <= vk1)
                if not boundary.any():
                    continue

                acc_g = cg[:-1]
                acc_h = ch[:-1]
                cnt = np.arange(1, m, dtype=np.float64)

                with np.errstate(divide="ignore", invalid="ignore"):
                    # missing routed right
                    gl_r = acc_g
                    hl_r = acc_h + lam
                    gr_r = g_tot - acc_g
                    hr_r = (h_tot - acc_h) + lam
                    cov_l_r = cnt
                    cov_r_r = (m - cnt) + cm
                    gain_r = 0.5 * (gl_r * gl_r / hl_r + gr_r * gr_r / hr_r - parent_term)
                    ok_r = (
                        boundary
                        & (hl_r > 0.0)
                        & (hr_r > 0.0)
                        & (cov_l_r >= min_child_cover)
                        & (cov_r_r >= min_child_cover)
                    )
                    gain_r = np.where(ok_r, gain_r, _NEG_INF)

                    # missing routed left
                    gl_l = acc_g + gm
                    hl_l = (acc_h + hm) + lam
                    gr_l = g_tot - gl_l
                    hr_l = (h_tot - (acc_h + hm)) + lam
                    cov_l_l = cnt + cm
                    cov_r_l = m - cnt
                    gain_l = 0.5 * (gl_l * gl_l / hl_l + gr_l * gr_l / hr_l - parent_term)
                    ok_l = (
                        boundary
                        & (hl_l > 0.0)
                        & (hr_l > 0.0)
                        & (cov_l_l >= min_child_cover)
                        & (cov_r_l >= min_child_cover)
                    )
                    gain_l = np.where(ok_l, gain_l, _NEG_INF)

                go_left = gain_l >= gain_r
                cand = np.where(go_left, gain_l, gain_r)
                k = int(np.argmax(cand))  # first maximum = lowest threshold
                if cand[k] > best_gain:
                    best_gain = float(cand[k])
                    best = (f, float(thr[k]), bool(go_left[k]))

        if best is None:
            value[nid] = -eta * g_node / (h_node + lam)
            row_values[rows] = value[nid]
            continue

        bf, bthr, bmiss_left = best
        left_id = len(feature)
        right_id = left_id + 1
        feature[nid] = bf
        threshold[nid] = bthr
        left[nid] = left_id
        right[nid] = right_id
        missing_left[nid] = 1 if bmiss_left else 0
        for _ in range(2):
            feature.append(-1)
            threshold.append(math.nan)
            left.append(-1)
            right.append(-1)
            missing_left.append(0)
            value.append(0.0)
            cover.append(0.0)

        col = x[rows, bf]
        row_miss = miss[rows, bf] == 1
        goes_left = np.where(row_miss, bmiss_left, col < bthr)
        node_of_row[rows[goes_left]] = left_id
        node_of_row[rows[~goes_left]] = right_id
        queue.append((left_id, depth + 1))
        queue.append((right_id, depth + 1))

    return (
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(missing_left, dtype=np.uint8),
        np.array(value, dtype=np.float64),
        np.array(cover, dtype=np.float64),
        row_values,
    )


def tree_shap(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    missing_left: np.ndarray,
    value: np.ndarray,
    cover: np.ndarray,
    x: np.ndarray,  # (d,) float64 with NaN = missing
    phi: np.ndarray,  # (d,) float64, accumulated in place
) -> None:
    """Per-tree Shapley contributions via the weighted path-fraction recursion.

    Maintains, for each feature on the current path, the fraction of subsets
    flowing through when the feature is excluded (z) or included (o), plus the
    permutation-weight bookkeeping w; leaves deposit the unwound weights into
    phi. Cover ratios supply the excluded-feature branch weighting.
    """

    def extend(path: list[list[float]], pz: float, po: float, pi: int) -> None:
        l = len(path)
        path.append([float(pi), pz, po, 1.0 if l == 0 else 0.0])
        for i in range(l - 1, -1, -1):
            path[i + 1][3] += po * path[i][3] * (i + 1) / (l + 1)
            path[i][3] = pz * path[i][3] * (l - i) / (l + 1)

    def unwind(path: list[list[float]], i: int) -> list[list[float]]:
        l = len(path) - 1
        z = path[i][1]
        o = path[i][2]
        out = [row[:] for row in path]
        nxt = out[l][3]
        for j in range(l - 1, i - 1, -1):
            if o != 0.0:
                tmp = out[j][3]
                out[j][3] = nxt * (l + 1) / ((j + 1) * o)
                nxt = tmp - out[j][3] * z * (l - j) / (l + 1)
            else:
                out[j][3] = out[j][3] * (l + 1) / (z * (l - j))
        for j in range(i, l):
            out[j][0] = out[j + 1][0]
            out[j][1] = out[j + 1][1]
            out[j][2] = out[j + 1][2]
        out.pop()
        return out

    def unwound_sum(path: list[list[float]], i: int) -> float:
        total = 0.0
        for row in unwind(path, i):
            total += row[3]
        return total

    def recurse(node: int, path: list[list[float]], pz: float, po: float, pi: int) -> None:
        path = [row[:] for row in path]
        extend(path, pz, po, pi)
        if left[node] < 0:
            leaf = value[node]
            for i in range(1, len(path)):
                w = unwound_sum(path, i)
                phi[int(path[i][0])] += w * (path[i][2] - path[i][1]) * leaf
            return
        f = int(feature[node])
        v = x[f]
        if math.isnan(v):
            hot = left[node] if missing_left[node] else right[node]
        elif v < threshold[node]:
            hot = left[node]
        else:
            hot = right[node]
        cold = right[node] if hot == left[node] else left[node]
        iz = 1.0
        io = 1.0
        for i in range(1, len(path)):
            if int(path[i][0]) == f:
                iz = path[i][1]
                io = path[i][2]
                path = unwind(path, i)
                break
        recurse(int(hot), path, iz * cover[hot] / cover[node], io, f)
        recurse(int(cold), path, iz * cover[cold] / cover[node], 0.0, f)

    recurse(0, [], 1.0, 1.0, -1)
