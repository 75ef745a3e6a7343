"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

K = 4


class Objective:
    """Evaluate the MAP objective over a flat parameter vector."""

    def __init__(self, leaf_idx, f, lam, child, parent, w, centers,
                 beta, alpha, squared=True):
        self.leaf_idx = np.asarray(leaf_idx, dtype=np.int64)
        self.fw = np.asarray(f, dtype=np.float64) + lam
        self.child = np.asarray(child, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.w = np.asarray(w, dtype=np.float64)
        self.centers = np.asarray(centers, dtype=np.float64)
        self.n_params = self.centers.shape[0]
        self.beta = float(beta)
        self.alpha = float(alpha)
        self.squared = bool(squared)

    def _eval(self, th):
        blocks = th.reshape(-1, K)
        leaves = blocks[self.leaf_idx]
        m = leaves.max(axis=1)
        lse = m + np.log(np.exp(leaves - m[:, None]).sum(axis=1))
        total = float(np.sum(lse - (self.fw * leaves).sum(axis=1)))
        if self.beta != 0.0 and len(self.child):
            diff = blocks[self.child] - blocks[self.parent]
            sq = (diff * diff).sum(axis=1)
            if not self.squared:
                sq = np.sqrt(sq)
            total += self.beta * float(self.w @ sq)
        d = th - self.centers
        total += self.alpha * float(d @ d)
        return total

    def __call__(self, theta):
        th = np.asarray(theta, dtype=np.float64)
        if th.shape != (self.n_params,):
            raise ValueError("parameter vector has wrong length")
        return self._eval(th)

    def along(self, x, d, t):
        return self._eval(x + t * d)


def auc_sorted(scores, is_pos, n_pos, n_neg):
    """Mann-Whitney AUC via midranks (equivalent to the tie-group sweep)."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    pos = np.asarray(is_pos, dtype=bool)[order]
    # tie groups
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    p = np.add.reduceat(pos.astype(np.float64), starts)
    sizes = np.diff(np.r_[starts, len(s)])
    q = sizes - p
    neg_below = np.cumsum(q) - q
    u = float(np.sum(p * neg_below + 0.5 * p * q))
    return u / (float(n_pos) * float(n_neg))
