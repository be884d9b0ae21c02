"""Pure-NumPy kernel for the aggregated wedge-angle matrix.

Loops over the anchor index r, handling each r as one vectorized n x n
angle computation, so memory stays O(n^2) while work is O(n^3 p). Norms
come from explicit coordinate differences (not the Gram shortcut) so exact
ties land deterministically inside the tie tolerance.
"""

import numpy as np


def angle_sums_packed(xprime: np.ndarray, tol: float) -> np.ndarray:
    """Accumulate sum_r of wedge angles into a BLAS-packed upper triangle.

    Entry (i, j) with i <= j lives at i + j(j+1)/2. The wedge angle for the
    triple (i, j, r) follows the tie table: 2*pi when both difference
    vectors vanish, pi when exactly one vanishes or both are equal and
    nonzero, else |pi - arccos(cos)| on the clamped cosine.
    """
    xprime = np.ascontiguousarray(xprime, dtype=float)
    n = xprime.shape[0]
    full = np.zeros((n, n))
    # pairwise tie mask: ||x_i - x_j|| <= tol, from explicit differences
    pair_dist = np.sqrt(
        np.einsum("ijk,ijk->ij", xprime[:, None, :] - xprime[None, :, :],
                  xprime[:, None, :] - xprime[None, :, :])
    )
    pair_tied = pair_dist <= tol
    for r in range(n):
        diffs = xprime - xprime[r]
        norms = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        zero = norms <= tol
        dots = diffs @ diffs.T
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = dots / np.outer(norms, norms)
            np.clip(cos, -1.0, 1.0, out=cos)
            ang = np.abs(np.pi - np.arccos(cos))
        ang[pair_tied] = np.pi         # equal nonzero differences
        ang[np.logical_xor(zero[:, None], zero[None, :])] = np.pi
        ang[np.outer(zero, zero)] = 2.0 * np.pi
        full += ang
    iu, ju = np.triu_indices(n)
    packed = np.zeros(n * (n + 1) // 2)
    packed[iu + (ju * (ju + 1)) // 2] = full[iu, ju]
    return packed
