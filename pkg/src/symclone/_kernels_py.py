"""Pure numpy implementation of the shot-sampling kernel.

Semantics shared with the compiled ``_kernels`` extension: a cumulative
table ``cdf`` of length K picks index ``#{cdf[:K-1] <= u}``.
"""

import numpy as np


def sample_masks(outcome_cdf, n_phi, n_perp, phi_cdf, perp_cdf, uniforms):
    """Histogram of detector click masks over a block of shots.

    Parameters
    ----------
    outcome_cdf : float64[K]
        Cumulative probabilities of the photon-number outcomes, last entry 1.
    n_phi, n_perp : int64[K]
        Photons on the phi and phi-perp arms for each outcome.
    phi_cdf : float64[4]
        Cumulative routing of one phi photon to D1, D2, D3, lost.
    perp_cdf : float64[3]
        Cumulative routing of one perp photon to D1*, D2*, lost.
    uniforms : float64[shots, 1 + max_photons]
        Column 0 picks the outcome, column ``1 + j`` routes photon ``j``.

    Returns
    -------
    int64[32]
        Counts per click mask (bits D1, D2, D3, D1*, D2* from the low end).
    """
    u = np.asarray(uniforms)
    outcome = np.searchsorted(outcome_cdf[:-1], u[:, 0], side="right")
    a = np.asarray(n_phi)[outcome]
    b = np.asarray(n_perp)[outcome]
    mask = np.zeros(len(u), dtype=np.int64)
    for j in range(u.shape[1] - 1):
        col = u[:, 1 + j]
        det_phi = np.searchsorted(phi_cdf[:-1], col, side="right")
        det_perp = np.searchsorted(perp_cdf[:-1], col, side="right")
        bit_phi = np.where(det_phi < 3, 1 << det_phi, 0)
        bit_perp = np.where(det_perp < 2, 1 << (3 + det_perp), 0)
        mask |= np.where(j < a, bit_phi, np.where(j < a + b, bit_perp, 0))
    return np.bincount(mask, minlength=32).astype(np.int64)
