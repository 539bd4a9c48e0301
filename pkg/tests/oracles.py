"""Independent reference computations shared by unit and acceptance tests."""
import math

import numpy as np


def eer_sweep_oracle(scores, labels):
    """Exhaustive threshold sweep with comparison matrices and linear interpolation at the crossing."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    bona, spoof = scores[labels == 0], scores[labels == 1]
    ts = sorted(set(scores.tolist()))
    ts.append(math.nextafter(ts[-1], math.inf))
    ts = np.array(ts)
    far = (spoof[None, :] >= ts[:, None]).mean(axis=1)
    frr = (bona[None, :] < ts[:, None]).mean(axis=1)
    for i in range(len(ts)):
        d = far[i] - frr[i]
        if d == 0:
            return far[i]
        if d < 0:
            if i == 0:
                return far[0]
            d0 = far[i - 1] - frr[i - 1]
            w = d0 / (d0 - d)
            return 0.5 * ((far[i - 1] + w * (far[i] - far[i - 1])) + (frr[i - 1] + w * (frr[i] - frr[i - 1])))
    raise AssertionError("sweep never crossed")


def auc_pairwise_oracle(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    bona, spoof = scores[labels == 0], scores[labels == 1]
    wins = (bona[:, None] > spoof[None, :]).sum() + 0.5 * (bona[:, None] == spoof[None, :]).sum()
    return wins / (bona.size * spoof.size)


def random_scoreset(rng: np.random.Generator):
    """Random scores and labels with both classes present; some sets carry ties."""
    n = int(rng.integers(2, 501))
    labels = rng.permutation(np.r_[0, 1, rng.integers(0, 2, n - 2)])
    if rng.random() < 0.3:
        scores = rng.integers(0, 10, n) / 10.0
    else:
        scores = rng.random(n) + 0.3 * (labels == 0) * rng.random()
    return scores, labels


def gaussian_entropy(log_sigma):
    """Differential entropy of N(mu, diag(exp(2 log_sigma))) per row, from the determinant form."""
    log_sigma = np.asarray(log_sigma, dtype=np.float64)
    k = log_sigma.shape[-1]
    log_det = np.sum(2.0 * log_sigma, axis=-1)
    return 0.5 * (k * math.log(2 * math.pi * math.e) + log_det)
