"""Build the planted noiseless test model artifacts for the UI test suite."""

import sys

import numpy as np

from semcam import models, space


def main(out_dir: str) -> None:
    rng = np.random.default_rng(0)
    n = 300
    X = np.column_stack([
        rng.uniform(2, 30, n),
        rng.uniform(-1, 1, n),
        rng.uniform(-180, 180, n),
        rng.uniform(-30, 30, n),
        rng.uniform(5, 85, n),
        rng.uniform(-1, 1, n),
    ])
    one_hot = np.zeros((n, 5))
    one_hot[np.arange(n), rng.integers(0, 5, n)] = 1.0
    F = np.hstack([X, one_hot])
    W = rng.normal(scale=0.3, size=(7, 11))
    W[4, 0] = 0.5
    W[:, 6:] = 0.0  # noiseless round trips: type carries no information
    D = F @ W.T
    meta = {"descriptors": list(space.DESCRIPTORS_7)}
    d2p = models.lasso_fit(D, F, lam=1e-7, direction="D2P",
                           max_iter=50_000, metadata=meta)
    p2d = models.lasso_fit(F, D, lam=1e-7, direction="P2D",
                           max_iter=50_000, metadata=meta)
    prior = models.fit_gaussian_prior(D)
    models.save_model(d2p, f"{out_dir}/model_d2p.json", prior=prior)
    models.save_model(p2d, f"{out_dir}/model_p2d.json", prior=prior)


if __name__ == "__main__":
    main(sys.argv[1])
