#!/usr/bin/env python3
"""Reference Random-sampling run on two overlapping Gaussians, written with
scikit-learn independently of the C++ engine. Writes the AUBC band used by
tests/test_core_loop.cpp.

    python3 tools/reference_random_band.py > tests/fixtures/random_band.json
"""
import json
import warnings

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.neural_network import MLPClassifier
from sklearn.preprocessing import StandardScaler

N_PER_CLASS = 1500
TEST_FRACTION = 1.0 / 3.0
M_INIT, B, Q = 20, 20, 400
HIDDEN, EPOCHS, LR, BATCH = 32, 30, 1e-3, 64
SEEDS = range(10)


def make_task(rng):
    x = np.concatenate([rng.normal([-1.0, 0.0], 1.0, (N_PER_CLASS, 2)),
                        rng.normal([1.0, 0.0], 1.0, (N_PER_CLASS, 2))])
    y = np.repeat([0, 1], N_PER_CLASS)
    test = np.concatenate([rng.choice(np.flatnonzero(y == c), round(TEST_FRACTION * N_PER_CLASS), replace=False)
                           for c in (0, 1)])
    train = np.setdiff1d(np.arange(len(y)), test)
    return x[train], y[train], x[test], y[test]


def fit_score(x, y, xt, yt, seed):
    scaler = StandardScaler().fit(x)
    model = MLPClassifier(hidden_layer_sizes=(HIDDEN,), solver="adam", learning_rate_init=LR,
                          batch_size=min(BATCH, len(y)), max_iter=EPOCHS, alpha=0.0,
                          shuffle=True, random_state=seed, n_iter_no_change=EPOCHS + 1, tol=0.0)
    model.fit(scaler.transform(x), y)
    return float((model.predict(scaler.transform(xt)) == yt).mean())


def trial(seed):
    rng = np.random.default_rng(seed)
    x, y, xt, yt = make_task(rng)
    order = rng.permutation(len(y))
    labeled, unlabeled = list(order[:M_INIT]), list(order[M_INIT:])
    counts, accs = [], []
    round_no = 0
    while True:
        counts.append(len(labeled))
        accs.append(fit_score(x[labeled], y[labeled], xt, yt, seed * 1000 + round_no))
        spent = len(labeled) - M_INIT
        if spent >= Q:
            break
        take = min(B, Q - spent)
        picked = rng.choice(len(unlabeled), take, replace=False)
        labeled += [unlabeled[i] for i in picked]
        unlabeled = [u for i, u in enumerate(unlabeled) if i not in set(picked)]
        round_no += 1
    counts, accs = np.array(counts, float), np.array(accs)
    return float(np.sum(np.diff(counts) * (accs[1:] + accs[:-1]) / 2) / (counts[-1] - counts[0]))


def main():
    warnings.simplefilter("ignore", ConvergenceWarning)
    aubcs = [trial(s) for s in SEEDS]
    mean, sd = float(np.mean(aubcs)), float(np.std(aubcs, ddof=1))
    # Two independent 10-seed means differ by about sqrt(2) * sd / sqrt(10); allow three of those.
    half_width = 3.0 * np.sqrt(2.0) * sd / np.sqrt(len(aubcs))
    print(json.dumps({"task": "gaussians (-1,0),(1,0) std 1, 1500 per class, test 1/3",
                      "m_init": M_INIT, "b": B, "Q": Q, "hidden": HIDDEN, "epochs": EPOCHS,
                      "learning_rate": LR, "batch_size": BATCH, "aubc": aubcs, "mean": mean, "sd": sd,
                      "low": mean - half_width, "high": mean + half_width}, indent=2))


if __name__ == "__main__":
    main()
