"""Linear one-vs-rest baselines probing spatial vs temporal information.

Feature variants: raw flattened frames (spatio-temporal), per-taxel temporal
means ("time collapsed", destroys order), per-channel event counts, and
flattened binned event tensors. A PCA helper supports the incremental-frames
accuracy curve; classification uses hinge-loss gradient descent with an L2
penalty, evaluated by stratified cross-validation.
"""

from dataclasses import dataclass

import numpy as np

from .codec import BinningConfig, EncoderConfig, bin_events, encode


def time_collapse(seq):
    """Per-taxel temporal mean: one time-independent value per channel."""
    return seq.taxel_values.astype(np.float64).mean(axis=1)


def event_count_features(stream):
    """ON+OFF event counts per channel (2*n_taxels spatial predictors)."""
    counts = np.zeros(stream.n_channels, dtype=np.float64)
    if len(stream):
        np.add.at(counts, stream.channels, 1.0)
    return counts


def feature_matrix(dataset, mode, threshold=1.0, time_bin_size_ms=5.0):
    """Build (X, labels) for one feature variant.

    Modes: ``raw`` (flattened frames), ``collapsed`` (per-taxel means),
    ``events`` (per-channel event counts), ``event_bins`` (flattened binned
    event tensor).
    """
    labels = dataset.labels
    if mode == "raw":
        X = np.stack([s.taxel_values.astype(np.float64).ravel() for s in dataset.samples])
    elif mode == "collapsed":
        X = np.stack([time_collapse(s) for s in dataset.samples])
    elif mode in ("events", "event_bins"):
        cfg = EncoderConfig(threshold=threshold)
        streams = [encode(s, cfg) for s in dataset.samples]
        if mode == "events":
            X = np.stack([event_count_features(st) for st in streams])
        else:
            bcfg = BinningConfig(time_bin_size_ms=time_bin_size_ms)
            X = np.stack(
                [bin_events(st, bcfg).bits.astype(np.float64).ravel() for st in streams]
            )
    else:
        raise ValueError(f"unknown feature mode {mode!r}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    return X, labels


@dataclass
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray  # [k, n_features]
    explained_variance: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]


def pca_fit(X, k):
    """Principal axes of the centered data, strongest first.

    Components are eigenvectors of the covariance matrix ordered by
    descending eigenvalue; each is sign-fixed so its largest-magnitude
    coordinate is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if k > min(n - 1, d):
        raise ValueError(f"k={k} exceeds min(n_samples-1, n_features)={min(n - 1, d)}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:k]
    components = eigvecs[:, order].T
    eigvals = eigvals[order]
    for i in range(k):
        pivot = np.argmax(np.abs(components[i]))
        if components[i, pivot] < 0:
            components[i] = -components[i]
    return PcaBasis(mean=mean, components=components, explained_variance=eigvals)


def pca_transform(X, basis):
    return (np.asarray(X, dtype=np.float64) - basis.mean) @ basis.components.T


@dataclass
class LinearModel:
    weights: np.ndarray  # [n_classes, n_features]
    biases: np.ndarray
    feat_mean: np.ndarray
    feat_std: np.ndarray


def _standardize_stats(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


def linear_fit(X, labels, epochs=150, lr=0.5, l2=1e-4):
    """One-vs-rest linear classifiers via full-batch hinge-loss descent.

    Features are standardized (zero mean, unit variance) before fitting;
    each class head minimizes mean hinge loss against the rest plus an L2
    penalty. Deterministic: weights start at zero.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    mean, std = _standardize_stats(X)
    Z = (X - mean) / std
    n, d = Z.shape
    weights = np.zeros((len(classes), d))
    biases = np.zeros(len(classes))
    for head, c in enumerate(classes):
        y = np.where(labels == c, 1.0, -1.0)
        w = np.zeros(d)
        b = 0.0
        for _ in range(epochs):
            margin = y * (Z @ w + b)
            active = margin < 1.0
            grad_w = -(Z[active].T @ y[active]) / n + 2.0 * l2 * w
            grad_b = -y[active].sum() / n
            w -= lr * grad_w
            b -= lr * grad_b
        weights[head] = w
        biases[head] = b
    return LinearModel(weights=weights, biases=biases, feat_mean=mean, feat_std=std)


def linear_predict(model, X):
    """Class with the largest one-vs-rest margin."""
    Z = (np.asarray(X, dtype=np.float64) - model.feat_mean) / model.feat_std
    return np.argmax(Z @ model.weights.T + model.biases, axis=1)


def stratified_folds(labels, n_folds, seed):
    """Seeded per-class round-robin assignment into n_folds groups."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(n_folds)]
    for c in np.unique(labels):
        idx = rng.permutation(np.where(labels == c)[0])
        for i, sample in enumerate(idx):
            folds[i % n_folds].append(sample)
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass
class CvResult:
    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: list


def cross_validate(X, labels, n_folds=5, seed=0, pca_components=None, **fit_kwargs):
    """Stratified k-fold accuracy of the linear model, mean +/- std.

    With ``pca_components`` set, PCA is fit on each fold's training split and
    applied to both splits before classification.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    folds = stratified_folds(labels, n_folds, seed)
    scores = []
    for i in range(n_folds):
        test_idx = folds[i]
        train_idx = np.sort(np.concatenate([folds[j] for j in range(n_folds) if j != i]))
        X_train, X_test = X[train_idx], X[test_idx]
        if pca_components is not None:
            basis = pca_fit(X_train, pca_components)
            X_train = pca_transform(X_train, basis)
            X_test = pca_transform(X_test, basis)
        model = linear_fit(X_train, labels[train_idx], **fit_kwargs)
        pred = linear_predict(model, X_test)
        scores.append(float((pred == labels[test_idx]).mean()))
    scores = np.array(scores)
    return CvResult(
        mean_accuracy=float(scores.mean()),
        std_accuracy=float(scores.std()),
        fold_accuracies=[float(s) for s in scores],
    )


def incremental_frames_curve(dataset, k=12, n_folds=5, seed=0, frame_step=1, **fit_kwargs):
    """Accuracy as a function of how much of the time window is included.

    For each frame-prefix length, flattened prefix features are reduced to
    ``k`` principal components (no reduction when k is None) and scored by
    cross-validated linear classification. Returns a list of
    (prefix_time_s, mean_accuracy, std_accuracy) tuples.
    """
    n_frames = dataset.samples[0].n_frames
    rate = dataset.sampling_rate_hz
    labels = dataset.labels
    full = np.stack([s.taxel_values.astype(np.float64) for s in dataset.samples])
    prefixes = list(range(1, n_frames + 1, frame_step))
    if prefixes[-1] != n_frames:
        prefixes.append(n_frames)
    curve = []
    for prefix in prefixes:
        X = full[:, :, :prefix].reshape(len(labels), -1)
        components = k
        if components is not None:
            components = min(components, X.shape[1], len(labels) - 1)
        result = cross_validate(
            X, labels, n_folds=n_folds, seed=seed, pca_components=components, **fit_kwargs
        )
        curve.append((prefix / rate, result.mean_accuracy, result.std_accuracy))
    return curve
