"""Trapezoidal membership functions generated by 1-D fuzzy density clustering.

Every continuous feature gets a family of trapezoids. Breakpoints come from
FN-DBSCAN runs on training samples: each cluster contributes one trapezoid
whose core is the cluster's interquartile range and whose support reaches
toward the neighboring clusters (or the feature's range bounds at the ends).
Integer features bypass fuzzification and ride along as raw values.

The neighborhood kernel is a linear decay, max(0, 1 - dist/eps). A point is
a core point when the sum of kernel memberships over its eps-neighborhood
(itself included) reaches min_density. Non-core points within eps of a core
join that core's cluster; the rest are noise.
"""

import numpy as np

from lcas import kernels


class TrapezoidalMF:
    """Trapezoid with support [a1, a4] and core [a2, a3]."""

    __slots__ = ("a1", "a2", "a3", "a4", "label")

    def __init__(self, a1, a2, a3, a4, label=""):
        if not (a1 <= a2 <= a3 <= a4):
            raise ValueError("breakpoints must satisfy a1 <= a2 <= a3 <= a4")
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.a3 = float(a3)
        self.a4 = float(a4)
        self.label = label

    def membership(self, x):
        """Degree in [0, 1] for scalar or array x."""
        xv = np.asarray(x, dtype=np.float64)
        breaks = np.array([[self.a1, self.a2, self.a3, self.a4]])
        feat = np.zeros(1, dtype=np.int32)
        out = kernels.fuzzify_batch(xv.reshape(-1, 1), feat, breaks)[:, 0]
        if np.isscalar(x) or getattr(x, "ndim", 0) == 0:
            return float(out[0])
        return out.reshape(xv.shape)

    def __repr__(self):
        return "TrapezoidalMF(%r, %r, %r, %r, label=%r)" % (
            self.a1, self.a2, self.a3, self.a4, self.label)


class ClusterResult:
    """FN-DBSCAN output: per-point cluster labels in input order.

    labels[i] is the cluster id (0..n_clusters-1, numbered left to right on
    the value axis) or -1 for noise. core[i] marks core points.
    """

    def __init__(self, samples, labels, core):
        self.samples = samples
        self.labels = labels
        self.core = core
        self.n_clusters = int(labels.max()) + 1 if labels.size else 0

    def clusters(self):
        """Member values per cluster, ascending cluster position."""
        return [self.samples[self.labels == k] for k in range(self.n_clusters)]

    def noise(self):
        return self.samples[self.labels == -1]


def fuzzy_cardinality(samples, eps):
    """Per-point fuzzy neighborhood cardinality, input order.

    card(i) = sum over j of max(0, 1 - |x_i - x_j| / eps), self included.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("need at least one sample")
    if eps <= 0:
        raise ValueError("eps must be positive")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    card_sorted = _cardinality_sorted(xs, eps)
    card = np.empty_like(card_sorted)
    card[order] = card_sorted
    return card


def _cardinality_sorted(xs, eps):
    lo = np.searchsorted(xs, xs - eps, side="left")
    hi = np.searchsorted(xs, xs + eps, side="right")
    card = np.empty(xs.size, dtype=np.float64)
    for i in range(xs.size):
        w = xs[lo[i]:hi[i]]
        card[i] = np.add.reduce(1.0 - np.abs(w - xs[i]) * (1.0 / eps))
    return card


def fn_dbscan(samples, eps, min_density):
    """1-D FN-DBSCAN: fuzzy-cardinality cores, density-reachable clusters.

    Points whose cardinality reaches min_density are cores. Consecutive cores
    closer than eps chain into one cluster; non-core points within eps of a
    core join the nearest core's cluster (ties go left); the rest are noise.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("fn_dbscan needs at least one sample")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_density <= 0:
        raise ValueError("min_density must be positive")
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    core_sorted = _cardinality_sorted(xs, eps) >= min_density

    cluster_sorted = np.full(n, -1, dtype=np.int64)
    core_pos = np.flatnonzero(core_sorted)
    if core_pos.size:
        core_x = xs[core_pos]
        breaks = np.diff(core_x) >= eps
        core_cluster = np.concatenate(([0], np.cumsum(breaks)))
        cluster_sorted[core_pos] = core_cluster

        border_pos = np.flatnonzero(~core_sorted)
        if border_pos.size:
            bx = xs[border_pos]
            right = np.searchsorted(core_x, bx, side="left")
            left = right - 1
            d_left = np.where(left >= 0, bx - core_x[np.clip(left, 0, None)], np.inf)
            d_right = np.where(right < core_x.size,
                               core_x[np.clip(right, None, core_x.size - 1)] - bx,
                               np.inf)
            # nearest core wins; an exact tie goes to the left core
            pick_left = d_left <= d_right
            d_near = np.where(pick_left, d_left, d_right)
            near = np.where(pick_left, np.clip(left, 0, None),
                            np.clip(right, None, core_x.size - 1))
            reach = d_near < eps
            cluster_sorted[border_pos[reach]] = core_cluster[near[reach]]

    labels = np.empty(n, dtype=np.int64)
    labels[order] = cluster_sorted
    core = np.empty(n, dtype=bool)
    core[order] = core_sorted
    return ClusterResult(x, labels, core)


def _mfs_for_feature(samples, lo, hi, eps, min_density, max_samples, name):
    xs = np.sort(np.clip(np.asarray(samples, dtype=np.float64).ravel(), lo, hi))
    if xs.size > max_samples:
        # quantile-strided cap keeps the clustering tractable on long logs
        pick = np.linspace(0, xs.size - 1, max_samples).astype(np.int64)
        xs = xs[pick]
    data_range = float(xs[-1] - xs[0])
    if eps is None:
        base = data_range if data_range > 0.0 else float(hi - lo)
        eps = base / 10.0
    if min_density is None:
        min_density = max(1.0, 0.01 * xs.size)

    # outer supports stretch past the range bounds so membership stays
    # positive at exactly lo and hi (a trapezoid is 0 at its own a1/a4)
    reach = 0.05 * (hi - lo)

    if data_range == 0.0:
        # constant feature: point core, full-range support
        v = float(xs[0])
        return ([TrapezoidalMF(lo - reach, v, v, hi + reach, "%s_0" % name)],
                eps, min_density)

    result = fn_dbscan(xs, eps, min_density)
    clusters = [c for c in result.clusters() if c.size]
    if not clusters:
        clusters = [xs]

    cores = []
    for c in clusters:
        a2 = float(np.percentile(c, 25.0))
        a3 = float(np.percentile(c, 75.0))
        cores.append((a2, a3))
    cores.sort(key=lambda ab: (ab[0] + ab[1], ab[0]))

    k = len(cores)
    a1s = [lo - reach] * k
    a4s = [hi + reach] * k
    for i in range(k - 1):
        a3_i = cores[i][1]
        a2_j = cores[i + 1][0]
        if a2_j > a3_i:
            mid = (a3_i + a2_j) * 0.5
            delta = 0.05 * (a2_j - a3_i)
            a4s[i] = mid + delta
            a1s[i + 1] = mid - delta
        else:
            # cores touch or overlap; supports end where the cores do
            a4s[i] = a3_i
            a1s[i + 1] = a2_j
    mfs = []
    for i, (a2, a3) in enumerate(cores):
        a1 = min(a1s[i], a2)
        a4 = max(a4s[i], a3)
        mfs.append(TrapezoidalMF(a1, a2, a3, a4, "%s_%d" % (name, i)))
    return mfs, eps, min_density


class FuzzyModel:
    """Per-feature trapezoid families plus the frozen fuzzified layout.

    feature_names lists the continuous features in vector order; passthrough
    names the trailing integer features appended unfuzzified. The layout
    (one entry per membership degree, then the passthrough names) is fixed
    at build time so online inference and the forest agree on indexing.
    """

    def __init__(self, feature_names, ranges, mfs, passthrough, params):
        self.feature_names = list(feature_names)
        self.ranges = {k: (float(v[0]), float(v[1])) for k, v in ranges.items()}
        self.mfs = mfs
        self.passthrough = list(passthrough)
        self.params = params
        self._build_tables()

    def _build_tables(self):
        feats = []
        breaks = []
        layout = []
        for j, name in enumerate(self.feature_names):
            for mf in self.mfs[name]:
                feats.append(j)
                breaks.append([mf.a1, mf.a2, mf.a3, mf.a4])
                layout.append(mf.label)
        self._mf_feature = np.asarray(feats, dtype=np.int32)
        self._mf_breaks = np.asarray(breaks, dtype=np.float64)
        self.layout = layout + list(self.passthrough)
        self._clip_lo = np.array([self.ranges[n][0] for n in self.feature_names])
        self._clip_hi = np.array([self.ranges[n][1] for n in self.feature_names])

    @property
    def width(self):
        """Length of a fuzzified vector."""
        return self._mf_feature.size + len(self.passthrough)

    def fuzzify_batch(self, cont, passthrough):
        """Fuzzify rows of continuous values and append passthrough columns.

        cont: (n, len(feature_names)) array; passthrough: (n, len(passthrough)).
        Out-of-range values clip to the feature range first.
        """
        cont = np.asarray(cont, dtype=np.float64)
        if cont.ndim != 2 or cont.shape[1] != len(self.feature_names):
            raise ValueError("expected %d continuous columns" % len(self.feature_names))
        clipped = np.clip(cont, self._clip_lo, self._clip_hi)
        degrees = kernels.fuzzify_batch(clipped, self._mf_feature, self._mf_breaks)
        tail = np.asarray(passthrough, dtype=np.float64).reshape(cont.shape[0], -1)
        if tail.shape[1] != len(self.passthrough):
            raise ValueError("expected %d passthrough columns" % len(self.passthrough))
        return np.hstack([degrees, tail])

    def fuzzify(self, cont_row, passthrough_row):
        return self.fuzzify_batch(
            np.asarray(cont_row, dtype=np.float64).reshape(1, -1),
            np.asarray(passthrough_row, dtype=np.float64).reshape(1, -1))[0]

    def to_dict(self):
        return {
            "feature_names": self.feature_names,
            "ranges": {k: list(v) for k, v in self.ranges.items()},
            "passthrough": self.passthrough,
            "params": self.params,
            "mfs": {
                name: [[mf.a1, mf.a2, mf.a3, mf.a4, mf.label]
                       for mf in self.mfs[name]]
                for name in self.feature_names
            },
        }

    @classmethod
    def from_dict(cls, d):
        mfs = {
            name: [TrapezoidalMF(*row[:4], label=row[4]) for row in rows]
            for name, rows in d["mfs"].items()
        }
        return cls(d["feature_names"], {k: tuple(v) for k, v in d["ranges"].items()},
                   mfs, d["passthrough"], d["params"])


def build_mfs(samples_by_feature, ranges, passthrough=(),
              eps=None, min_density=None, max_samples=4000):
    """Build a FuzzyModel from per-feature training samples.

    samples_by_feature maps feature name to a 1-D sample array; iteration
    order fixes the vector layout. ranges maps name to (lo, hi) bounds. eps
    defaults per feature to a tenth of the observed data range (falling back
    to the bound range for constant data); min_density defaults to 1% of the
    clustered sample count, floored at 1.
    """
    mfs = {}
    used = {}
    for name, samples in samples_by_feature.items():
        lo, hi = ranges[name]
        fam, eps_f, md_f = _mfs_for_feature(
            samples, lo, hi, eps, min_density, max_samples, name)
        mfs[name] = fam
        used[name] = {"eps": eps_f, "min_density": md_f}
    params = {"eps": eps, "min_density": min_density,
              "max_samples": max_samples, "per_feature": used}
    return FuzzyModel(list(samples_by_feature.keys()), ranges, mfs,
                      passthrough, params)
