#include "mbsc/codebook.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbsc {

int Codebook::bits() const {
    int b = 0;
    while ((1 << b) < vectors.rows) ++b;
    return b;
}

Codebook make_codebook(const Tensor& vectors, double decay, double smoothing_eps) {
    if (vectors.rows <= 0 || (vectors.rows & (vectors.rows - 1)) != 0)
        throw std::invalid_argument("make_codebook: entry count must be a power of two");
    if (vectors.cols <= 0) throw std::invalid_argument("make_codebook: empty code dimension");
    if (!(decay > 0.0 && decay < 1.0))
        throw std::invalid_argument("make_codebook: decay must be in (0,1)");
    if (!(smoothing_eps > 0.0))
        throw std::invalid_argument("make_codebook: smoothing_eps must be positive");
    if (!vectors.finite()) throw std::invalid_argument("make_codebook: non-finite vectors");

    Codebook cb;
    cb.vectors = vectors;
    cb.ema_sums = vectors;
    cb.ema_counts.assign(static_cast<size_t>(vectors.rows), 1.0);
    cb.decay = decay;
    cb.smoothing_eps = smoothing_eps;
    return cb;
}

std::pair<int, double> nearest_row(const Tensor& rows, const double* v, int d) {
    if (d != rows.cols) throw std::invalid_argument("nearest_row: dimension mismatch");
    if (rows.rows == 0) throw std::invalid_argument("nearest_row: empty table");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows.rows; ++i) {
        const double* c = rows.row(i);
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = v[j] - c[j];
            acc += diff * diff;
        }
        if (acc < best_d) {
            best_d = acc;
            best = i;
        }
    }
    return {best, best_d};
}

std::pair<int, double> nearest_code(const Codebook& cb, const double* v, int d) {
    return nearest_row(cb.vectors, v, d);
}

std::pair<int, double> nearest_code(const Codebook& cb, const std::vector<double>& v) {
    return nearest_row(cb.vectors, v.data(), static_cast<int>(v.size()));
}

void ema_update(Codebook& cb, const std::vector<int>& indices, const Tensor& points) {
    const int K = cb.entries();
    const int d = cb.dim();
    if (points.rows != static_cast<int>(indices.size()))
        throw std::invalid_argument("ema_update: index/point count mismatch");
    if (points.rows > 0 && points.cols != d)
        throw std::invalid_argument("ema_update: dimension mismatch");
    for (int i : indices)
        if (i < 0 || i >= K) throw std::invalid_argument("ema_update: index out of range");

    std::vector<double> hit_counts(static_cast<size_t>(K), 0.0);
    Tensor hit_sums(K, d);
    for (size_t j = 0; j < indices.size(); ++j) {
        const int i = indices[j];
        hit_counts[i] += 1.0;
        const double* p = points.row(static_cast<int>(j));
        double* s = hit_sums.row(i);
        for (int c = 0; c < d; ++c) s[c] += p[c];
    }

    const double decay = cb.decay;
    for (int i = 0; i < K; ++i) {
        cb.ema_counts[i] = decay * cb.ema_counts[i] + (1.0 - decay) * hit_counts[i];
        double* s = cb.ema_sums.row(i);
        const double* h = hit_sums.row(i);
        for (int c = 0; c < d; ++c) s[c] = decay * s[c] + (1.0 - decay) * h[c];
        if (hit_counts[i] > 0.0) {
            const double denom = cb.ema_counts[i] + cb.smoothing_eps;
            double* v = cb.vectors.row(i);
            for (int c = 0; c < d; ++c) v[c] = s[c] / denom;
        }
    }
}

void ema_update(Codebook& cb,
                const std::vector<std::pair<int, std::vector<double>>>& assignments) {
    std::vector<int> indices;
    Tensor points(static_cast<int>(assignments.size()), cb.dim());
    indices.reserve(assignments.size());
    for (size_t j = 0; j < assignments.size(); ++j) {
        indices.push_back(assignments[j].first);
        if (static_cast<int>(assignments[j].second.size()) != cb.dim())
            throw std::invalid_argument("ema_update: dimension mismatch");
        std::copy(assignments[j].second.begin(), assignments[j].second.end(),
                  points.row(static_cast<int>(j)));
    }
    ema_update(cb, indices, points);
}

int revive_dead_codes(Codebook& cb, const Tensor& batch_points, Rng& rng, double threshold) {
    if (batch_points.rows == 0 || batch_points.cols != cb.dim())
        throw std::invalid_argument("revive_dead_codes: bad batch");
    int revived = 0;
    for (int i = 0; i < cb.entries(); ++i) {
        if (cb.ema_counts[i] >= threshold) continue;
        const int pick = static_cast<int>(rng.index(static_cast<uint64_t>(batch_points.rows)));
        const double* p = batch_points.row(pick);
        std::copy(p, p + cb.dim(), cb.vectors.row(i));
        std::copy(p, p + cb.dim(), cb.ema_sums.row(i));
        cb.ema_counts[i] = 1.0;
        ++revived;
    }
    return revived;
}

Tensor kmeans_pp_init(const Tensor& points, int k, Rng& rng) {
    if (k <= 0 || points.rows < 1) throw std::invalid_argument("kmeans_pp_init: bad arguments");
    Tensor centers(k, points.cols);
    const int n = points.rows;

    int first = static_cast<int>(rng.index(static_cast<uint64_t>(n)));
    std::copy(points.row(first), points.row(first) + points.cols, centers.row(0));

    std::vector<double> d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            const double* p = points.row(j);
            const double* last = centers.row(c - 1);
            double acc = 0.0;
            for (int t = 0; t < points.cols; ++t) {
                const double diff = p[t] - last[t];
                acc += diff * diff;
            }
            if (acc < d2[j]) d2[j] = acc;
            total += d2[j];
        }
        int pick = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double run = 0.0;
            for (int j = 0; j < n; ++j) {
                run += d2[j];
                if (run >= target) {
                    pick = j;
                    break;
                }
            }
        } else {
            pick = static_cast<int>(rng.index(static_cast<uint64_t>(n)));
        }
        std::copy(points.row(pick), points.row(pick) + points.cols, centers.row(c));
    }
    return centers;
}

Tensor lloyd_kmeans(const Tensor& points, Tensor centroids, int max_iters) {
    if (points.cols != centroids.cols)
        throw std::invalid_argument("lloyd_kmeans: dimension mismatch");
    const int n = points.rows;
    const int k = centroids.rows;
    std::vector<int> assign(static_cast<size_t>(n), -1);

    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (int j = 0; j < n; ++j) {
            const int best = nearest_row(centroids, points.row(j), points.cols).first;
            if (best != assign[j]) {
                assign[j] = best;
                changed = true;
            }
        }
        if (!changed) break;

        Tensor sums(k, points.cols);
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (int j = 0; j < n; ++j) {
            double* s = sums.row(assign[j]);
            const double* p = points.row(j);
            for (int t = 0; t < points.cols; ++t) s[t] += p[t];
            ++counts[assign[j]];
        }
        for (int i = 0; i < k; ++i) {
            if (counts[i] == 0) continue; // empty cluster keeps its centroid
            double* c = centroids.row(i);
            const double* s = sums.row(i);
            for (int t = 0; t < points.cols; ++t) c[t] = s[t] / counts[i];
        }
    }
    return centroids;
}

} // namespace mbsc
