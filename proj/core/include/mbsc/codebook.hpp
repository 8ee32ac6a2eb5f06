#ifndef MBSC_CODEBOOK_HPP
#define MBSC_CODEBOOK_HPP

#include <utility>
#include <vector>

#include "mbsc/rng.hpp"
#include "mbsc/tensor.hpp"

namespace mbsc {

// Table of code vectors (rows) learned by exponential moving averages
// rather than gradients. ema_sums/ema_counts track decayed sums of
// assigned vectors and hit counts; a vector is the smoothed quotient of
// the two. Entry count must be a power of two so an index fits `bits()`.
struct Codebook {
    Tensor vectors;   // K x d
    Tensor ema_sums;  // K x d
    std::vector<double> ema_counts;
    double decay = 0.99;
    double smoothing_eps = 1e-5;

    int entries() const { return vectors.rows; }
    int dim() const { return vectors.cols; }
    int bits() const;
};

// Fresh codebook from initial vectors: counts start at 1 and sums at the
// vectors themselves, so an update-free codebook is self-consistent.
Codebook make_codebook(const Tensor& vectors, double decay = 0.99, double smoothing_eps = 1e-5);

// Index of the row of `rows` closest to v in squared distance, ties going
// to the lowest index. d must equal rows.cols.
std::pair<int, double> nearest_row(const Tensor& rows, const double* v, int d);

// Nearest code vector and its squared distance.
std::pair<int, double> nearest_code(const Codebook& cb, const std::vector<double>& v);
std::pair<int, double> nearest_code(const Codebook& cb, const double* v, int d);

// One EMA step over a batch of assignments: points.row(j) was assigned to
// indices[j]. Counts and sums decay everywhere (hit or not); vectors are
// recomputed as sums/(counts + eps) only for entries hit in this batch, so
// unhit entries keep their vectors. Throws on out-of-range indices or
// dimension mismatch.
void ema_update(Codebook& cb, const std::vector<int>& indices, const Tensor& points);

// Same update from an explicit (index, vector) list.
void ema_update(Codebook& cb, const std::vector<std::pair<int, std::vector<double>>>& assignments);

// Re-seeds entries whose ema_count fell below `threshold` to random rows
// of `batch_points` (count reset to 1, sums to the new vector). Returns
// how many entries were revived.
int revive_dead_codes(Codebook& cb, const Tensor& batch_points, Rng& rng,
                      double threshold = 1e-3);

// k-means++ seeding: k rows drawn from `points`, the first uniformly and
// the rest proportional to squared distance from the chosen set.
Tensor kmeans_pp_init(const Tensor& points, int k, Rng& rng);

// Batch Lloyd iterations from the given centroids (assign all points to
// the nearest centroid with the same lowest-index tie rule, then recompute
// means; empty clusters keep their centroid). Stops when assignments are
// stable or after max_iters. The reference the EMA path is checked against.
Tensor lloyd_kmeans(const Tensor& points, Tensor centroids, int max_iters);

} // namespace mbsc

#endif
