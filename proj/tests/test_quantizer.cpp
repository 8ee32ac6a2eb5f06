#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mbsc/band.hpp"
#include "mbsc/codebook.hpp"
#include "mbsc/quantizer.hpp"
#include "mbsc/rng.hpp"

using namespace mbsc;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(r, c);
    for (auto& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

// Stack with random codebooks whose entry 0 is the zero vector, so every
// stage has a do-nothing fallback code.
QuantizerStack zero_anchored_stack(const BandPlan& plan, int dim, int bits, QuantizerMode mode,
                                   Rng& rng) {
    QuantizerStack q = make_quantizer_stack(plan, dim, bits, mode);
    for (size_t k = 0; k < q.n_stages(); ++k) {
        Tensor rows = random_tensor(q.codebooks[k].entries(), dim, rng);
        for (int j = 0; j < dim; ++j) rows.at(0, j) = 0.0;
        q.codebooks[k] = make_codebook(rows);
    }
    return q;
}

} // namespace

TEST_CASE("nearest code picks the closest row, ties to the lowest index") {
    Tensor rows(2, 2);
    rows.at(0, 0) = 0.0;
    rows.at(0, 1) = 0.0;
    rows.at(1, 0) = 1.0;
    rows.at(1, 1) = 1.0;
    Codebook cb = make_codebook(rows);

    auto [i0, d0] = nearest_code(cb, {0.2, 0.1});
    CHECK(i0 == 0);
    CHECK(d0 == doctest::Approx(0.05).epsilon(1e-12));

    auto [i1, d1] = nearest_code(cb, {1.0, 1.0});
    CHECK(i1 == 1);
    CHECK(d1 == 0.0);

    auto [it, dt] = nearest_code(cb, {0.5, 0.5});
    CHECK(it == 0);
    CHECK(dt == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("codebook construction rules") {
    Tensor ok(4, 3);
    CHECK(make_codebook(ok).bits() == 2);
    CHECK(make_codebook(ok).entries() == 4);
    Tensor odd(3, 3);
    CHECK_THROWS_AS(make_codebook(odd), std::invalid_argument);
    CHECK_THROWS_AS(make_codebook(ok, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(make_codebook(ok, 0.99, 0.0), std::invalid_argument);
    Tensor nan_rows(2, 2);
    nan_rows.v[1] = std::nan("");
    CHECK_THROWS_AS(make_codebook(nan_rows), std::invalid_argument);
}

TEST_CASE("one EMA step moves a fresh code by one decay quantum") {
    Tensor rows(2, 2);
    rows.at(0, 0) = 1.0; // entry 0 starts at (1, 0)
    rows.at(1, 0) = 5.0;
    rows.at(1, 1) = 5.0;
    Codebook cb = make_codebook(rows); // counts 1, sums = vectors

    Tensor pt(1, 2);
    pt.at(0, 1) = 1.0; // assign (0, 1) to entry 0
    ema_update(cb, std::vector<int>{0}, pt);

    CHECK(cb.ema_counts[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cb.vectors.at(0, 0) == doctest::Approx(0.9899901000989989).epsilon(1e-12));
    CHECK(cb.vectors.at(0, 1) == doctest::Approx(0.009999900000999998).epsilon(1e-12));
    // The unhit entry decays its statistics but keeps its vector.
    CHECK(cb.ema_counts[1] == doctest::Approx(0.99));
    CHECK(cb.ema_sums.at(1, 0) == doctest::Approx(4.95));
    CHECK(cb.vectors.at(1, 0) == 5.0);
}

TEST_CASE("a thousand repeats converge onto the assigned vector") {
    Tensor rows(2, 2);
    rows.at(0, 0) = 1.0;
    rows.at(1, 0) = -3.0;
    Codebook cb = make_codebook(rows);
    Tensor pt(1, 2);
    pt.at(0, 0) = 0.25;
    pt.at(0, 1) = -0.75;
    for (int i = 0; i < 1000; ++i) ema_update(cb, std::vector<int>{0}, pt);
    // The seed's weight decays as 0.99^1000 ~ 4e-5 and the smoothing eps
    // biases the quotient by ~1e-5, so 1e-4 is the honest bound.
    CHECK(std::abs(cb.vectors.at(0, 0) - 0.25) < 1e-4);
    CHECK(std::abs(cb.vectors.at(0, 1) + 0.75) < 1e-4);
}

TEST_CASE("an empty update leaves vectors untouched") {
    Rng rng(51);
    Codebook cb = make_codebook(random_tensor(4, 3, rng));
    Tensor before = cb.vectors;
    ema_update(cb, std::vector<int>{}, Tensor(0, 3));
    for (size_t i = 0; i < before.v.size(); ++i) CHECK(cb.vectors.v[i] == before.v[i]);
    CHECK(cb.ema_counts[0] == doctest::Approx(0.99));
}

TEST_CASE("ema update validates its inputs") {
    Rng rng(52);
    Codebook cb = make_codebook(random_tensor(4, 3, rng));
    Tensor pt(1, 3);
    CHECK_THROWS_AS(ema_update(cb, std::vector<int>{4}, pt), std::invalid_argument);
    CHECK_THROWS_AS(ema_update(cb, std::vector<int>{-1}, pt), std::invalid_argument);
    Tensor wrong(1, 2);
    CHECK_THROWS_AS(ema_update(cb, std::vector<int>{0}, wrong), std::invalid_argument);
    CHECK_THROWS_AS(ema_update(cb, std::vector<int>{0, 1}, pt), std::invalid_argument);
}

TEST_CASE("starved codes get revived from the batch") {
    Rng rng(53);
    Codebook cb = make_codebook(random_tensor(4, 2, rng));
    Tensor pt(1, 2);
    pt.at(0, 0) = 2.0;
    for (int i = 0; i < 800; ++i) ema_update(cb, std::vector<int>{0}, pt);
    // 0.99^800 ~ 3e-4: everything but entry 0 is starved.
    CHECK(cb.ema_counts[1] < 1e-3);

    Tensor batch = random_tensor(16, 2, rng, 5.0, 6.0);
    int revived = revive_dead_codes(cb, batch, rng);
    CHECK(revived == 3);
    for (int e = 1; e < 4; ++e) {
        CHECK(cb.ema_counts[e] == 1.0);
        bool from_batch = false;
        for (int r = 0; r < batch.rows && !from_batch; ++r)
            from_batch = cb.vectors.at(e, 0) == batch.at(r, 0) &&
                         cb.vectors.at(e, 1) == batch.at(r, 1);
        CHECK(from_batch);
    }
    CHECK(revive_dead_codes(cb, batch, rng) == 0);
}

TEST_CASE("kmeans++ seeding covers well-separated clusters") {
    Rng rng(54);
    Tensor points(100, 2);
    for (int i = 0; i < 100; ++i) {
        int c = i % 4;
        points.at(i, 0) = 10.0 * (c % 2) + rng.uniform(-0.1, 0.1);
        points.at(i, 1) = 10.0 * (c / 2) + rng.uniform(-0.1, 0.1);
    }
    Tensor seeds = kmeans_pp_init(points, 4, rng);
    REQUIRE(seeds.rows == 4);
    bool hit[4] = {false, false, false, false};
    for (int s = 0; s < 4; ++s) {
        int qx = seeds.at(s, 0) > 5.0 ? 1 : 0;
        int qy = seeds.at(s, 1) > 5.0 ? 1 : 0;
        hit[qy * 2 + qx] = true;
    }
    CHECK((hit[0] && hit[1] && hit[2] && hit[3]));
}

TEST_CASE("lloyd iterations land on exact cluster means") {
    Tensor pts(6, 1);
    pts.at(0, 0) = 0.0;
    pts.at(1, 0) = 1.0;
    pts.at(2, 0) = 2.0;
    pts.at(3, 0) = 10.0;
    pts.at(4, 0) = 11.0;
    pts.at(5, 0) = 12.0;
    Tensor init(2, 1);
    init.at(0, 0) = 0.0;
    init.at(1, 0) = 12.0;
    Tensor out = lloyd_kmeans(pts, init, 50);
    CHECK(out.at(0, 0) == doctest::Approx(1.0));
    CHECK(out.at(1, 0) == doctest::Approx(11.0));
}

TEST_CASE("all-zero latent encodes to all-zero tokens and output") {
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = make_quantizer_stack(plan, 8, 4);
    Tensor z(8, 10);
    EncodeResult r = mbs_rvq_encode(z, q);
    CHECK(r.tokens.frames == 10);
    CHECK(r.tokens.n_stages == 4);
    CHECK(r.tokens.bits == 4);
    for (uint16_t t : r.tokens.indices) CHECK(t == 0);
    CHECK(squared_norm(r.quantized) == 0.0);
    for (double n : r.trace.residual_norms) CHECK(n == 0.0);
}

TEST_CASE("a perfect codebook reconstructs the latent exactly") {
    Rng rng(55);
    BandPlan plan = make_band_plan(75.0, {1}, 0); // one full-band stage
    Tensor z = random_tensor(4, 8, rng);
    Tensor codes(8, 4);
    for (int t = 0; t < 8; ++t)
        for (int d = 0; d < 4; ++d) codes.at(t, d) = z.at(d, t);

    for (QuantizerMode mode : {QuantizerMode::mbs, QuantizerMode::vanilla}) {
        QuantizerStack q = make_quantizer_stack(plan, 4, 3, mode);
        q.codebooks[0] = make_codebook(codes);
        EncodeResult r = mode == QuantizerMode::mbs ? mbs_rvq_encode(z, q)
                                                    : vanilla_rvq_encode(z, q);
        for (int t = 0; t < 8; ++t) CHECK(r.tokens.index(t, 0) == t);
        for (size_t i = 0; i < z.v.size(); ++i) CHECK(r.quantized.v[i] == z.v[i]);
        CHECK(r.trace.residual_norms[0] < 1e-9);
    }
}

TEST_CASE("decode reproduces the encoder's quantized sum bit for bit") {
    Rng rng(56);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = zero_anchored_stack(plan, 6, 4, QuantizerMode::mbs, rng);
    Tensor z = random_tensor(6, 20, rng);
    EncodeResult r = mbs_rvq_encode(z, q);
    Tensor dec = mbs_rvq_decode(r.tokens, q);
    REQUIRE(dec.same_shape(r.quantized));
    for (size_t i = 0; i < dec.v.size(); ++i) CHECK(dec.v[i] == r.quantized.v[i]);
}

TEST_CASE("single-stage vanilla and full-band stacks agree token for token") {
    Rng rng(57);
    Tensor z = random_tensor(4, 12, rng);
    Tensor rows = random_tensor(8, 4, rng);

    QuantizerStack qm = make_quantizer_stack(make_band_plan(75.0, {1}, 0), 4, 3);
    qm.codebooks[0] = make_codebook(rows);
    QuantizerStack qv =
        make_quantizer_stack(make_band_plan(75.0, {1}, 0), 4, 3, QuantizerMode::vanilla);
    qv.codebooks[0] = make_codebook(rows);

    EncodeResult rm = mbs_rvq_encode(z, qm);
    EncodeResult rv = vanilla_rvq_encode(z, qv);
    CHECK(rm.tokens.indices == rv.tokens.indices);
}

TEST_CASE("mode mismatches are rejected") {
    Rng rng(58);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack qm = make_quantizer_stack(plan, 4, 3, QuantizerMode::mbs);
    QuantizerStack qv = make_quantizer_stack(plan, 4, 3, QuantizerMode::vanilla);
    Tensor z = random_tensor(4, 5, rng);
    CHECK_THROWS_AS(vanilla_rvq_encode(z, qm), std::invalid_argument);
    CHECK_THROWS_AS(mbs_rvq_encode(z, qv), std::invalid_argument);
    Tensor wrong = random_tensor(3, 5, rng);
    CHECK_THROWS_AS(mbs_rvq_encode(wrong, qm), std::invalid_argument);
}

TEST_CASE("a zero code keeps residual norms non-increasing") {
    Rng rng(59);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = zero_anchored_stack(plan, 6, 4, QuantizerMode::vanilla, rng);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor z = random_tensor(6, 16, rng);
        EncodeResult r = vanilla_rvq_encode(z, q);
        double prev = std::sqrt(squared_norm(z));
        for (double n : r.trace.residual_norms) {
            CHECK(n <= prev + 1e-9);
            prev = n;
        }
    }
}

TEST_CASE("subset decode splits into exact per-stage sums") {
    Rng rng(60);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = zero_anchored_stack(plan, 6, 4, QuantizerMode::mbs, rng);
    Tensor z = random_tensor(6, 9, rng);
    EncodeResult r = mbs_rvq_encode(z, q);

    Tensor s1 = subset_decode(r.tokens, q, {1});
    Tensor s2 = subset_decode(r.tokens, q, {2});
    Tensor s12 = subset_decode(r.tokens, q, {1, 2});
    for (size_t i = 0; i < s12.v.size(); ++i) CHECK(s12.v[i] == s1.v[i] + s2.v[i]);

    Tensor all = subset_decode(r.tokens, q, {1, 2, 3, 4});
    Tensor full = mbs_rvq_decode(r.tokens, q);
    for (size_t i = 0; i < full.v.size(); ++i) CHECK(all.v[i] == full.v[i]);

    CHECK_THROWS_AS(subset_decode(r.tokens, q, {}), std::invalid_argument);
    CHECK_THROWS_AS(subset_decode(r.tokens, q, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(subset_decode(r.tokens, q, {0}), std::invalid_argument);
    CHECK_THROWS_AS(subset_decode(r.tokens, q, {5}), std::invalid_argument);
}

TEST_CASE("commitment loss is the weighted sum of stage errors") {
    EncodeTrace trace;
    Tensor b1(2, 1), q1(2, 1), b2(2, 1), q2(2, 1);
    b1.at(0, 0) = 1.0; // error 1.0
    b2.at(0, 0) = 0.5; // error 0.25
    trace.band_inputs = {b1, b2};
    trace.quantized = {q1, q2};
    CHECK(commitment_loss(trace, {0.5, 2.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(commitment_loss(trace, {1.0, 1.0}) == doctest::Approx(1.25).epsilon(1e-12));
    // Perfect quantization costs nothing.
    trace.quantized = {b1, b2};
    CHECK(commitment_loss(trace, {0.5, 2.0}) == 0.0);
    CHECK_THROWS_AS(commitment_loss(trace, {1.0}), std::invalid_argument);
}

TEST_CASE("pinned trace reproduces the encode trace for its own tokens") {
    Rng rng(61);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = zero_anchored_stack(plan, 5, 4, QuantizerMode::mbs, rng);
    Tensor z = random_tensor(5, 7, rng);
    EncodeResult r = mbs_rvq_encode(z, q);
    EncodeTrace pinned = pinned_trace(z, q, r.tokens);
    REQUIRE(pinned.band_inputs.size() == r.trace.band_inputs.size());
    for (size_t k = 0; k < pinned.band_inputs.size(); ++k) {
        for (size_t i = 0; i < pinned.band_inputs[k].v.size(); ++i)
            CHECK(pinned.band_inputs[k].v[i] == r.trace.band_inputs[k].v[i]);
        for (size_t i = 0; i < pinned.quantized[k].v.size(); ++i)
            CHECK(pinned.quantized[k].v[i] == r.trace.quantized[k].v[i]);
    }
}

TEST_CASE("commitment gradient matches finite differences through the pinned trace") {
    Rng rng(62);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    for (QuantizerMode mode : {QuantizerMode::mbs, QuantizerMode::vanilla}) {
        QuantizerStack q = zero_anchored_stack(plan, 4, 3, mode, rng);
        q.commit_weights = {0.5, 1.0, 2.0, 0.25};
        Tensor z = random_tensor(4, 6, rng);
        TokenStream tokens =
            (mode == QuantizerMode::mbs ? mbs_rvq_encode(z, q) : vanilla_rvq_encode(z, q)).tokens;

        EncodeTrace trace = pinned_trace(z, q, tokens);
        Tensor grad = commitment_backward(trace, q);

        const double h = 1e-6;
        for (size_t i = 0; i < z.v.size(); i += 3) {
            Tensor zp = z, zm = z;
            zp.v[i] += h;
            zm.v[i] -= h;
            double lp = commitment_loss(pinned_trace(zp, q, tokens), q.commit_weights);
            double lm = commitment_loss(pinned_trace(zm, q, tokens), q.commit_weights);
            double fd = (lp - lm) / (2.0 * h);
            CHECK(std::abs(grad.v[i] - fd) / std::max({std::abs(fd), std::abs(grad.v[i]), 1e-6}) <
                  1e-5);
        }
    }
}

TEST_CASE("straight-through backward passes gradients unchanged") {
    Rng rng(63);
    Tensor up = random_tensor(3, 4, rng);
    Tensor like(3, 4);
    Tensor out = ste_backward(up, like);
    for (size_t i = 0; i < up.v.size(); ++i) CHECK(out.v[i] == up.v[i]);
    Tensor wrong(2, 4);
    CHECK_THROWS_AS(ste_backward(up, wrong), std::invalid_argument);
}

TEST_CASE("encode is deterministic") {
    Rng rng(64);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack q = zero_anchored_stack(plan, 6, 4, QuantizerMode::mbs, rng);
    Tensor z = random_tensor(6, 11, rng);
    EncodeResult a = mbs_rvq_encode(z, q);
    EncodeResult b = mbs_rvq_encode(z, q);
    CHECK(a.tokens.indices == b.tokens.indices);
}
