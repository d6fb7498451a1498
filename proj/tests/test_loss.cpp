#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ranp/loss.hpp"

using namespace ranp;

namespace {

std::vector<std::size_t> identity_map_for_test(std::size_t n) {
    std::vector<std::size_t> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = i;
    return gt;
}

Matrix row_matrix(std::vector<double> values) {
    Matrix m(1, values.size());
    std::copy(values.begin(), values.end(), m.row(0).begin());
    return m;
}

MinedTriplets single(Strategy s, std::optional<std::size_t> neg, std::optional<std::size_t> pos) {
    MinedTriplets m;
    m.strategy = s;
    MinedTriplet t;
    t.anchor_index = 0;
    t.negative_index = neg;
    t.positive_index = pos;
    t.skipped_negative = !neg.has_value();
    t.skipped_positive = !pos.has_value();
    m.rows.push_back(t);
    return m;
}

// Loss of one direction written as a plain loop over rows.
double scalar_loss(const Matrix& sim, const Matrix& rel, const std::vector<std::size_t>& gt, double tau,
                   Strategy strategy, double dn, double dp) {
    double sum = 0.0;
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        const std::vector<double> s(sim.row(i).begin(), sim.row(i).end());
        const std::vector<double> r(rel.row(i).begin(), rel.row(i).end());
        std::optional<std::size_t> neg;
        if (strategy == Strategy::Standard) {
            neg = oracle::select(s, true, [&](std::size_t j) { return j != gt[i]; });
        } else {
            neg = oracle::select(s, true, [&](std::size_t j) { return j != gt[i] && r[j] < tau; });
        }
        if (!neg) continue;
        sum += oracle::hinge(dn + s[*neg] - s[gt[i]]);
        if (strategy == Strategy::RANP) {
            const auto pos = oracle::select(s, false, [&](std::size_t j) { return r[j] >= tau; });
            if (pos) sum += oracle::hinge(dp + s[*neg] - s[*pos]);
        }
    }
    return sum / static_cast<double>(sim.rows());
}

void random_fill(std::mt19937_64& rng, Matrix& sim, Matrix& rel) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> level(0, 6);
    for (auto& x : sim.data()) x = u(rng);
    for (auto& x : rel.data()) x = level(rng) / 6.0;
}

}  // namespace

TEST(TripletTerms, Examples) {
    EXPECT_DOUBLE_EQ(triplet_term_negative(0.6, 0.5, 0.2), 0.1);
    EXPECT_EQ(triplet_term_negative(0.9, 0.1, 0.2), 0.0);
    EXPECT_DOUBLE_EQ(triplet_term_positive(0.55, 0.5, 0.2), 0.15);
    EXPECT_EQ(triplet_term_positive(0.9, 0.1, 0.2), 0.0);
}

TEST(BatchLoss, SingleAnchorRanp) {
    const Matrix sim = row_matrix({0.6, 0.5, 0.55});
    const auto mined = single(Strategy::RANP, 1, 2);
    const auto loss = batch_loss(sim, mined, {0}, Margins{0.2, 0.2});
    EXPECT_NEAR(loss.l_n_sum, 0.1, 1e-12);
    EXPECT_NEAR(loss.l_p_sum, 0.15, 1e-12);
    EXPECT_NEAR(loss.total, 0.25, 1e-12);
    EXPECT_EQ(loss.active_negatives, 1u);
    EXPECT_EQ(loss.active_positives, 1u);
}

TEST(BatchLoss, PositiveTermOnlyForRanp) {
    const Matrix sim = row_matrix({0.6, 0.5, 0.55});
    for (auto s : {Strategy::Standard, Strategy::RAN}) {
        const auto loss = batch_loss(sim, single(s, 1, 2), {0}, Margins{0.2, 0.2});
        EXPECT_EQ(loss.l_p_sum, 0.0);
        EXPECT_NEAR(loss.total, 0.1, 1e-12);
    }
}

TEST(BatchLoss, SkippedAnchorsCountInDenominator) {
    Matrix sim(2, 2);
    sim(0, 0) = 0.6;
    sim(0, 1) = 0.5;
    sim(1, 0) = 0.5;
    sim(1, 1) = 0.6;
    MinedTriplets mined;
    mined.strategy = Strategy::RAN;
    mined.rows.push_back({0, 1, 0, false, false});
    mined.rows.push_back({1, std::nullopt, std::nullopt, true, true});
    const auto loss = batch_loss(sim, mined, {0, 1}, Margins{0.2, 0.2});
    EXPECT_NEAR(loss.total, 0.05, 1e-12);
    EXPECT_EQ(loss.skipped, 1u);
    EXPECT_EQ(loss.batch_size, 2u);
}

TEST(BatchLoss, AllSkippedIsZero) {
    const Matrix sim = row_matrix({0.6, 0.5});
    const auto loss = batch_loss(sim, single(Strategy::RANP, std::nullopt, std::nullopt), {0}, Margins{});
    EXPECT_EQ(loss.total, 0.0);
    const auto g = batch_loss_sim_gradient(sim, single(Strategy::RANP, std::nullopt, std::nullopt), {0}, Margins{});
    for (double x : g.data()) EXPECT_EQ(x, 0.0);
}

TEST(BatchLoss, RejectsMismatchedInputs) {
    const Matrix sim = row_matrix({0.6, 0.5});
    EXPECT_THROW(batch_loss(sim, single(Strategy::RAN, 5, std::nullopt), {0}, Margins{}), InvalidInput);
    EXPECT_THROW(batch_loss(sim, single(Strategy::RAN, 1, std::nullopt), {0, 1}, Margins{}), InvalidInput);
}

TEST(Margins, NegativeRejected) {
    EXPECT_THROW((Margins{-0.1, 0.2}.validate()), InvalidConfig);
    EXPECT_THROW((Margins{0.2, -0.1}.validate()), InvalidConfig);
    EXPECT_NO_THROW((Margins{0.0, 0.0}.validate()));
}

TEST(BatchLoss, MatchesScalarLoopOnRandomBatches) {
    std::mt19937_64 rng(17);
    const std::size_t n = 64;
    for (auto strategy : {Strategy::Standard, Strategy::RAN, Strategy::RANP}) {
        for (double tau : {0.15, 0.4, 0.75}) {
            Matrix sim(n, n), rel(n, n);
            random_fill(rng, sim, rel);
            const auto gt = identity_map_for_test(n);
            const auto mined = mine_batch(sim, rel, gt, Tau(tau), strategy);
            const auto loss = batch_loss(sim, mined, gt, Margins{0.2, 0.3});
            EXPECT_NEAR(loss.total, scalar_loss(sim, rel, gt, tau, strategy, 0.2, 0.3), 1e-12);
        }
    }
}

TEST(BidirectionalLoss, EqualsTwoIndependentPasses) {
    std::mt19937_64 rng(23);
    const std::size_t n = 32;
    Matrix sim(n, n), rel(n, n);
    random_fill(rng, sim, rel);
    const auto gt = identity_map_for_test(n);
    const auto simt = sim.transposed();
    const auto relt = rel.transposed();
    const auto both = bidirectional_loss(sim, simt, rel, relt, gt, gt, Tau(0.4), Strategy::RANP, Margins{},
                                         DirectionWeights{1.0, 0.5});
    const double v2t = scalar_loss(sim, rel, gt, 0.4, Strategy::RANP, 0.2, 0.2);
    const double t2v = scalar_loss(simt, relt, gt, 0.4, Strategy::RANP, 0.2, 0.2);
    EXPECT_NEAR(both.v2t.total, v2t, 1e-12);
    EXPECT_NEAR(both.t2v.total, t2v, 1e-12);
    EXPECT_NEAR(both.combined.total, v2t + 0.5 * t2v, 1e-12);
    EXPECT_THROW(bidirectional_loss(sim, Matrix(n, n + 1), rel, relt, gt, gt, Tau(0.4), Strategy::RAN, Margins{}),
                 InvalidInput);
}

TEST(LossProperties, NonNegativeAndMonotoneInMargins) {
    std::mt19937_64 rng(31);
    const std::size_t n = 16;
    for (int trial = 0; trial < 200; ++trial) {
        Matrix sim(n, n), rel(n, n);
        random_fill(rng, sim, rel);
        const auto gt = identity_map_for_test(n);
        const auto mined = mine_batch(sim, rel, gt, Tau(0.4), Strategy::RANP);
        const auto small = batch_loss(sim, mined, gt, Margins{0.1, 0.1});
        const auto large = batch_loss(sim, mined, gt, Margins{0.3, 0.2});
        EXPECT_GE(small.total, 0.0);
        EXPECT_GE(large.total, small.total);
        const auto none = batch_loss(sim, mined, gt, Margins{0.0, 0.0});
        EXPECT_LE(none.total, small.total);
    }
}

TEST(LossProperties, ZeroWhenGroundtruthDominates) {
    Matrix sim(4, 4, -0.5);
    Matrix rel(4, 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        sim(i, i) = 0.9;
        rel(i, i) = 1.0;
    }
    const auto gt = identity_map_for_test(4);
    for (auto s : {Strategy::Standard, Strategy::RAN, Strategy::RANP}) {
        EXPECT_EQ(batch_loss(sim, mine_batch(sim, rel, gt, Tau(0.5), s), gt, Margins{}).total, 0.0);
    }
}

TEST(SimGradient, MatchesFiniteDifferencesAwayFromKinks) {
    std::mt19937_64 rng(41);
    const std::size_t n = 8;
    Matrix sim(n, n), rel(n, n);
    random_fill(rng, sim, rel);
    const auto gt = identity_map_for_test(n);
    const auto mined = mine_batch(sim, rel, gt, Tau(0.4), Strategy::RANP);
    const Margins margins{0.2, 0.2};
    const auto g = batch_loss_sim_gradient(sim, mined, gt, margins);
    const auto fd = oracle::finite_difference(
        sim.data(),
        [&](const std::vector<double>& x) {
            Matrix s(n, n);
            std::copy(x.begin(), x.end(), s.data().begin());
            return batch_loss(s, mined, gt, margins).total;
        },
        1e-7);
    EXPECT_LT(oracle::relative_error(g.data(), fd), 1e-6);
}

TEST(SimGradient, ZeroAtKink) {
    // delta_n + s_neg - s_gt == 0 exactly.
    const Matrix sim = row_matrix({0.5, 0.25});
    const auto mined = single(Strategy::RAN, 1, std::nullopt);
    const auto g = batch_loss_sim_gradient(sim, mined, {0}, Margins{0.25, 0.2});
    EXPECT_EQ(g(0, 0), 0.0);
    EXPECT_EQ(g(0, 1), 0.0);
}
