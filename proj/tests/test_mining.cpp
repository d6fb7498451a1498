#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ranp/lexicon.hpp"
#include "ranp/mining.hpp"
#include "ranp/semantics.hpp"

using namespace ranp;

namespace {

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n, bool coarse) {
    // Coarse values force frequent ties.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> r(n);
    for (auto& x : r) x = coarse ? std::round(u(rng) * 4.0) / 4.0 : u(rng);
    return r;
}

std::vector<double> random_rel(std::mt19937_64& rng, std::size_t n) {
    static const double levels[] = {0.0, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0};
    std::uniform_int_distribution<int> pick(0, 6);
    std::vector<double> r(n);
    for (auto& x : r) x = levels[pick(rng)];
    return r;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace

TEST(HardestNegativeStandard, Examples) {
    const std::vector<double> sim{0.9, 0.8, 0.2};
    EXPECT_EQ(hardest_negative_standard(sim, 0), *oracle::select(sim, true, [](std::size_t j) { return j != 0; }));
    EXPECT_EQ(hardest_negative_standard(sim, 0), 1u);
    EXPECT_EQ(hardest_negative_standard(std::vector<double>{0.5, 0.5, 0.5}, 0), 1u);
    EXPECT_THROW(hardest_negative_standard(std::vector<double>{0.5}, 0), NoCandidate);
    EXPECT_THROW(hardest_negative_standard(sim, 3), InvalidInput);
}

TEST(HardestNegativeStandard, PicksWineBottleCaption) {
    // Captions: take bottle (gt), pick up bottle of wine, close the fridge.
    const std::vector<double> sim{0.7, 0.6, 0.3};
    EXPECT_EQ(hardest_negative_standard(sim, 0), 1u);
}

TEST(HardestNegativeRan, Examples) {
    EXPECT_EQ(hardest_negative_ran(std::vector<double>{0.9, 0.8, 0.2}, std::vector<double>{1.0, 0.8, 0.0}, Tau(0.75)),
              std::optional<std::size_t>(2));
    EXPECT_EQ(hardest_negative_ran(std::vector<double>{0.9, 0.8, 0.2}, std::vector<double>{1.0, 1.0, 1.0}, Tau(0.5)),
              std::nullopt);
    EXPECT_EQ(hardest_negative_ran(std::vector<double>{0.9, 0.8, 0.2}, std::vector<double>{0.0, 0.3, 0.0}, Tau(0.0)),
              std::nullopt);
    EXPECT_THROW(hardest_negative_ran(std::vector<double>{0.9, 0.8}, std::vector<double>{1.0}, Tau(0.5)),
                 InvalidInput);
}

TEST(HardestNegativeRan, LowRelevanceGroundtruthExcluded) {
    const std::vector<double> sim{0.9, 0.5, 0.2};
    const std::vector<double> rel{0.1, 0.0, 0.0};
    EXPECT_EQ(hardest_negative_ran(sim, rel, Tau(0.5)), std::optional<std::size_t>(0));
    EXPECT_EQ(hardest_negative_ran(sim, rel, Tau(0.5), 0), std::optional<std::size_t>(1));
}

TEST(Tau, RejectsOutOfRange) {
    EXPECT_THROW(Tau(-0.1), InvalidInput);
    EXPECT_THROW(Tau(1.5), InvalidInput);
    EXPECT_NO_THROW(Tau(0.0));
    EXPECT_NO_THROW(Tau(1.0));
}

TEST(HardestPositiveNaive, Examples) {
    EXPECT_EQ(hardest_positive_naive(std::vector<double>{0.9, 0.8, 0.2}, 0), 2u);
    EXPECT_EQ(hardest_positive_naive(std::vector<double>{0.9, 0.1, 0.1}, 0), 1u);
    EXPECT_THROW(hardest_positive_naive(std::vector<double>{0.9}, 0), NoCandidate);

    std::mt19937_64 rng(1);
    const auto row = random_row(rng, 64, false);
    EXPECT_EQ(hardest_positive_naive(row, 5), *oracle::select(row, false, [](std::size_t j) { return j != 5; }));
}

TEST(HardestPositiveRanp, Examples) {
    EXPECT_EQ(hardest_positive_ranp(std::vector<double>{0.9, 0.3, 0.2}, std::vector<double>{1.0, 0.8, 0.0}, Tau(0.75)),
              std::optional<std::size_t>(1));
    EXPECT_EQ(hardest_positive_ranp(std::vector<double>{0.9, 0.3, 0.2}, std::vector<double>{0.1, 0.2, 0.0}, Tau(0.75)),
              std::nullopt);
    EXPECT_EQ(hardest_positive_ranp(std::vector<double>{0.9, 0.3, 0.2}, std::vector<double>{1.0, 0.0, 0.0}, Tau(0.5)),
              std::optional<std::size_t>(0));
    EXPECT_THROW(hardest_positive_ranp(std::vector<double>{0.9}, std::vector<double>{1.0, 0.0}, Tau(0.5)),
                 InvalidInput);
}

TEST(MineBatch, SingleAnchorStandardIsSkipped) {
    const Matrix sim(1, 1, 0.5);
    const Matrix rel(1, 1, 1.0);
    const auto m = mine_batch(sim, rel, {0}, Tau(0.5), Strategy::Standard);
    ASSERT_EQ(m.rows.size(), 1u);
    EXPECT_TRUE(m.rows[0].skipped_negative);
    EXPECT_FALSE(m.rows[0].negative_index.has_value());
}

TEST(MineBatch, FlowerpotBatchNeverUsesRelevantCaptionAsNegative) {
    Lexicon lex;
    lex.add("pick up", verb(0));
    lex.add("pick", verb(0));
    lex.add("pot", verb(1));
    lex.add("flowerpot", noun(0));
    lex.add("sunflower", noun(1));
    lex.add("helianthus", noun(1));
    lex.add("lily", noun(2));
    const std::vector<SemanticProfile> ps{lex.tag("pick up a flowerpot and a sunflower"),
                                          lex.tag("pick an helianthus and a flowerpot"),
                                          lex.tag("pot the lily in a flowerpot")};
    const auto rel = relevance_matrix(ps, ps);
    // x2 is the most similar caption to x1, so plain mining would take it.
    const Matrix sim = to_matrix({{0.9, 0.85, 0.1}, {0.8, 0.9, 0.2}, {0.1, 0.3, 0.9}});
    const auto standard = mine_batch(sim, rel, {0, 1, 2}, Tau(0.5), Strategy::Standard);
    EXPECT_EQ(standard.rows[0].negative_index, std::optional<std::size_t>(1));
    const auto ran = mine_batch(sim, rel, {0, 1, 2}, Tau(0.5), Strategy::RAN);
    EXPECT_EQ(ran.rows[0].negative_index, std::optional<std::size_t>(2));
    EXPECT_EQ(ran.rows[0].positive_index, std::optional<std::size_t>(0));
}

TEST(MineBatch, RowsMatchScalarOperations) {
    std::mt19937_64 rng(42);
    const std::size_t n = 64;
    Matrix sim(n, n), rel(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = random_row(rng, n, true);
        const auto r = random_rel(rng, n);
        std::copy(s.begin(), s.end(), sim.row(i).begin());
        std::copy(r.begin(), r.end(), rel.row(i).begin());
    }
    std::vector<std::size_t> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = (i * 7) % n;
    const Tau tau(0.4);
    const auto standard = mine_batch(sim, rel, gt, tau, Strategy::Standard);
    const auto ran = mine_batch(sim, rel, gt, tau, Strategy::RAN);
    const auto ranp = mine_batch(sim, rel, gt, tau, Strategy::RANP);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> s(sim.row(i).begin(), sim.row(i).end());
        const std::vector<double> r(rel.row(i).begin(), rel.row(i).end());
        const auto neg_std = oracle::select(s, true, [&](std::size_t j) { return j != gt[i]; });
        const auto neg_ran = oracle::select(s, true, [&](std::size_t j) { return j != gt[i] && r[j] < 0.4; });
        const auto pos_ranp = oracle::select(s, false, [&](std::size_t j) { return r[j] >= 0.4; });
        EXPECT_EQ(standard.rows[i].negative_index, neg_std);
        EXPECT_EQ(standard.rows[i].positive_index, std::optional<std::size_t>(gt[i]));
        EXPECT_EQ(ran.rows[i].negative_index, neg_ran);
        EXPECT_EQ(ran.rows[i].skipped_negative, !neg_ran.has_value());
        EXPECT_EQ(ranp.rows[i].negative_index, neg_ran);
        if (neg_ran) {
            EXPECT_EQ(ranp.rows[i].positive_index, pos_ranp);
        } else {
            EXPECT_FALSE(ranp.rows[i].positive_index.has_value());
            EXPECT_TRUE(ranp.rows[i].skipped_positive);
        }
    }
}

TEST(MineBatch, ShapeErrors) {
    EXPECT_THROW(mine_batch(Matrix(2, 2), Matrix(2, 3), {0, 1}, Tau(0.5), Strategy::RAN), InvalidInput);
    EXPECT_THROW(mine_batch(Matrix(2, 2), Matrix(2, 2), {0}, Tau(0.5), Strategy::RAN), InvalidInput);
    EXPECT_THROW(mine_batch(Matrix(2, 2), Matrix(2, 2), {0, 2}, Tau(0.5), Strategy::RAN), InvalidInput);
}

TEST(MiningProperties, SoundnessNestingDeterminismAndMonotoneFiltering) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5000; ++trial) {
        const std::size_t n = 2 + trial % 20;
        const auto sim = random_row(rng, n, trial % 2 == 0);
        const auto rel = random_rel(rng, n);
        const std::size_t gt = trial % n;
        const Tau tau(std::round(u(rng) * 8.0) / 8.0);

        const auto neg = hardest_negative_ran(sim, rel, tau, gt);
        if (neg) {
            EXPECT_LT(rel[*neg], tau.value());
        }
        const auto pos = hardest_positive_ranp(sim, rel, tau);
        if (pos) {
            EXPECT_GE(rel[*pos], tau.value());
        }
        EXPECT_EQ(neg, hardest_negative_ran(sim, rel, tau, gt));

        // With every non-gt relevance below tau and a relevant gt, RAN equals Standard.
        auto rel_low = rel;
        for (auto& r : rel_low) r = std::min(r, 0.5);
        rel_low[gt] = 1.0;
        EXPECT_EQ(hardest_negative_ran(sim, rel_low, Tau(0.75), gt),
                  std::optional<std::size_t>(hardest_negative_standard(sim, gt)));

        // Lower tau: the negative pool shrinks and the positive pool grows.
        const Tau lower(tau.value() / 2.0);
        std::size_t neg_hi = 0, neg_lo = 0, pos_hi = 0, pos_lo = 0;
        for (std::size_t j = 0; j < n; ++j) {
            neg_hi += rel[j] < tau.value() ? 1 : 0;
            neg_lo += rel[j] < lower.value() ? 1 : 0;
            pos_hi += rel[j] >= tau.value() ? 1 : 0;
            pos_lo += rel[j] >= lower.value() ? 1 : 0;
        }
        EXPECT_LE(neg_lo, neg_hi);
        EXPECT_GE(pos_lo, pos_hi);
        if (!hardest_negative_ran(sim, rel, tau, gt)) {
            EXPECT_FALSE(hardest_negative_ran(sim, rel, lower, gt).has_value());
        }
    }
}

TEST(MiningProperties, SmallPerturbationsKeepWinners) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 8;
        auto sim = random_row(rng, n, false);
        const auto rel = random_rel(rng, n);
        // Smallest gap between distinct entries bounds a safe perturbation.
        auto sorted = sim;
        std::sort(sorted.begin(), sorted.end());
        double gap = 1.0;
        for (std::size_t k = 1; k < n; ++k) gap = std::min(gap, sorted[k] - sorted[k - 1]);
        if (gap <= 0.0) continue;
        const auto before_neg = hardest_negative_ran(sim, rel, Tau(0.4), 0);
        const auto before_pos = hardest_positive_ranp(sim, rel, Tau(0.4));
        std::uniform_real_distribution<double> eps(-0.4 * gap, 0.4 * gap);
        for (auto& s : sim) s += eps(rng);
        EXPECT_EQ(hardest_negative_ran(sim, rel, Tau(0.4), 0), before_neg);
        EXPECT_EQ(hardest_positive_ranp(sim, rel, Tau(0.4)), before_pos);
    }
}
