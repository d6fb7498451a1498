#pragma once

/// \file loss.hpp
/// \brief Hinge triplet terms and the per-batch loss over mined triplets.
///
/// For anchor a with groundtruth g, mined negative n and mined positive p:
///
///     L_n = max(0, delta_n + s(a, n) - s(a, g))
///     L_p = max(0, delta_p + s(a, n) - s(a, p))      (RANP only)
///
/// and the directional loss is (sum L_p + sum L_n) / |B|, where |B| counts
/// every anchor, skipped ones included.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ranp/error.hpp"
#include "ranp/matrix.hpp"
#include "ranp/mining.hpp"

namespace ranp {

struct Margins {
    double delta_n = 0.2;
    double delta_p = 0.2;

    void validate() const {
        if (!(delta_n >= 0.0) || !(delta_p >= 0.0)) throw InvalidConfig("margins must be non-negative");
    }
};

struct LossBreakdown {
    double total = 0.0;
    double l_n_sum = 0.0;
    double l_p_sum = 0.0;
    std::size_t active_negatives = 0;
    std::size_t active_positives = 0;
    std::size_t skipped = 0;
    std::size_t batch_size = 0;
};

inline double triplet_term_negative(double s_gt, double s_neg, double delta_n) {
    return std::max(0.0, delta_n + s_neg - s_gt);
}

inline double triplet_term_positive(double s_pos, double s_neg, double delta_p) {
    return std::max(0.0, delta_p + s_neg - s_pos);
}

namespace detail {

inline void check_mined(const Matrix& sim, const MinedTriplets& mined, const std::vector<std::size_t>& gt) {
    if (mined.rows.size() != sim.rows() || gt.size() != sim.rows()) {
        throw InvalidInput("mined triplets do not match the similarity matrix");
    }
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        const auto& t = mined.rows[i];
        auto bad = [&](const std::optional<std::size_t>& k) { return k && *k >= sim.cols(); };
        if (gt[i] >= sim.cols() || bad(t.negative_index) || bad(t.positive_index)) {
            throw InvalidInput("mined index out of range for anchor " + std::to_string(i));
        }
    }
}

/// Visits every active hinge term as (anchor, column pushed up, column pushed down, value).
template <typename Visit>
void for_each_term(const Matrix& sim, const MinedTriplets& mined, const std::vector<std::size_t>& gt,
                   const Margins& margins, Visit&& visit) {
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        const auto& t = mined.rows[i];
        if (t.skipped_negative || !t.negative_index) continue;
        const std::size_t neg = *t.negative_index;
        const double arg_n = margins.delta_n + sim(i, neg) - sim(i, gt[i]);
        visit(i, gt[i], neg, arg_n, false);
        if (mined.strategy == Strategy::RANP && t.positive_index && !t.skipped_positive) {
            const std::size_t pos = *t.positive_index;
            const double arg_p = margins.delta_p + sim(i, neg) - sim(i, pos);
            visit(i, pos, neg, arg_p, true);
        }
    }
}

}  // namespace detail

/// Loss of one retrieval direction. `sim` rows are anchors.
inline LossBreakdown batch_loss(const Matrix& sim, const MinedTriplets& mined, const std::vector<std::size_t>& gt,
                                const Margins& margins) {
    detail::check_mined(sim, mined, gt);
    LossBreakdown out;
    out.batch_size = sim.rows();
    for (const auto& t : mined.rows) out.skipped += t.skipped_negative ? 1 : 0;
    detail::for_each_term(sim, mined, gt, margins,
                          [&](std::size_t, std::size_t, std::size_t, double arg, bool positive_term) {
                              const double v = std::max(0.0, arg);
                              if (positive_term) {
                                  out.l_p_sum += v;
                                  out.active_positives += v > 0.0 ? 1 : 0;
                              } else {
                                  out.l_n_sum += v;
                                  out.active_negatives += v > 0.0 ? 1 : 0;
                              }
                          });
    if (out.batch_size > 0) out.total = (out.l_p_sum + out.l_n_sum) / static_cast<double>(out.batch_size);
    return out;
}

/// d(batch_loss)/d(sim), mined indices held fixed. A hinge exactly at its
/// kink contributes no gradient.
inline Matrix batch_loss_sim_gradient(const Matrix& sim, const MinedTriplets& mined,
                                      const std::vector<std::size_t>& gt, const Margins& margins) {
    detail::check_mined(sim, mined, gt);
    Matrix grad(sim.rows(), sim.cols());
    if (sim.rows() == 0) return grad;
    const double scale = 1.0 / static_cast<double>(sim.rows());
    detail::for_each_term(sim, mined, gt, margins,
                          [&](std::size_t i, std::size_t up, std::size_t down, double arg, bool) {
                              if (arg > 0.0) {
                                  grad(i, down) += scale;
                                  grad(i, up) -= scale;
                              }
                          });
    return grad;
}

struct DirectionWeights {
    double v2t = 1.0;
    double t2v = 1.0;
};

struct BidirectionalLoss {
    LossBreakdown v2t;
    LossBreakdown t2v;
    /// Weighted sum of the two totals; counters and sums are plain sums.
    LossBreakdown combined;
    MinedTriplets mined_v2t;
    MinedTriplets mined_t2v;
};

inline LossBreakdown combine(const LossBreakdown& a, double wa, const LossBreakdown& b, double wb) {
    LossBreakdown c;
    c.total = wa * a.total + wb * b.total;
    c.l_n_sum = a.l_n_sum + b.l_n_sum;
    c.l_p_sum = a.l_p_sum + b.l_p_sum;
    c.active_negatives = a.active_negatives + b.active_negatives;
    c.active_positives = a.active_positives + b.active_positives;
    c.skipped = a.skipped + b.skipped;
    c.batch_size = a.batch_size;
    return c;
}

/// Mines and scores both directions. `sim_t2v` must be the transpose of
/// `sim_v2t` (same for the relevance matrices); each direction is mined
/// independently.
inline BidirectionalLoss bidirectional_loss(const Matrix& sim_v2t, const Matrix& sim_t2v, const Matrix& rel_v2t,
                                            const Matrix& rel_t2v, const std::vector<std::size_t>& gt_v2t,
                                            const std::vector<std::size_t>& gt_t2v, Tau tau, Strategy strategy,
                                            const Margins& margins, const DirectionWeights& weights = {}) {
    if (sim_v2t.rows() != sim_t2v.cols() || sim_v2t.cols() != sim_t2v.rows()) {
        throw InvalidInput("video-to-text and text-to-video similarity matrices are not transposes in shape");
    }
    BidirectionalLoss out;
    out.mined_v2t = mine_batch(sim_v2t, rel_v2t, gt_v2t, tau, strategy);
    out.mined_t2v = mine_batch(sim_t2v, rel_t2v, gt_t2v, tau, strategy);
    out.v2t = batch_loss(sim_v2t, out.mined_v2t, gt_v2t, margins);
    out.t2v = batch_loss(sim_t2v, out.mined_t2v, gt_t2v, margins);
    out.combined = combine(out.v2t, weights.v2t, out.t2v, weights.t2v);
    return out;
}

}  // namespace ranp
