#pragma once

/// \file mining.hpp
/// \brief Online hard-example mining over a batch similarity matrix.
///
/// Each anchor (a row of the similarity matrix) gets a hard negative and,
/// for relevance-aware positive mining, a hard positive:
///
///  - Standard: negative = most similar candidate other than the groundtruth.
///  - RAN:      negative = most similar candidate with relevance < tau.
///  - RANP:     RAN negative, plus positive = least similar candidate with
///              relevance >= tau (the groundtruth stays in that pool).
///
/// All argmax/argmin ties resolve to the lowest index. The text-to-video
/// direction is mined with the same functions on the transposed matrices.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranp/error.hpp"
#include "ranp/matrix.hpp"

namespace ranp {

enum class Strategy { Standard, RAN, RANP };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Standard: return "standard";
        case Strategy::RAN: return "ran";
        case Strategy::RANP: return "ranp";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& name) {
    if (name == "standard") return Strategy::Standard;
    if (name == "ran") return Strategy::RAN;
    if (name == "ranp") return Strategy::RANP;
    throw InvalidConfig("unknown strategy '" + name + "' (expected standard, ran or ranp)");
}

/// Relevance threshold separating positives (>= tau) from negatives (< tau).
class Tau {
public:
    explicit Tau(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) throw InvalidInput("tau must lie in [0, 1]");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

inline void check_gt(std::span<const double> row, std::size_t gt) {
    if (gt >= row.size()) throw InvalidInput("groundtruth index out of range");
}

inline void check_lengths(std::span<const double> sim, std::span<const double> rel) {
    if (sim.size() != rel.size()) throw InvalidInput("similarity and relevance rows differ in length");
}

}  // namespace detail

inline std::size_t hardest_negative_standard(std::span<const double> sim_row, std::size_t gt_index) {
    if (sim_row.size() < 2) throw NoCandidate("hard negative mining needs at least two candidates");
    detail::check_gt(sim_row, gt_index);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < sim_row.size(); ++j) {
        if (j == gt_index) continue;
        if (!best || sim_row[j] > sim_row[*best]) best = j;
    }
    return *best;
}

/// Hardest negative among candidates whose relevance is below tau. When a
/// groundtruth index is given it is never returned, even if its own
/// relevance falls below tau.
inline std::optional<std::size_t> hardest_negative_ran(std::span<const double> sim_row,
                                                       std::span<const double> rel_row, Tau tau,
                                                       std::optional<std::size_t> gt_index = std::nullopt) {
    detail::check_lengths(sim_row, rel_row);
    if (gt_index) detail::check_gt(sim_row, *gt_index);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < sim_row.size(); ++j) {
        if (gt_index && j == *gt_index) continue;
        if (!(rel_row[j] < tau.value())) continue;
        if (!best || sim_row[j] > sim_row[*best]) best = j;
    }
    return best;
}

/// Least similar non-groundtruth candidate, regardless of relevance. Kept for ablations.
inline std::size_t hardest_positive_naive(std::span<const double> sim_row, std::size_t gt_index) {
    if (sim_row.size() < 2) throw NoCandidate("hard positive mining needs at least two candidates");
    detail::check_gt(sim_row, gt_index);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < sim_row.size(); ++j) {
        if (j == gt_index) continue;
        if (!best || sim_row[j] < sim_row[*best]) best = j;
    }
    return *best;
}

inline std::optional<std::size_t> hardest_positive_ranp(std::span<const double> sim_row,
                                                        std::span<const double> rel_row, Tau tau) {
    detail::check_lengths(sim_row, rel_row);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < sim_row.size(); ++j) {
        if (!(rel_row[j] >= tau.value())) continue;
        if (!best || sim_row[j] < sim_row[*best]) best = j;
    }
    return best;
}

struct MinedTriplet {
    std::size_t anchor_index = 0;
    std::optional<std::size_t> negative_index;
    std::optional<std::size_t> positive_index;
    bool skipped_negative = false;
    bool skipped_positive = false;

    friend bool operator==(const MinedTriplet&, const MinedTriplet&) = default;
};

struct MinedTriplets {
    Strategy strategy = Strategy::Standard;
    std::vector<MinedTriplet> rows;

    std::size_t skipped_negatives() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.skipped_negative ? 1 : 0;
        return n;
    }

    friend bool operator==(const MinedTriplets&, const MinedTriplets&) = default;
};

/// Mines every row of `sim`. `gt[i]` is the groundtruth column of anchor i.
/// Under RAN/RANP an anchor without any negative candidate is skipped
/// entirely: it gets neither a negative nor a positive.
inline MinedTriplets mine_batch(const Matrix& sim, const Matrix& rel, const std::vector<std::size_t>& gt, Tau tau,
                                Strategy strategy) {
    if (!sim.same_shape(rel)) throw InvalidInput("similarity and relevance matrices differ in shape");
    if (gt.size() != sim.rows()) throw InvalidInput("groundtruth map size differs from the number of anchors");

    MinedTriplets out;
    out.strategy = strategy;
    out.rows.reserve(sim.rows());
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        MinedTriplet t;
        t.anchor_index = i;
        const auto s = sim.row(i);
        detail::check_gt(s, gt[i]);
        switch (strategy) {
            case Strategy::Standard:
                if (s.size() >= 2) {
                    t.negative_index = hardest_negative_standard(s, gt[i]);
                    t.positive_index = gt[i];
                } else {
                    t.skipped_negative = true;
                    t.skipped_positive = true;
                }
                break;
            case Strategy::RAN:
                t.negative_index = hardest_negative_ran(s, rel.row(i), tau, gt[i]);
                if (t.negative_index) {
                    t.positive_index = gt[i];
                } else {
                    t.skipped_negative = true;
                    t.skipped_positive = true;
                }
                break;
            case Strategy::RANP:
                t.negative_index = hardest_negative_ran(s, rel.row(i), tau, gt[i]);
                if (t.negative_index) {
                    t.positive_index = hardest_positive_ranp(s, rel.row(i), tau);
                    t.skipped_positive = !t.positive_index.has_value();
                } else {
                    t.skipped_negative = true;
                    t.skipped_positive = true;
                }
                break;
        }
        out.rows.push_back(t);
    }
    return out;
}

}  // namespace ranp
