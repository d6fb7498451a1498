#pragma once

/// \file metrics.hpp
/// \brief Relevance-graded ranking metrics: DCG, nDCG, AP and mAP.
///
/// nDCG uses the graded relevance in [0, 1]; AP treats a candidate as
/// relevant only when its relevance is exactly 1. Reports are expressed in
/// percent for the text-to-video and video-to-text directions plus their
/// arithmetic mean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ranp/error.hpp"
#include "ranp/matrix.hpp"

namespace ranp {

/// Sum over ranks k = 1..n_r of rel_k / log2(k + 1).
inline double dcg(std::span<const double> relevances_in_rank_order, std::size_t n_r) {
    if (n_r > relevances_in_rank_order.size()) throw InvalidInput("dcg: n_r exceeds list length");
    double sum = 0.0;
    for (std::size_t k = 1; k <= n_r; ++k) {
        sum += relevances_in_rank_order[k - 1] / std::log2(static_cast<double>(k) + 1.0);
    }
    return sum;
}

/// A metric value for one anchor; `defined` is false when the metric has
/// no meaning for that anchor (nothing relevant in the list).
struct AnchorMetric {
    double value = 0.0;
    bool defined = true;
};

/// Candidates of one anchor sorted by descending similarity, ties by
/// ascending candidate index.
struct RankedList {
    std::size_t anchor = 0;
    std::vector<std::size_t> candidates;
    std::vector<double> similarities;
    std::vector<double> relevances;
};

inline RankedList rank_candidates(std::size_t anchor, std::span<const double> sim_row,
                                  std::span<const double> rel_row) {
    if (sim_row.size() != rel_row.size()) throw InvalidInput("rank_candidates: row lengths differ");
    RankedList list;
    list.anchor = anchor;
    list.candidates.resize(sim_row.size());
    std::iota(list.candidates.begin(), list.candidates.end(), std::size_t{0});
    std::stable_sort(list.candidates.begin(), list.candidates.end(),
                     [&](std::size_t a, std::size_t b) { return sim_row[a] > sim_row[b]; });
    for (auto c : list.candidates) {
        list.similarities.push_back(sim_row[c]);
        list.relevances.push_back(rel_row[c]);
    }
    return list;
}

/// DCG over the whole list normalized by the DCG of the same relevances in
/// descending order. Zero and undefined when nothing has positive relevance.
inline AnchorMetric ndcg(std::span<const double> relevances_in_rank_order) {
    std::vector<double> ideal(relevances_in_rank_order.begin(), relevances_in_rank_order.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double idcg = dcg(ideal, ideal.size());
    if (!(idcg > 0.0)) return {0.0, false};
    return {dcg(relevances_in_rank_order, relevances_in_rank_order.size()) / idcg, true};
}

inline AnchorMetric ndcg(const RankedList& list) { return ndcg(list.relevances); }

/// Binary-relevance AP: a candidate counts as relevant iff its relevance is exactly 1.
inline AnchorMetric average_precision(std::span<const double> relevances_in_rank_order) {
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < relevances_in_rank_order.size(); ++k) {
        if (relevances_in_rank_order[k] == 1.0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits == 0) return {0.0, false};
    return {sum / static_cast<double>(hits), true};
}

inline AnchorMetric average_precision(const RankedList& list) { return average_precision(list.relevances); }

/// Means over anchors of one direction. `map` is absent when no anchor has a
/// candidate of relevance 1.
struct DirectionMetrics {
    double ndcg = 0.0;
    std::optional<double> map;
    std::size_t anchors = 0;
    std::size_t ndcg_undefined = 0;
    std::size_t ap_defined = 0;
};

inline DirectionMetrics evaluate_direction(const Matrix& sim, const Matrix& rel) {
    if (!sim.same_shape(rel)) throw InvalidInput("evaluate: similarity and relevance shapes differ");
    if (sim.rows() == 0 || sim.cols() == 0) throw InvalidInput("evaluate: empty similarity matrix");
    DirectionMetrics out;
    out.anchors = sim.rows();
    double ndcg_sum = 0.0;
    double ap_sum = 0.0;
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        const auto list = rank_candidates(i, sim.row(i), rel.row(i));
        const auto n = ndcg(list);
        ndcg_sum += n.value;
        out.ndcg_undefined += n.defined ? 0 : 1;
        const auto ap = average_precision(list);
        if (ap.defined) {
            ap_sum += ap.value;
            ++out.ap_defined;
        }
    }
    out.ndcg = ndcg_sum / static_cast<double>(out.anchors);
    if (out.ap_defined > 0) out.map = ap_sum / static_cast<double>(out.ap_defined);
    return out;
}

/// Values in percent. `*_avg` is the plain mean of the two directions.
struct MetricsReport {
    double ndcg_t2v = 0.0;
    double ndcg_v2t = 0.0;
    double ndcg_avg = 0.0;
    std::optional<double> map_t2v;
    std::optional<double> map_v2t;
    std::optional<double> map_avg;

    /// Swaps the t2v and v2t columns.
    MetricsReport transposed() const {
        MetricsReport r = *this;
        std::swap(r.ndcg_t2v, r.ndcg_v2t);
        std::swap(r.map_t2v, r.map_v2t);
        return r;
    }
};

/// `sim_v2t` and `rel_v2t` have videos as rows and captions as columns.
inline MetricsReport evaluate_matrices(const Matrix& sim_v2t, const Matrix& rel_v2t) {
    const auto v2t = evaluate_direction(sim_v2t, rel_v2t);
    const auto t2v = evaluate_direction(sim_v2t.transposed(), rel_v2t.transposed());
    MetricsReport r;
    r.ndcg_v2t = 100.0 * v2t.ndcg;
    r.ndcg_t2v = 100.0 * t2v.ndcg;
    r.ndcg_avg = 0.5 * (r.ndcg_t2v + r.ndcg_v2t);
    if (v2t.map && t2v.map) {
        r.map_v2t = 100.0 * *v2t.map;
        r.map_t2v = 100.0 * *t2v.map;
        r.map_avg = 0.5 * (*r.map_t2v + *r.map_v2t);
    }
    return r;
}

}  // namespace ranp
