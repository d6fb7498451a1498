#pragma once

/// \file model.hpp
/// \brief Two-tower linear embedding model with cosine similarity.
///
/// Each tower is a linear projection followed by L2 normalization, so the
/// similarity of a video and a caption is the dot product of their unit
/// embeddings. Gradients of the mined-triplet loss are computed analytically
/// with the mined indices treated as constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ranp/error.hpp"
#include "ranp/loss.hpp"
#include "ranp/matrix.hpp"
#include "ranp/mining.hpp"

namespace ranp {

struct ModelParams {
    Matrix w_video;  // d_v x d
    Matrix w_text;   // d_t x d

    std::size_t dim() const noexcept { return w_video.cols(); }
    std::size_t video_dim() const noexcept { return w_video.rows(); }
    std::size_t text_dim() const noexcept { return w_text.rows(); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct GradientSet {
    Matrix grad_w_video;
    Matrix grad_w_text;
};

/// Uniform in [-1/sqrt(d_in), 1/sqrt(d_in)] per tower.
inline ModelParams init_params(std::size_t video_dim, std::size_t text_dim, std::size_t dim, std::uint64_t seed) {
    if (video_dim == 0 || text_dim == 0 || dim == 0) throw InvalidConfig("model dimensions must be positive");
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t rows) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix m(rows, dim);
        for (auto& x : m.data()) x = u(rng);
        return m;
    };
    ModelParams p;
    p.w_video = fill(video_dim);
    p.w_text = fill(text_dim);
    return p;
}

struct Embedding {
    std::vector<double> values;
    double norm = 0.0;  // norm before normalization
    bool degenerate = false;
};

/// Projects `features` through `w` and normalizes. A zero projection stays
/// zero and is flagged degenerate.
inline Embedding embed(std::span<const double> features, const Matrix& w) {
    if (features.size() != w.rows()) throw InvalidInput("feature dimension does not match the projection");
    Embedding e;
    e.values.assign(w.cols(), 0.0);
    for (std::size_t k = 0; k < features.size(); ++k) {
        const double x = features[k];
        if (x == 0.0) continue;
        const auto wr = w.row(k);
        for (std::size_t c = 0; c < wr.size(); ++c) e.values[c] += x * wr[c];
    }
    double sq = 0.0;
    for (double v : e.values) sq += v * v;
    e.norm = std::sqrt(sq);
    if (e.norm == 0.0) {
        e.degenerate = true;
        return e;
    }
    for (double& v : e.values) v /= e.norm;
    return e;
}

struct CosineSimilarity {
    double value = 0.0;
    bool degenerate = false;
};

inline CosineSimilarity cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidInput("cosine_similarity on vectors of different length");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        dot += u[k] * v[k];
        nu += u[k] * u[k];
        nv += v[k] * v[k];
    }
    if (nu == 0.0 || nv == 0.0) return {0.0, true};
    return {std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0), false};
}

struct ForwardPass {
    Matrix video_embeddings;    // B_v x d, unit rows
    Matrix caption_embeddings;  // B_c x d, unit rows
    std::vector<double> video_norms;
    std::vector<double> caption_norms;
    Matrix sim;  // B_v x B_c
    std::size_t degenerate = 0;
};

inline ForwardPass forward_pass(const Matrix& videos, const Matrix& captions, const ModelParams& params) {
    if (videos.rows() == 0 || captions.rows() == 0) throw InvalidInput("forward pass on an empty batch");
    if (videos.cols() != params.video_dim() || captions.cols() != params.text_dim()) {
        throw InvalidInput("batch feature dimensions do not match the model");
    }
    const std::size_t d = params.dim();
    ForwardPass f;
    f.video_embeddings = Matrix(videos.rows(), d);
    f.caption_embeddings = Matrix(captions.rows(), d);
    auto run = [&](const Matrix& x, const Matrix& w, Matrix& out, std::vector<double>& norms) {
        norms.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto e = embed(x.row(i), w);
            f.degenerate += e.degenerate ? 1 : 0;
            norms[i] = e.norm;
            std::copy(e.values.begin(), e.values.end(), out.row(i).begin());
        }
    };
    run(videos, params.w_video, f.video_embeddings, f.video_norms);
    run(captions, params.w_text, f.caption_embeddings, f.caption_norms);

    f.sim = Matrix(videos.rows(), captions.rows());
    for (std::size_t i = 0; i < videos.rows(); ++i) {
        const auto u = f.video_embeddings.row(i);
        for (std::size_t j = 0; j < captions.rows(); ++j) {
            const auto w = f.caption_embeddings.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += u[c] * w[c];
            f.sim(i, j) = std::clamp(dot, -1.0, 1.0);
        }
    }
    return f;
}

/// Pairwise cosine similarities, videos as rows.
inline Matrix forward_batch(const Matrix& videos, const Matrix& captions, const ModelParams& params) {
    return forward_pass(videos, captions, params).sim;
}

/// Features of a batch of (video, caption) pairs; row i of both matrices
/// forms the groundtruth pair i.
struct PairedFeatures {
    Matrix videos;
    Matrix captions;
};

inline std::vector<std::size_t> identity_map(std::size_t n) {
    std::vector<std::size_t> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = i;
    return gt;
}

struct MinedBatch {
    MinedTriplets v2t;
    MinedTriplets t2v;
};

struct LossAndGradients {
    LossBreakdown v2t;
    LossBreakdown t2v;
    LossBreakdown combined;
    GradientSet grads;
};

/// Bidirectional loss of a paired batch under fixed mined triplets.
inline LossBreakdown mined_loss(const PairedFeatures& batch, const ModelParams& params, const MinedBatch& mined,
                                const Margins& margins, const DirectionWeights& weights = {}) {
    const Matrix sim = forward_batch(batch.videos, batch.captions, params);
    const auto gt = identity_map(sim.rows());
    const auto v2t = batch_loss(sim, mined.v2t, gt, margins);
    const auto t2v = batch_loss(sim.transposed(), mined.t2v, gt, margins);
    return combine(v2t, weights.v2t, t2v, weights.t2v);
}

namespace detail {

// Gradient through z -> z / |z| for a unit vector u = z / |z|.
inline void normalize_backward(std::span<const double> u, double norm, std::span<double> du) {
    if (norm == 0.0) {
        std::fill(du.begin(), du.end(), 0.0);
        return;
    }
    double proj = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) proj += u[c] * du[c];
    for (std::size_t c = 0; c < u.size(); ++c) du[c] = (du[c] - proj * u[c]) / norm;
}

}  // namespace detail

/// Loss and its gradients w.r.t. both projection matrices, holding the
/// mined indices fixed.
inline LossAndGradients loss_gradients(const PairedFeatures& batch, const ModelParams& params,
                                       const MinedBatch& mined, const Margins& margins,
                                       const DirectionWeights& weights = {}) {
    if (batch.videos.rows() != batch.captions.rows()) throw InvalidInput("paired batch has unequal sides");
    const auto f = forward_pass(batch.videos, batch.captions, params);
    const std::size_t n = f.sim.rows();
    const std::size_t d = params.dim();
    const auto gt = identity_map(n);
    const Matrix sim_t2v = f.sim.transposed();

    LossAndGradients out;
    out.v2t = batch_loss(f.sim, mined.v2t, gt, margins);
    out.t2v = batch_loss(sim_t2v, mined.t2v, gt, margins);
    out.combined = combine(out.v2t, weights.v2t, out.t2v, weights.t2v);

    // dL/dsim in video-rows layout.
    Matrix g = batch_loss_sim_gradient(f.sim, mined.v2t, gt, margins);
    const Matrix g_t2v = batch_loss_sim_gradient(sim_t2v, mined.t2v, gt, margins);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) g(i, j) = weights.v2t * g(i, j) + weights.t2v * g_t2v(j, i);
    }

    Matrix du(n, d), dw(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            const auto u = f.video_embeddings.row(i);
            const auto w = f.caption_embeddings.row(j);
            for (std::size_t c = 0; c < d; ++c) {
                du(i, c) += gij * w[c];
                dw(j, c) += gij * u[c];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        detail::normalize_backward(f.video_embeddings.row(i), f.video_norms[i], du.row(i));
        detail::normalize_backward(f.caption_embeddings.row(i), f.caption_norms[i], dw.row(i));
    }

    auto project_back = [&](const Matrix& x, const Matrix& dz, std::size_t in_dim) {
        Matrix grad(in_dim, d);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto xi = x.row(i);
            const auto dzi = dz.row(i);
            for (std::size_t k = 0; k < in_dim; ++k) {
                if (xi[k] == 0.0) continue;
                auto gr = grad.row(k);
                for (std::size_t c = 0; c < d; ++c) gr[c] += xi[k] * dzi[c];
            }
        }
        return grad;
    };
    out.grads.grad_w_video = project_back(batch.videos, du, params.video_dim());
    out.grads.grad_w_text = project_back(batch.captions, dw, params.text_dim());
    return out;
}

inline ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, double lr) {
    if (!(lr > 0.0)) throw InvalidConfig("learning rate must be positive");
    if (!params.w_video.same_shape(grads.grad_w_video) || !params.w_text.same_shape(grads.grad_w_text)) {
        throw InvalidInput("gradient shapes do not match the parameters");
    }
    ModelParams next = params;
    auto step = [&](Matrix& w, const Matrix& g) {
        for (std::size_t k = 0; k < w.data().size(); ++k) {
            const double gk = g.data()[k];
            if (!std::isfinite(gk)) throw TrainingDiverged("non-finite gradient entry");
            w.data()[k] -= lr * gk;
        }
    };
    step(next.w_video, grads.grad_w_video);
    step(next.w_text, grads.grad_w_text);
    return next;
}

}  // namespace ranp
