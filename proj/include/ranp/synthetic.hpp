#pragma once

/// \file synthetic.hpp
/// \brief Seeded generator of datasets with controllable semantic overlap.
///
/// Every video draws a latent set of verb and noun classes. Each class slot
/// is taken from a small shared vocabulary with probability `overlap_rate`,
/// otherwise a class private to that video is minted, so with
/// overlap_rate = 0 distinct videos never share a class. Captions keep a
/// random subset of the latent classes.
///
/// Features of both modalities are indicator vectors over the shared
/// vocabulary (verbs first, then nouns) plus isotropic Gaussian noise.
/// Private classes have no feature dimension.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ranp/data.hpp"
#include "ranp/error.hpp"
#include "ranp/semantics.hpp"

namespace ranp {

struct SyntheticConfig {
    std::size_t n_train = 512;
    std::size_t n_val = 128;
    std::size_t n_test = 256;
    std::size_t captions_per_video = 2;
    std::size_t shared_verbs = 16;
    std::size_t shared_nouns = 48;
    std::size_t verbs_per_item = 1;
    std::size_t nouns_per_item = 2;
    double overlap_rate = 0.8;
    /// Probability that a caption mentions a given latent class of its video.
    double caption_keep = 0.75;
    double feature_noise_sigma = 0.1;
    std::uint64_t seed = 1;

    std::size_t n_videos() const { return n_train + n_val + n_test; }
    std::size_t feature_dim() const { return shared_verbs + shared_nouns; }

    void validate() const {
        if (n_train + n_val + n_test == 0) throw InvalidConfig("synthetic dataset needs at least one video");
        if (captions_per_video == 0) throw InvalidConfig("captions_per_video must be at least 1");
        if (verbs_per_item + nouns_per_item == 0) throw InvalidConfig("items need at least one class");
        if (shared_verbs + shared_nouns == 0) throw InvalidConfig("shared vocabulary is empty");
        if (!(overlap_rate >= 0.0 && overlap_rate <= 1.0)) throw InvalidConfig("overlap_rate must lie in [0, 1]");
        if (!(caption_keep >= 0.0 && caption_keep <= 1.0)) throw InvalidConfig("caption_keep must lie in [0, 1]");
        if (!(feature_noise_sigma >= 0.0)) throw InvalidConfig("feature_noise_sigma must be non-negative");
        if (overlap_rate > 0.0 && (verbs_per_item > shared_verbs || nouns_per_item > shared_nouns)) {
            throw InvalidConfig("shared vocabulary too small for the requested classes per item");
        }
    }
};

/// Named presets used by the command line.
inline SyntheticConfig synthetic_preset(const std::string& name) {
    SyntheticConfig c;
    if (name == "default") return c;
    if (name == "small") {
        c.n_train = 128;
        c.n_val = 32;
        c.n_test = 64;
        return c;
    }
    if (name == "disjoint") {
        c.overlap_rate = 0.0;
        return c;
    }
    if (name == "dense") {
        c.shared_verbs = 4;
        c.shared_nouns = 8;
        c.overlap_rate = 0.9;
        return c;
    }
    throw InvalidConfig("unknown synthetic preset '" + name + "' (expected default, small, disjoint or dense)");
}

inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset ds;
    for (std::size_t k = 0; k < cfg.shared_verbs; ++k) {
        ds.classes.push_back({verb(static_cast<std::uint32_t>(k)), "verb" + std::to_string(k)});
    }
    for (std::size_t k = 0; k < cfg.shared_nouns; ++k) {
        ds.classes.push_back({noun(static_cast<std::uint32_t>(k)), "noun" + std::to_string(k)});
    }
    auto next_private_verb = static_cast<std::uint32_t>(cfg.shared_verbs);
    auto next_private_noun = static_cast<std::uint32_t>(cfg.shared_nouns);

    // Feature slot of a shared class, or -1 for private classes.
    auto slot = [&](const ClassId& c) -> long {
        if (c.pos == PartOfSpeech::Verb) return c.id < cfg.shared_verbs ? static_cast<long>(c.id) : -1;
        return c.id < cfg.shared_nouns ? static_cast<long>(cfg.shared_verbs + c.id) : -1;
    };
    auto features_of = [&](const ClassSet& verbs, const ClassSet& nouns) {
        std::vector<double> f(cfg.feature_dim(), 0.0);
        for (const auto* set : {&verbs, &nouns}) {
            for (const auto& c : *set) {
                if (auto s = slot(c); s >= 0) f[static_cast<std::size_t>(s)] = 1.0;
            }
        }
        for (double& x : f) x += cfg.feature_noise_sigma * noise(rng);
        return f;
    };

    auto draw_latent = [&](std::size_t count, std::size_t shared, std::uint32_t& next_private, PartOfSpeech pos) {
        ClassSet out;
        std::vector<std::uint32_t> pool(shared);
        for (std::size_t k = 0; k < shared; ++k) pool[k] = static_cast<std::uint32_t>(k);
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t used_shared = 0;
        for (std::size_t k = 0; k < count; ++k) {
            if (coin(rng) < cfg.overlap_rate) {
                out.insert({pool[used_shared++], pos});
            } else {
                const std::uint32_t id = next_private++;
                out.insert({id, pos});
                ds.classes.push_back({{id, pos}, std::string(pos == PartOfSpeech::Verb ? "pverb" : "pnoun") +
                                                     std::to_string(id)});
            }
        }
        return out;
    };

    // Keeps each class with probability caption_keep, but never drops a
    // non-empty set entirely.
    auto subsample = [&](const ClassSet& latent) {
        ClassSet kept;
        for (const auto& c : latent) {
            if (coin(rng) < cfg.caption_keep) kept.insert(c);
        }
        if (kept.empty() && !latent.empty()) {
            auto it = latent.begin();
            std::advance(it, std::uniform_int_distribution<std::size_t>(0, latent.size() - 1)(rng));
            kept.insert(*it);
        }
        return kept;
    };

    std::vector<std::string> ids;
    for (std::size_t v = 0; v < cfg.n_videos(); ++v) {
        const auto latent_verbs = draw_latent(cfg.verbs_per_item, cfg.shared_verbs, next_private_verb, PartOfSpeech::Verb);
        const auto latent_nouns = draw_latent(cfg.nouns_per_item, cfg.shared_nouns, next_private_noun, PartOfSpeech::Noun);
        Video video;
        video.id = "v" + std::to_string(v);
        video.features = features_of(latent_verbs, latent_nouns);
        ids.push_back(video.id);
        for (std::size_t k = 0; k < cfg.captions_per_video; ++k) {
            Caption c;
            c.annotation.caption_id = video.id + "c" + std::to_string(k);
            c.annotation.video_id = video.id;
            ClassSet verbs = cfg.captions_per_video == 1 ? latent_verbs : subsample(latent_verbs);
            ClassSet nouns = cfg.captions_per_video == 1 ? latent_nouns : subsample(latent_nouns);
            std::string text;
            for (const auto* set : {&verbs, &nouns}) {
                for (const auto& cls : *set) {
                    if (!text.empty()) text += ' ';
                    text += (cls.pos == PartOfSpeech::Verb ? "verb" : "noun") + std::to_string(cls.id);
                }
            }
            c.annotation.text = std::move(text);
            c.features = features_of(verbs, nouns);
            c.explicit_features = true;
            c.annotation.profile = SemanticProfile(std::move(verbs), std::move(nouns));
            ds.captions.push_back(std::move(c));
        }
        ds.videos.push_back(std::move(video));
    }

    auto take = [&](std::size_t from, std::size_t count) {
        return std::vector<std::string>(ids.begin() + static_cast<long>(from),
                                        ids.begin() + static_cast<long>(from + count));
    };
    ds.splits["train"] = take(0, cfg.n_train);
    ds.splits["val"] = take(cfg.n_train, cfg.n_val);
    ds.splits["test"] = take(cfg.n_train + cfg.n_val, cfg.n_test);
    ds.finalize();
    return ds;
}

}  // namespace ranp
