#pragma once

/// \file semantics.hpp
/// \brief Verb/noun class profiles and the relevance between two items.
///
/// An item (caption or video) is described by the set of verb classes and
/// the set of noun classes it mentions. The relevance of two items is the
/// mean of the Jaccard index of their verb sets and of their noun sets, so
/// it lies in [0, 1]. Videos with several captions get a profile made of
/// the classes that occur in a large enough share of those captions.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ranp/error.hpp"
#include "ranp/matrix.hpp"

namespace ranp {

enum class PartOfSpeech : std::uint8_t { Verb, Noun };

inline const char* to_string(PartOfSpeech pos) {
    return pos == PartOfSpeech::Verb ? "V" : "N";
}

struct ClassId {
    std::uint32_t id = 0;
    PartOfSpeech pos = PartOfSpeech::Noun;

    friend auto operator<=>(const ClassId&, const ClassId&) = default;
};

inline ClassId verb(std::uint32_t id) { return {id, PartOfSpeech::Verb}; }
inline ClassId noun(std::uint32_t id) { return {id, PartOfSpeech::Noun}; }

using ClassSet = std::set<ClassId>;

/// Verb and noun classes of one item. Either set may be empty.
class SemanticProfile {
public:
    SemanticProfile() = default;

    /// Throws InvalidInput if a class lands in the set of the wrong part of speech.
    SemanticProfile(ClassSet verbs, ClassSet nouns) : verbs_(std::move(verbs)), nouns_(std::move(nouns)) {
        check_pos(verbs_, PartOfSpeech::Verb);
        check_pos(nouns_, PartOfSpeech::Noun);
    }

    static SemanticProfile from_ids(const std::vector<std::uint32_t>& verb_ids,
                                    const std::vector<std::uint32_t>& noun_ids) {
        ClassSet v, n;
        for (auto id : verb_ids) v.insert(verb(id));
        for (auto id : noun_ids) n.insert(noun(id));
        return {std::move(v), std::move(n)};
    }

    const ClassSet& verbs() const noexcept { return verbs_; }
    const ClassSet& nouns() const noexcept { return nouns_; }
    const ClassSet& classes(PartOfSpeech pos) const noexcept {
        return pos == PartOfSpeech::Verb ? verbs_ : nouns_;
    }

    friend bool operator==(const SemanticProfile&, const SemanticProfile&) = default;

private:
    static void check_pos(const ClassSet& set, PartOfSpeech expected) {
        for (const auto& c : set) {
            if (c.pos != expected) {
                throw InvalidInput(std::string("class ") + std::to_string(c.id) + " has part of speech " +
                                   to_string(c.pos) + " but was placed in the " + to_string(expected) +
                                   " set");
            }
        }
    }

    ClassSet verbs_;
    ClassSet nouns_;
};

struct RelevanceOptions {
    /// Jaccard value used when both sets of one part of speech are empty.
    double empty_empty = 1.0;
};

/// |a ∩ b| / |a ∪ b|. Both sets must hold a single part of speech (the same one).
inline double class_jaccard(const ClassSet& a, const ClassSet& b, const RelevanceOptions& opts = {}) {
    auto check = [](const ClassSet& s, const char* name) {
        if (!s.empty() && s.begin()->pos != s.rbegin()->pos) {
            throw InvalidInput(std::string("mixed part of speech in set ") + name);
        }
    };
    check(a, "a");
    check(b, "b");
    if (!a.empty() && !b.empty() && a.begin()->pos != b.begin()->pos) {
        throw InvalidInput("class_jaccard compares sets of different part of speech");
    }
    if (a.empty() && b.empty()) return opts.empty_empty;

    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    const std::size_t unite = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(unite);
}

inline double relevance(const SemanticProfile& x, const SemanticProfile& y, const RelevanceOptions& opts = {}) {
    return 0.5 * (class_jaccard(x.verbs(), y.verbs(), opts) + class_jaccard(x.nouns(), y.nouns(), opts));
}

/// Profile of a video from the profiles of its captions: a class is kept
/// when it occurs in at least `rho * captions.size()` captions.
inline SemanticProfile aggregate_profiles(const std::vector<SemanticProfile>& captions, double rho) {
    if (captions.empty()) throw InvalidInput("cannot aggregate an empty caption list");
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in (0, 1]");
    if (captions.size() == 1) return captions.front();

    const double threshold = rho * static_cast<double>(captions.size());
    auto reduce = [&](PartOfSpeech pos) {
        std::map<ClassId, std::size_t> counts;
        for (const auto& p : captions) {
            for (const auto& c : p.classes(pos)) ++counts[c];
        }
        ClassSet kept;
        for (const auto& [c, n] : counts) {
            if (static_cast<double>(n) >= threshold) kept.insert(c);
        }
        return kept;
    };
    return {reduce(PartOfSpeech::Verb), reduce(PartOfSpeech::Noun)};
}

struct CaptionAnnotation {
    std::string caption_id;
    std::string video_id;
    std::string text;
    SemanticProfile profile;

    friend bool operator==(const CaptionAnnotation&, const CaptionAnnotation&) = default;
};

/// Aggregates annotated captions that must all belong to the same video.
inline SemanticProfile aggregate_video_profile(const std::vector<CaptionAnnotation>& captions, double rho) {
    if (captions.empty()) throw InvalidInput("cannot aggregate an empty caption list");
    std::vector<SemanticProfile> profiles;
    profiles.reserve(captions.size());
    for (const auto& c : captions) {
        if (c.video_id != captions.front().video_id) {
            throw InvalidInput("captions of different videos (" + captions.front().video_id + ", " + c.video_id +
                               ") passed to aggregate_video_profile");
        }
        profiles.push_back(c.profile);
    }
    return aggregate_profiles(profiles, rho);
}

/// Entry (i, j) is relevance(anchors[i], candidates[j]).
inline Matrix relevance_matrix(const std::vector<SemanticProfile>& anchors,
                               const std::vector<SemanticProfile>& candidates, const RelevanceOptions& opts = {}) {
    if (anchors.empty() || candidates.empty()) throw InvalidInput("relevance_matrix needs non-empty inputs");
    Matrix out(anchors.size(), candidates.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        for (std::size_t j = 0; j < candidates.size(); ++j) out(i, j) = relevance(anchors[i], candidates[j], opts);
    }
    return out;
}

}  // namespace ranp
