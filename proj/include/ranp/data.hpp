#pragma once

/// \file data.hpp
/// \brief Dataset model, JSONL reader/writer and deterministic batch sampling.
///
/// File format, one JSON object per line:
///
///     {"kind":"class","id":0,"pos":"V","label":"take"}
///     {"kind":"video","id":"v0","features":[...]}
///     {"kind":"caption","id":"c0","video":"v0","text":"...","verbs":[0],"nouns":[3,4]}
///     {"kind":"split","name":"train","ids":["v0", ...]}
///
/// Captions may carry an optional "features" array; without it the caption
/// feature is the bag-of-class indicator over the vocabulary (verbs first,
/// then nouns, each by ascending id). Split ids are video ids.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ranp/error.hpp"
#include "ranp/matrix.hpp"
#include "ranp/semantics.hpp"

namespace ranp {

struct ClassEntry {
    ClassId cls;
    std::string label;

    friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

struct Video {
    std::string id;
    std::vector<double> features;
    std::vector<std::size_t> captions;  // indices into Dataset::captions

    friend bool operator==(const Video&, const Video&) = default;
};

struct Caption {
    CaptionAnnotation annotation;
    std::vector<double> features;
    bool explicit_features = false;

    friend bool operator==(const Caption&, const Caption&) = default;
};

inline const std::vector<std::string>& split_names() {
    static const std::vector<std::string> names{"train", "val", "test"};
    return names;
}

class Dataset {
public:
    std::vector<ClassEntry> classes;
    std::vector<Video> videos;
    std::vector<Caption> captions;
    std::map<std::string, std::vector<std::string>> splits;

    std::size_t video_dim() const { return videos.empty() ? 0 : videos.front().features.size(); }
    std::size_t text_dim() const { return captions.empty() ? 0 : captions.front().features.size(); }

    std::size_t video_index(const std::string& id) const {
        auto it = video_lookup_.find(id);
        if (it == video_lookup_.end()) throw InvalidInput("unknown video id '" + id + "'");
        return it->second;
    }

    /// Video indices of a split, in file order. Unknown split names are an error.
    std::vector<std::size_t> split_videos(const std::string& name) const {
        auto it = splits.find(name);
        if (it == splits.end()) throw InvalidInput("dataset has no split named '" + name + "'");
        std::vector<std::size_t> out;
        out.reserve(it->second.size());
        for (const auto& id : it->second) out.push_back(video_index(id));
        return out;
    }

    std::vector<std::size_t> captions_of(const std::vector<std::size_t>& video_indices) const {
        std::vector<std::size_t> out;
        for (auto v : video_indices) out.insert(out.end(), videos[v].captions.begin(), videos[v].captions.end());
        return out;
    }

    /// rho-aggregated profile of every video, by video index.
    std::vector<SemanticProfile> video_profiles(double rho) const {
        std::vector<SemanticProfile> out;
        out.reserve(videos.size());
        for (const auto& v : videos) {
            std::vector<CaptionAnnotation> anns;
            for (auto c : v.captions) anns.push_back(captions[c].annotation);
            out.push_back(aggregate_video_profile(anns, rho));
        }
        return out;
    }

    /// Position of each class in the bag-of-class caption feature.
    std::map<ClassId, std::size_t> bag_of_class_index() const {
        std::vector<ClassId> ids;
        for (const auto& c : classes) ids.push_back(c.cls);
        std::sort(ids.begin(), ids.end(), [](const ClassId& a, const ClassId& b) {
            if (a.pos != b.pos) return a.pos == PartOfSpeech::Verb;
            return a.id < b.id;
        });
        std::map<ClassId, std::size_t> index;
        for (std::size_t k = 0; k < ids.size(); ++k) index[ids[k]] = k;
        return index;
    }

    std::vector<double> bag_of_class(const SemanticProfile& p) const {
        const auto index = bag_of_class_index();
        std::vector<double> out(index.size(), 0.0);
        for (const auto* set : {&p.verbs(), &p.nouns()}) {
            for (const auto& c : *set) {
                auto it = index.find(c);
                if (it == index.end()) throw InvalidInput("class not in vocabulary");
                out[it->second] = 1.0;
            }
        }
        return out;
    }

    /// Rebuilds lookups, links captions to videos, fills default caption
    /// features and checks every invariant. `lines` optionally maps records
    /// to file lines for diagnostics.
    void finalize(const std::unordered_map<std::string, std::size_t>* lines = nullptr);

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.classes == b.classes && a.videos == b.videos && a.captions == b.captions && a.splits == b.splits;
    }

private:
    std::unordered_map<std::string, std::size_t> video_lookup_;
};

inline void Dataset::finalize(const std::unordered_map<std::string, std::size_t>* lines) {
    auto line_of = [&](const std::string& key) -> std::size_t {
        if (!lines) return 0;
        auto it = lines->find(key);
        return it == lines->end() ? 0 : it->second;
    };

    std::set<ClassId> known;
    for (const auto& c : classes) {
        if (!known.insert(c.cls).second) {
            throw DuplicateId(std::string("duplicate class ") + to_string(c.cls.pos) + ":" + std::to_string(c.cls.id),
                              line_of(std::string("class:") + to_string(c.cls.pos) + ":" + std::to_string(c.cls.id)));
        }
    }

    video_lookup_.clear();
    for (std::size_t i = 0; i < videos.size(); ++i) {
        auto& v = videos[i];
        if (!video_lookup_.emplace(v.id, i).second) {
            throw DuplicateId("duplicate video id '" + v.id + "'", line_of("video:" + v.id));
        }
        if (v.features.size() != videos.front().features.size()) {
            throw DimensionMismatch("video '" + v.id + "' has " + std::to_string(v.features.size()) +
                                        " features, expected " + std::to_string(videos.front().features.size()),
                                    line_of("video:" + v.id));
        }
        v.captions.clear();
    }

    std::set<std::string> caption_ids;
    std::optional<std::size_t> explicit_dim;
    bool any_default = false;
    for (std::size_t k = 0; k < captions.size(); ++k) {
        auto& c = captions[k];
        const auto& a = c.annotation;
        const std::size_t line = line_of("caption:" + a.caption_id);
        if (!caption_ids.insert(a.caption_id).second) {
            throw DuplicateId("duplicate caption id '" + a.caption_id + "'", line);
        }
        auto vit = video_lookup_.find(a.video_id);
        if (vit == video_lookup_.end()) {
            throw DanglingReference("caption '" + a.caption_id + "' references unknown video '" + a.video_id + "'",
                                    line);
        }
        videos[vit->second].captions.push_back(k);
        for (const auto* set : {&a.profile.verbs(), &a.profile.nouns()}) {
            for (const auto& cls : *set) {
                if (!known.count(cls)) {
                    throw DanglingReference("caption '" + a.caption_id + "' references unknown class " +
                                                to_string(cls.pos) + ":" + std::to_string(cls.id),
                                            line);
                }
            }
        }
        if (c.explicit_features) {
            if (explicit_dim && *explicit_dim != c.features.size()) {
                throw DimensionMismatch("caption '" + a.caption_id + "' has " + std::to_string(c.features.size()) +
                                            " features, expected " + std::to_string(*explicit_dim),
                                        line);
            }
            explicit_dim = c.features.size();
        } else {
            any_default = true;
        }
    }
    if (any_default) {
        const auto index = bag_of_class_index();
        if (explicit_dim && *explicit_dim != index.size()) {
            throw DimensionMismatch("captions mix explicit features of dimension " + std::to_string(*explicit_dim) +
                                        " with bag-of-class features of dimension " + std::to_string(index.size()),
                                    0);
        }
        for (auto& c : captions) {
            if (!c.explicit_features) c.features = bag_of_class(c.annotation.profile);
        }
    }

    for (const auto& v : videos) {
        if (v.captions.empty()) throw DatasetError("video '" + v.id + "' has no captions", line_of("video:" + v.id));
    }

    std::map<std::string, std::string> owner;
    for (const auto& [name, ids] : splits) {
        for (const auto& id : ids) {
            if (!video_lookup_.count(id)) {
                throw DanglingReference("split '" + name + "' references unknown video '" + id + "'",
                                        line_of("split:" + name));
            }
            auto [it, fresh] = owner.emplace(id, name);
            if (!fresh) {
                throw DuplicateId("video '" + id + "' appears in splits '" + it->second + "' and '" + name + "'",
                                  line_of("split:" + name));
            }
        }
    }
}

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename T>
T require(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("field '") + key + "' has the wrong type", line);
    }
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in) {
    using detail::json;
    Dataset ds;
    std::unordered_map<std::string, std::size_t> lines;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line);
        }
        if (!obj.is_object()) throw ParseError("record is not a JSON object", line);
        const auto kind = detail::require<std::string>(obj, "kind", line);
        if (kind == "class") {
            const auto pos = detail::require<std::string>(obj, "pos", line);
            if (pos != "V" && pos != "N") throw ParseError("class pos must be \"V\" or \"N\"", line);
            const auto id = detail::require<std::int64_t>(obj, "id", line);
            if (id < 0) throw ParseError("class id must be non-negative", line);
            ClassEntry e{{static_cast<std::uint32_t>(id), pos == "V" ? PartOfSpeech::Verb : PartOfSpeech::Noun},
                         obj.value("label", std::string{})};
            lines.insert_or_assign("class:" + pos + ":" + std::to_string(id), line);
            ds.classes.push_back(std::move(e));
        } else if (kind == "video") {
            Video v;
            v.id = detail::require<std::string>(obj, "id", line);
            v.features = detail::require<std::vector<double>>(obj, "features", line);
            lines.insert_or_assign("video:" + v.id, line);
            ds.videos.push_back(std::move(v));
        } else if (kind == "caption") {
            Caption c;
            c.annotation.caption_id = detail::require<std::string>(obj, "id", line);
            c.annotation.video_id = detail::require<std::string>(obj, "video", line);
            c.annotation.text = obj.value("text", std::string{});
            const auto verbs = detail::require<std::vector<std::uint32_t>>(obj, "verbs", line);
            const auto nouns = detail::require<std::vector<std::uint32_t>>(obj, "nouns", line);
            c.annotation.profile = SemanticProfile::from_ids(verbs, nouns);
            if (obj.contains("features")) {
                c.features = detail::require<std::vector<double>>(obj, "features", line);
                c.explicit_features = true;
            }
            lines.insert_or_assign("caption:" + c.annotation.caption_id, line);
            ds.captions.push_back(std::move(c));
        } else if (kind == "split") {
            const auto name = detail::require<std::string>(obj, "name", line);
            if (std::find(split_names().begin(), split_names().end(), name) == split_names().end()) {
                throw ParseError("split name must be train, val or test", line);
            }
            if (ds.splits.count(name)) throw DuplicateId("split '" + name + "' defined twice", line);
            ds.splits[name] = detail::require<std::vector<std::string>>(obj, "ids", line);
            lines.insert_or_assign("split:" + name, line);
        } else {
            throw ParseError("unknown record kind '" + kind + "'", line);
        }
    }
    ds.finalize(&lines);
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open dataset file '" + path + "'");
    return parse_dataset(in);
}

/// Writes the JSONL form. Output is a pure function of the dataset.
inline void write_dataset(std::ostream& out, const Dataset& ds) {
    using detail::ordered_json;
    for (const auto& c : ds.classes) {
        ordered_json o;
        o["kind"] = "class";
        o["id"] = c.cls.id;
        o["pos"] = to_string(c.cls.pos);
        o["label"] = c.label;
        out << o.dump() << '\n';
    }
    for (const auto& v : ds.videos) {
        ordered_json o;
        o["kind"] = "video";
        o["id"] = v.id;
        o["features"] = v.features;
        out << o.dump() << '\n';
    }
    for (const auto& c : ds.captions) {
        const auto& a = c.annotation;
        ordered_json o;
        o["kind"] = "caption";
        o["id"] = a.caption_id;
        o["video"] = a.video_id;
        o["text"] = a.text;
        std::vector<std::uint32_t> verbs, nouns;
        for (const auto& x : a.profile.verbs()) verbs.push_back(x.id);
        for (const auto& x : a.profile.nouns()) nouns.push_back(x.id);
        o["verbs"] = verbs;
        o["nouns"] = nouns;
        if (c.explicit_features) o["features"] = c.features;
        out << o.dump() << '\n';
    }
    for (const auto& name : split_names()) {
        auto it = ds.splits.find(name);
        if (it == ds.splits.end()) continue;
        ordered_json o;
        o["kind"] = "split";
        o["name"] = name;
        o["ids"] = it->second;
        out << o.dump() << '\n';
    }
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write dataset file '" + path + "'");
    write_dataset(out, ds);
}

// ---------------------------------------------------------------------------
// Batch sampling

enum class CaptionSampling { Uniform, First };

struct BatchPair {
    std::size_t video = 0;    // index into Dataset::videos
    std::size_t caption = 0;  // index into Dataset::captions

    friend bool operator==(const BatchPair&, const BatchPair&) = default;
};

using Batch = std::vector<BatchPair>;

/// Per-epoch shuffled (video, caption) batches over one split. Every video
/// of the split appears exactly once per epoch; the last batch may be short.
class BatchSampler {
public:
    BatchSampler(const Dataset& ds, const std::string& split, std::size_t batch_size, std::uint64_t seed,
                 CaptionSampling sampling = CaptionSampling::Uniform)
        : ds_(&ds), videos_(ds.split_videos(split)), batch_size_(batch_size), seed_(seed), sampling_(sampling) {
        if (batch_size_ < 2) throw InvalidConfig("batch size must be at least 2");
        if (videos_.empty()) throw InvalidInput("split '" + split + "' is empty");
    }

    std::vector<Batch> epoch(std::uint64_t index) const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
        std::mt19937_64 rng(seq);
        auto order = videos_;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Batch> out;
        for (std::size_t start = 0; start < order.size(); start += batch_size_) {
            Batch b;
            const std::size_t end = std::min(order.size(), start + batch_size_);
            for (std::size_t k = start; k < end; ++k) {
                const auto& caps = ds_->videos[order[k]].captions;
                std::size_t pick = 0;
                if (sampling_ == CaptionSampling::Uniform && caps.size() > 1) {
                    pick = std::uniform_int_distribution<std::size_t>(0, caps.size() - 1)(rng);
                }
                b.push_back({order[k], caps[pick]});
            }
            out.push_back(std::move(b));
        }
        return out;
    }

    std::size_t batch_size() const noexcept { return batch_size_; }

private:
    const Dataset* ds_;
    std::vector<std::size_t> videos_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    CaptionSampling sampling_;
};

inline std::vector<Batch> sample_batches(const Dataset& ds, const std::string& split, std::size_t batch_size,
                                         std::uint64_t seed, std::uint64_t epoch = 0) {
    return BatchSampler(ds, split, batch_size, seed).epoch(epoch);
}

}  // namespace ranp
