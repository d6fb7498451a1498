#pragma once

// JSON checkpoint: shapes, row-major weights, the training config and its
// hash, a fingerprint of the dataset layout, epoch and validation nDCG.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "ranp/data.hpp"
#include "ranp/error.hpp"
#include "ranp/model.hpp"
#include "ranp/train.hpp"

namespace ranp {

inline constexpr int kCheckpointVersion = 1;

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const TrainConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

/// Depends only on what a model needs to be applied to the dataset: the
/// feature dimensions and the class vocabulary.
inline std::string dataset_fingerprint(const Dataset& ds) {
    std::string s = std::to_string(ds.video_dim()) + "/" + std::to_string(ds.text_dim());
    for (const auto& c : ds.classes) s += std::string(";") + to_string(c.cls.pos) + std::to_string(c.cls.id);
    return fnv1a_hex(s);
}

struct Checkpoint {
    ModelParams params;
    TrainConfig config;
    std::string dataset_fingerprint;
    std::size_t epoch = 0;
    std::optional<double> val_ndcg;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::ordered_json j;
    j["format"] = "ranp-checkpoint";
    j["version"] = kCheckpointVersion;
    j["video_dim"] = ck.params.video_dim();
    j["text_dim"] = ck.params.text_dim();
    j["dim"] = ck.params.dim();
    j["config"] = to_json(ck.config);
    j["config_hash"] = config_hash(ck.config);
    j["dataset_fingerprint"] = ck.dataset_fingerprint;
    j["epoch"] = ck.epoch;
    if (ck.val_ndcg) {
        j["val_ndcg"] = *ck.val_ndcg;
    } else {
        j["val_ndcg"] = nullptr;
    }
    j["w_video"] = ck.params.w_video.data();
    j["w_text"] = ck.params.w_text.data();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write checkpoint '" + path + "'");
    out << j.dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open checkpoint '" + path + "'");
    Checkpoint ck;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format").get<std::string>() != "ranp-checkpoint") {
            throw IncompatibleCheckpoint("'" + path + "' is not a checkpoint");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw IncompatibleCheckpoint("unsupported checkpoint version");
        }
        ck.config = train_config_from_json(j.at("config"));
        if (config_hash(ck.config) != j.at("config_hash").get<std::string>()) {
            throw IncompatibleCheckpoint("checkpoint config hash does not match its config");
        }
        const auto dv = j.at("video_dim").get<std::size_t>();
        const auto dt = j.at("text_dim").get<std::size_t>();
        const auto d = j.at("dim").get<std::size_t>();
        ck.params.w_video = Matrix(dv, d, j.at("w_video").get<std::vector<double>>());
        ck.params.w_text = Matrix(dt, d, j.at("w_text").get<std::vector<double>>());
        ck.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        ck.epoch = j.at("epoch").get<std::size_t>();
        if (!j.at("val_ndcg").is_null()) ck.val_ndcg = j.at("val_ndcg").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IncompatibleCheckpoint("malformed checkpoint '" + path + "': " + e.what());
    } catch (const InvalidInput& e) {
        throw IncompatibleCheckpoint("malformed checkpoint '" + path + "': " + e.what());
    }
    return ck;
}

/// Throws IncompatibleCheckpoint unless `ck` can be applied to `ds`.
inline void check_compatible(const Checkpoint& ck, const Dataset& ds) {
    if (ck.params.video_dim() != ds.video_dim() || ck.params.text_dim() != ds.text_dim()) {
        throw IncompatibleCheckpoint("checkpoint expects features of dimension " +
                                     std::to_string(ck.params.video_dim()) + "/" +
                                     std::to_string(ck.params.text_dim()) + ", dataset has " +
                                     std::to_string(ds.video_dim()) + "/" + std::to_string(ds.text_dim()));
    }
    if (ck.dataset_fingerprint != dataset_fingerprint(ds)) {
        throw IncompatibleCheckpoint("checkpoint was trained on a dataset with a different class vocabulary");
    }
}

}  // namespace ranp
