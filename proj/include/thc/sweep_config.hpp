#pragma once

// JSON form of SweepConfig. Requires the single-header nlohmann/json (vendor/json.hpp).

#include "thc/experiment.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

namespace thc {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::string_view where,
                                std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw Error(Errc::InvalidConfig, std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(Errc::InvalidConfig, "unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace detail

/// Keys: alpha_grid, k, base_seed, test, parallel_folds,
/// model{encoder_levels, channels_per_level, dense_widths},
/// train{epochs, batch_size, learning_rate, optimizer, loss_weights{reconstruction, prediction}}.
/// Missing keys keep their defaults; unknown keys are an error.
inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    using detail::read_key;
    detail::reject_unknown_keys(j, "sweep config", {"alpha_grid", "k", "base_seed", "test", "parallel_folds", "model", "train"});
    SweepConfig c;
    read_key(j, "alpha_grid", c.alpha_grid);
    read_key(j, "k", c.k);
    read_key(j, "base_seed", c.base_seed);
    read_key(j, "parallel_folds", c.parallel_folds);
    if (j.contains("test")) {
        std::string t;
        read_key(j, "test", t);
        c.test = parse_test_kind(t);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown_keys(m, "model", {"encoder_levels", "channels_per_level", "dense_widths"});
        read_key(m, "encoder_levels", c.model.encoder_levels);
        read_key(m, "channels_per_level", c.model.channels_per_level);
        read_key(m, "dense_widths", c.model.dense_widths);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::reject_unknown_keys(t, "train", {"epochs", "batch_size", "learning_rate", "optimizer", "loss_weights"});
        read_key(t, "epochs", c.train.epochs);
        read_key(t, "batch_size", c.train.batch_size);
        read_key(t, "learning_rate", c.train.learning_rate);
        if (t.contains("optimizer")) {
            std::string o;
            read_key(t, "optimizer", o);
            if (o == "adam") c.train.optimizer = OptimizerKind::Adam;
            else if (o == "sgd") c.train.optimizer = OptimizerKind::Sgd;
            else throw Error(Errc::InvalidConfig, "optimizer must be adam or sgd");
        }
        if (t.contains("loss_weights")) {
            const auto& w = t.at("loss_weights");
            detail::reject_unknown_keys(w, "loss_weights", {"reconstruction", "prediction"});
            read_key(w, "reconstruction", c.train.loss_weights.reconstruction);
            read_key(w, "prediction", c.train.loss_weights.prediction);
        }
    }
    c.validate();
    return c;
}

inline SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    return sweep_config_from_json(j);
}

} // namespace thc
