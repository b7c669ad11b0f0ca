#pragma once

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "concord/error.hpp"
#include "concord/harness.hpp"
#include "concord/model.hpp"

namespace concord {

// Everything a training run can configure, with the documented defaults.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::size_t parse_size(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

inline double parse_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

// Flat key=value text format; `#` starts a comment. Unknown keys error so
// typos cannot silently fall back to defaults.
inline void apply_config_line(RunConfig& c, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_size;
    if (key == "embed_dim") c.model.embed_dim = parse_size(value, key);
    else if (key == "gru_hidden") c.model.gru_hidden = parse_size(value, key);
    else if (key == "dense_sizes") {
        std::vector<std::size_t> sizes;
        std::string item;
        std::istringstream ss(value);
        while (std::getline(ss, item, ',')) sizes.push_back(parse_size(detail::trim(item), key));
        c.model.dense_sizes = std::move(sizes);
    } else if (key == "maxlen") c.model.maxlen = parse_size(value, key);
    else if (key == "dropout_rate") c.model.dropout_rate = parse_double(value, key);
    else if (key == "feature_mode") c.model.feature_mode = feature_mode_from_string(value);
    else if (key == "batch_size") c.train.batch_size = parse_size(value, key);
    else if (key == "lr") c.train.lr = parse_double(value, key);
    else if (key == "max_epochs") c.train.max_epochs = parse_size(value, key);
    else if (key == "patience") c.train.patience = parse_size(value, key);
    else if (key == "seed") c.train.seed = std::strtoull(value.c_str(), nullptr, 10);
    else if (key == "shuffle") c.train.shuffle = parse_bool(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        apply_config_line(base, detail::trim(line.substr(0, eq)),
                          detail::trim(line.substr(eq + 1)));
    }
    return base;
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["model"] = model_config_to_json(c.model);
    j["train"] = {{"batch_size", c.train.batch_size}, {"lr", c.train.lr},
                  {"max_epochs", c.train.max_epochs}, {"patience", c.train.patience},
                  {"seed", c.train.seed},             {"shuffle", c.train.shuffle}};
    return j;
}

}  // namespace concord
