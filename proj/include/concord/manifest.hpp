#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/error.hpp"
#include "concord/run_config.hpp"

namespace concord {

inline constexpr const char* kToolVersion = "1.0.0";

// FNV-1a over the file bytes; enough to pin which inputs a run consumed.
inline std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path + " for digesting");
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ULL;
        }
        if (in.eof()) break;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// Written before a run starts: the resolved configuration, seed, input
// digests and artifact paths are enough to replay the run exactly.
struct RunManifest {
    std::string command;
    RunConfig config;
    std::vector<std::pair<std::string, std::string>> inputs;   // role -> path
    std::vector<std::pair<std::string, std::string>> outputs;  // role -> path

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["tool"] = "concord";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config"] = run_config_to_json(config);
        j["seed"] = config.train.seed;
        nlohmann::json ins = nlohmann::json::array();
        for (const auto& [role, path] : inputs)
            ins.push_back({{"role", role}, {"path", path}, {"fnv1a64", hex64(fnv1a64_file(path))}});
        j["inputs"] = ins;
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& [role, path] : outputs) outs.push_back({{"role", role}, {"path", path}});
        j["artifacts"] = outs;
        return j;
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write manifest " + path);
        out << to_json().dump(2) << "\n";
    }
};

}  // namespace concord
