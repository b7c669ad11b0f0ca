#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/error.hpp"
#include "concord/model.hpp"
#include "concord/nn.hpp"

namespace concord {

inline constexpr char kCheckpointMagic[8] = {'C', 'O', 'N', 'C', 'O', 'R', 'D', '1'};

// Adam slots for the trainable parameters, aligned by name.
struct AdamSnapshot {
    std::vector<std::string> names;
    std::vector<AdamState> states;
};

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64_le(std::string& out, double d) {
    put_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

struct ByteReader {
    const std::string& bytes;
    std::size_t pos = 0;

    bool exhausted() const { return pos >= bytes.size(); }

    std::uint64_t u64_le(const char* what) {
        if (pos + 8 > bytes.size())
            throw TruncatedPayloadError(std::string("checkpoint truncated while reading ") + what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }

    double f64_le(const char* what) { return std::bit_cast<double>(u64_le(what)); }
};

inline void put_tensor(std::string& out, const Tensor& t) {
    for (double v : t.data) put_f64_le(out, v);
}

inline void read_tensor(ByteReader& r, Tensor& t, const std::string& name) {
    for (double& v : t.data) v = r.f64_le(name.c_str());
}

}  // namespace detail

// Serializes the model to the CONCORD1 container: 8-byte magic, a little-
// endian u64 header length, a JSON header (config, lexicon layout, declared
// parameter shapes, trainable flags, optional optimizer block), then every
// parameter tensor as little-endian 64-bit reals in header order. The same
// state always produces the same bytes.
inline std::string checkpoint_bytes(const SiameseModel& model,
                                    const AdamSnapshot* adam = nullptr) {
    nlohmann::json header;
    header["version"] = 1;
    header["config"] = model_config_to_json(model.config);
    header["lex_layout"] = model.lex_layout;
    nlohmann::json params = nlohmann::json::array();
    for (const NamedParamConst& p : all_parameters(model))
        params.push_back({{"name", p.name}, {"shape", p.tensor->shape}});
    header["params"] = params;
    header["trainable"] = {{"gru", model.trainable.gru},
                           {"dense1", model.trainable.dense1},
                           {"dense2", model.trainable.dense2},
                           {"out", model.trainable.out}};
    if (adam) {
        nlohmann::json a;
        a["params"] = adam->names;
        std::vector<std::int64_t> ts;
        for (const AdamState& s : adam->states) ts.push_back(s.t);
        a["t"] = ts;
        const AdamState& first = adam->states.empty() ? AdamState{} : adam->states.front();
        a["lr"] = first.lr;
        a["beta1"] = first.beta1;
        a["beta2"] = first.beta2;
        a["eps"] = first.eps;
        header["adam"] = a;
    } else {
        header["adam"] = nullptr;
    }

    const std::string header_json = header.dump();
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u64_le(out, header_json.size());
    out += header_json;
    for (const NamedParamConst& p : all_parameters(model)) detail::put_tensor(out, *p.tensor);
    if (adam) {
        for (const AdamState& s : adam->states) {
            detail::put_tensor(out, s.m);
            detail::put_tensor(out, s.v);
        }
    }
    return out;
}

inline void save_checkpoint(const SiameseModel& model, const std::string& path,
                            const AdamSnapshot* adam = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path);
    const std::string bytes = checkpoint_bytes(model, adam);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write on checkpoint " + path);
}

struct LoadedCheckpoint {
    SiameseModel model;
    std::optional<AdamSnapshot> adam;
};

// Parses and validates a CONCORD1 container. Failure modes are distinct:
// BadMagicError for a file that is not a checkpoint, ShapeMismatchError
// when a declared shape disagrees with the declared config (named by
// layer), TruncatedPayloadError when the payload ends early.
inline LoadedCheckpoint load_checkpoint_bytes(const std::string& bytes) {
    if (bytes.size() < sizeof(kCheckpointMagic) ||
        bytes.compare(0, sizeof(kCheckpointMagic), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw BadMagicError("not a CONCORD1 checkpoint (bad magic)");
    detail::ByteReader reader{bytes, sizeof(kCheckpointMagic)};
    const std::uint64_t header_len = reader.u64_le("header length");
    if (reader.pos + header_len > bytes.size())
        throw TruncatedPayloadError("checkpoint truncated inside header");
    nlohmann::json header =
        nlohmann::json::parse(bytes.substr(reader.pos, header_len), nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw CheckpointError("checkpoint header is not valid JSON");
    reader.pos += header_len;

    LoadedCheckpoint result;
    ModelConfig config;
    try {
        config = model_config_from_json(header.at("config"));
        config.validate();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint header config invalid: ") + e.what());
    }
    Rng dummy(0);
    result.model = build_model(config, dummy,
                               header.value("lex_layout", std::vector<std::string>{}));
    if (header.contains("trainable") && header["trainable"].is_object()) {
        const auto& t = header["trainable"];
        result.model.trainable.gru = t.value("gru", true);
        result.model.trainable.dense1 = t.value("dense1", true);
        result.model.trainable.dense2 = t.value("dense2", true);
        result.model.trainable.out = t.value("out", true);
    }

    // declared shapes must agree with the config-derived architecture
    std::vector<NamedParam> params = all_parameters(result.model);
    if (!header.contains("params") || !header["params"].is_array() ||
        header["params"].size() != params.size())
        throw ShapeMismatchError("checkpoint declares " +
                                 std::to_string(header.value("params", nlohmann::json::array()).size()) +
                                 " parameter tensors, config requires " +
                                 std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& decl = header["params"][i];
        const std::string name = decl.value("name", "");
        const auto shape = decl.value("shape", std::vector<std::size_t>{});
        if (name != params[i].name)
            throw ShapeMismatchError("checkpoint parameter " + std::to_string(i) + " is '" + name +
                                     "', expected '" + params[i].name + "'");
        if (shape != params[i].tensor->shape)
            throw ShapeMismatchError("checkpoint layer " + name + " declares shape " +
                                     shape_str(Tensor(shape, {})) + ", config requires " +
                                     shape_str(*params[i].tensor));
    }
    for (NamedParam& p : params) detail::read_tensor(reader, *p.tensor, p.name);

    if (header.contains("adam") && header["adam"].is_object()) {
        const auto& a = header["adam"];
        AdamSnapshot snap;
        snap.names = a.value("params", std::vector<std::string>{});
        const auto ts = a.value("t", std::vector<std::int64_t>{});
        if (ts.size() != snap.names.size())
            throw CheckpointError("checkpoint optimizer block is inconsistent");
        std::vector<NamedParam> trainable = trainable_parameters(result.model);
        if (snap.names.size() != trainable.size())
            throw ShapeMismatchError("checkpoint optimizer covers " +
                                     std::to_string(snap.names.size()) +
                                     " tensors, model has " + std::to_string(trainable.size()) +
                                     " trainable");
        for (std::size_t i = 0; i < trainable.size(); ++i) {
            if (snap.names[i] != trainable[i].name)
                throw ShapeMismatchError("checkpoint optimizer slot '" + snap.names[i] +
                                         "' does not match trainable '" + trainable[i].name + "'");
            AdamState s = AdamState::init(*trainable[i].tensor);
            s.t = ts[i];
            s.lr = a.value("lr", s.lr);
            s.beta1 = a.value("beta1", s.beta1);
            s.beta2 = a.value("beta2", s.beta2);
            s.eps = a.value("eps", s.eps);
            detail::read_tensor(reader, s.m, snap.names[i] + ".m");
            detail::read_tensor(reader, s.v, snap.names[i] + ".v");
            snap.states.push_back(std::move(s));
        }
        result.adam = std::move(snap);
    }
    if (!reader.exhausted())
        throw CheckpointError("checkpoint has " + std::to_string(bytes.size() - reader.pos) +
                              " trailing bytes");
    return result;
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_checkpoint_bytes(bytes);
}

}  // namespace concord
