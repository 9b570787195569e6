#pragma once

// NWRZ-CKPT-1 checkpoint file.
//
//   NWRZ-CKPT-1
//   key=value lines (dimensions, featurizer, pooling, binning, seed, tensors)
//   end_header
//   <tensor data: f64 little-endian, tensors in the order listed by `tensors=`>
//
// The `tensors=` line lists name:shape pairs, e.g.
//   tensors=projection.weight:256x1024,projection.bias:256,...

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "coral_cloze/binary_io.hpp"
#include "coral_cloze/encoder.hpp"
#include "coral_cloze/errors.hpp"
#include "coral_cloze/model.hpp"
#include "coral_cloze/ordinal.hpp"

namespace coral_cloze {

inline constexpr std::string_view kCheckpointMagic = "NWRZ-CKPT-1";

enum class FeatureSource { hashed, embeddings };

inline std::string_view to_string(FeatureSource s) noexcept { return s == FeatureSource::hashed ? "hashed" : "embeddings"; }

struct Checkpoint {
    ModelParams params;
    FeaturizerConfig featurizer;
    FeatureSource source = FeatureSource::hashed;
    Pooling pooling = Pooling::concat;
    BinningMode binning = BinningMode::round;
    std::uint64_t seed = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {
inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<std::size_t> split_sizes(std::string_view s, const std::string& what) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        const auto part = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size()) throw ValidationError(what + ": bad integer list");
        out.push_back(v);
        if (comma == std::string_view::npos) return out;
        start = comma + 1;
    }
}

inline std::string tensor_manifest(const ModelParams& p) {
    const auto d = p.dims();
    const std::vector<std::string> shapes = {
        std::to_string(d.hidden_dim) + "x" + std::to_string(d.input_dim), std::to_string(d.hidden_dim),
        std::to_string(d.hidden_dim),                                    std::to_string(p.class_head.units()),
        std::to_string(d.hidden_dim),                                    std::to_string(p.regression_head.units())};
    std::string s;
    const auto tensors = p.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        if (t) s += ',';
        s += std::string(tensors[t].name) + ":" + shapes[t];
    }
    return s;
}
}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
    const auto d = ck.params.dims();
    out << kCheckpointMagic << '\n';
    out << "input_dim=" << d.input_dim << '\n';
    out << "hidden_dim=" << d.hidden_dim << '\n';
    out << "class_units=" << ck.params.class_head.units() << '\n';
    out << "regression_units=" << ck.params.regression_head.units() << '\n';
    out << "features=" << to_string(ck.source) << '\n';
    out << "featurizer.dim=" << ck.featurizer.dim << '\n';
    out << "featurizer.word_orders=" << detail::join_sizes(ck.featurizer.word_orders) << '\n';
    out << "featurizer.char_orders=" << detail::join_sizes(ck.featurizer.char_orders) << '\n';
    out << "featurizer.seed=" << ck.featurizer.seed << '\n';
    out << "pooling=" << to_string(ck.pooling) << '\n';
    out << "binning=" << to_string(ck.binning) << '\n';
    out << "seed=" << ck.seed << '\n';
    out << "tensors=" << detail::tensor_manifest(ck.params) << '\n';
    out << "end_header\n";
    for (const auto& t : ck.params.tensors()) binary::write_f64s(out, t.values);
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    write_checkpoint(out, ck);
    if (!out) throw ValidationError(path + ": write failed");
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& what) {
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) throw ValidationError(what + ": not an NWRZ-CKPT-1 file");
    std::map<std::string, std::string> header;
    for (;;) {
        if (!std::getline(in, line)) throw ValidationError(what + ": truncated header");
        if (line == "end_header") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(what + ": malformed header line '" + line + "'");
        header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw ValidationError(what + ": header key '" + key + "' missing");
        return it->second;
    };
    auto get_size = [&](const std::string& key) {
        const auto v = detail::split_sizes(get(key), what + " " + key);
        if (v.size() != 1) throw ValidationError(what + ": header key '" + key + "' must be one integer");
        return v.front();
    };

    Checkpoint ck;
    const ModelDims dims{get_size("input_dim"), get_size("hidden_dim")};
    if (get_size("class_units") != kClassLevels - 1 || get_size("regression_units") != kScoreLevels - 1)
        throw ValidationError(what + ": unsupported head sizes");
    const auto& source = get("features");
    if (source == "hashed") ck.source = FeatureSource::hashed;
    else if (source == "embeddings") ck.source = FeatureSource::embeddings;
    else throw ValidationError(what + ": unknown feature source '" + source + "'");
    ck.featurizer.dim = get_size("featurizer.dim");
    ck.featurizer.word_orders = detail::split_sizes(get("featurizer.word_orders"), what);
    ck.featurizer.char_orders = detail::split_sizes(get("featurizer.char_orders"), what);
    {
        const auto& s = get("featurizer.seed");
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), ck.featurizer.seed);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw ValidationError(what + ": bad featurizer.seed");
        const auto& t = get("seed");
        auto [p2, e2] = std::from_chars(t.data(), t.data() + t.size(), ck.seed);
        if (e2 != std::errc{} || p2 != t.data() + t.size()) throw ValidationError(what + ": bad seed");
    }
    try {
        ck.pooling = parse_pooling(get("pooling"));
        ck.binning = parse_binning(get("binning"));
    } catch (const ConfigError& e) {
        throw ValidationError(what + ": " + e.what());
    }
    if (dims.input_dim != pooled_dim(ck.featurizer.dim, ck.pooling))
        throw ValidationError(what + ": input_dim does not match featurizer.dim and pooling");

    ck.params = ModelParams::zeros(dims);
    if (get("tensors") != detail::tensor_manifest(ck.params))
        throw ValidationError(what + ": tensor manifest does not match declared dimensions");
    for (auto& t : ck.params.tensors()) binary::read_f64s(in, t.values, what);
    if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(what + ": trailing bytes");
    return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open checkpoint");
    return read_checkpoint(in, path);
}

}  // namespace coral_cloze
