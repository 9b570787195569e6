#pragma once

// Precomputed pooled-part embeddings produced by an external encoder.
//
// File layout (all integers and floats little-endian):
//   "NWRZ-EMB-1\n"
//   u32 dim
//   u64 record_count
//   record_count x {
//     u32 key_length, key bytes (instance id, UTF-8)
//     u32 filler_index
//     f64[dim] context vector
//     f64[dim] filler vector
//   }
// Records are keyed by (instance id, filler index); a corpus row with id "12_3"
// resolves to key ("12", 3), see instance_key().

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "coral_cloze/binary_io.hpp"
#include "coral_cloze/encoder.hpp"
#include "coral_cloze/errors.hpp"
#include "coral_cloze/instance.hpp"

namespace coral_cloze {

inline constexpr std::string_view kEmbeddingMagic = "NWRZ-EMB-1\n";

struct EmbeddingPair {
    std::vector<double> context;
    std::vector<double> filler;
};

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }

    void insert(InstanceKey key, EmbeddingPair pair) {
        if (pair.context.size() != dim_ || pair.filler.size() != dim_)
            throw ConfigError("embedding record has wrong dimension for table of dim " + std::to_string(dim_));
        if (!records_.emplace(std::move(key), std::move(pair)).second)
            throw ValidationError("duplicate embedding record");
    }

    const EmbeddingPair& at(const InstanceKey& key) const {
        const auto it = records_.find(key);
        if (it == records_.end())
            throw ValidationError("no embedding for instance '" + key.instance_id + "' filler " +
                                  std::to_string(key.filler_index));
        return it->second;
    }

    /// Pooled vector for a corpus row; same layout as the hashed featurizer path.
    std::vector<double> pool(std::string_view row_id, Pooling pooling) const {
        const auto& e = at(instance_key(row_id));
        return join_pooled(e.context, e.filler, pooling);
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError(path + ": cannot open for writing");
        out.write(kEmbeddingMagic.data(), static_cast<std::streamsize>(kEmbeddingMagic.size()));
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
        binary::write_le<std::uint64_t>(out, records_.size());
        for (const auto& [key, pair] : records_) {
            binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.instance_id.size()));
            out.write(key.instance_id.data(), static_cast<std::streamsize>(key.instance_id.size()));
            binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.filler_index));
            binary::write_f64s(out, pair.context);
            binary::write_f64s(out, pair.filler);
        }
        if (!out) throw ValidationError(path + ": write failed");
    }

    static EmbeddingTable load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError(path + ": cannot open file");
        std::string magic(kEmbeddingMagic.size(), '\0');
        if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kEmbeddingMagic)
            throw ValidationError(path + ": not an NWRZ-EMB-1 embedding file");
        const auto dim = binary::read_le<std::uint32_t>(in, path);
        if (dim == 0) throw ValidationError(path + ": embedding dim must be positive");
        const auto count = binary::read_le<std::uint64_t>(in, path);
        EmbeddingTable table(dim);
        for (std::uint64_t r = 0; r < count; ++r) {
            const auto key_len = binary::read_le<std::uint32_t>(in, path);
            std::string id(key_len, '\0');
            if (!in.read(id.data(), key_len)) throw ValidationError(path + ": unexpected end of file");
            const auto filler_index = binary::read_le<std::uint32_t>(in, path);
            EmbeddingPair pair{std::vector<double>(dim), std::vector<double>(dim)};
            binary::read_f64s(in, pair.context, path);
            binary::read_f64s(in, pair.filler, path);
            table.insert({std::move(id), filler_index}, std::move(pair));
        }
        if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(path + ": trailing bytes");
        return table;
    }

private:
    std::size_t dim_;
    std::map<InstanceKey, EmbeddingPair> records_;
};

}  // namespace coral_cloze
