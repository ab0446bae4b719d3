#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grand {

/// Dense row store keyed by token/IRI. Rows are contiguous, row-major.
class VectorTable {
public:
    VectorTable() = default;
    explicit VectorTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }

    /// Inserts or overwrites. Returns true when the key already existed.
    bool put(std::string_view key, std::span<const double> values);

    std::optional<std::span<const double>> find(std::string_view key) const;
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * dim_, dim_);
    }
    const std::string& key(std::size_t i) const { return keys_[i]; }
    const std::vector<std::string>& keys() const noexcept { return keys_; }
    std::span<const double> data() const noexcept { return data_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> keys_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// word2vec text layout: `<count> <dim>` header then `<key> <v1> ... <vdim>`.
/// Values use shortest round-trip formatting, so reading back is exact.
void write_vector_text(std::ostream& out, const VectorTable& table);

/// Throws FormatError on a bad header or row count, DimMismatch on short rows.
VectorTable read_vector_text(std::istream& in);

}  // namespace grand
