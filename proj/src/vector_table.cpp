#include "grand/vector_table.hpp"

#include "grand/error.hpp"
#include "grand/util.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace grand {

bool VectorTable::put(std::string_view key, std::span<const double> values) {
    if (values.size() != dim_) throw DimMismatch(dim_, values.size());
    std::string k(key);
    if (auto it = index_.find(k); it != index_.end()) {
        std::copy(values.begin(), values.end(), data_.begin() + it->second * dim_);
        return true;
    }
    index_.emplace(k, keys_.size());
    keys_.push_back(std::move(k));
    data_.insert(data_.end(), values.begin(), values.end());
    return false;
}

std::optional<std::span<const double>> VectorTable::find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return row(it->second);
}

void write_vector_text(std::ostream& out, const VectorTable& table) {
    out << table.size() << ' ' << table.dim() << '\n';
    std::string line;
    for (std::size_t i = 0; i < table.size(); ++i) {
        line = table.key(i);
        for (double v : table.row(i)) {
            line.push_back(' ');
            line += format_real(v);
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out) throw IoError("failed writing vectors");
}

namespace {

std::size_t parse_count(std::string_view tok) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw FormatError("bad header field '" + std::string(tok) + "'");
    return v;
}

}  // namespace

VectorTable read_vector_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing vector header");
    auto header = split(trim(line), ' ');
    if (header.size() != 2) throw FormatError("header must be '<count> <dim>'");
    const auto count = parse_count(header[0]);
    const auto dim = parse_count(header[1]);
    VectorTable table(dim);
    std::vector<double> values(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty()) continue;
        auto fields = split(body, ' ');
        if (fields.size() != dim + 1) throw DimMismatch(line_no, dim, fields.size() - 1);
        for (std::size_t k = 0; k < dim; ++k) values[k] = parse_real(fields[k + 1]);
        table.put(fields[0], values);
    }
    if (table.size() != count)
        throw FormatError("header declares " + std::to_string(count) + " rows, found " +
                          std::to_string(table.size()));
    return table;
}

}  // namespace grand
