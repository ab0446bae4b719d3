#pragma once

#include "grand/vector_table.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace grand {

/// Externally produced description vectors (e.g. sentence embeddings).
struct DescriptionStore {
    VectorTable vectors;
    std::size_t duplicates = 0;  // repeated IRIs; the last row wins

    std::size_t dim() const noexcept { return vectors.dim(); }
};

/// TSV rows `iri \t f1,f2,...,fd`. Throws DimMismatch(line) on ragged rows
/// and FormatError on unparsable ones. An empty source gives an empty store.
DescriptionStore load_description_vectors(std::istream& in);
DescriptionStore load_description_vectors(const std::filesystem::path& path);

enum class FusionMode { Concat, LocalPca, GlobalPca };

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode);

/// Names a vector source: one of the six embedding variants or "description".
struct FusionSpec {
    std::vector<std::string> parts;
    FusionMode mode = FusionMode::Concat;
    std::size_t pca_dim = 200;
    bool l2_normalize = false;

    nlohmann::json to_json() const;
    static FusionSpec from_json(const nlohmann::json& j);
};

struct Segment {
    std::string part;
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const Segment&) const = default;
};
using SegmentMap = std::vector<Segment>;

std::size_t segment_span(const SegmentMap& segments);

struct NamedSource {
    std::string name;
    const VectorTable* table = nullptr;
};

struct ConcatResult {
    std::vector<double> vector;
    SegmentMap segments;
    std::size_t misses = 0;  // parts with no row for the entity (zero-filled)
};

/// Concatenates `parts` in order; a missing entity contributes zeros.
ConcatResult concat_features(std::string_view entity, std::span<const NamedSource> parts,
                             bool l2_normalize = false);

/// Centered projection onto the top principal axes of a fitting population.
struct PcaModel {
    std::vector<double> mean;
    std::vector<double> components;  // output_dim x input_dim, row-major
    std::vector<double> explained_variance;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;

    std::span<const double> component(std::size_t k) const {
        return std::span<const double>(components).subspan(k * input_dim, input_dim);
    }
    /// components * (v - mean). Throws DimMismatch.
    std::vector<double> apply(std::span<const double> v) const;
    /// mean + components^T * projection.
    std::vector<double> reconstruct(std::span<const double> projection) const;

    nlohmann::json to_json() const;
};

/// Rows of `data` (count x dim, row-major) form the population. Covariance
/// uses 1/N normalisation; components are sorted by decreasing eigenvalue and
/// signed so the largest-magnitude coordinate is positive.
/// Throws DegenerateInput for fewer than two distinct rows.
PcaModel fit_pca(std::span<const double> data, std::size_t dim, std::size_t pca_dim);

std::vector<double> apply_pca(const PcaModel& m, std::span<const double> v);

/// Projects every row of `data`; parallel over rows.
std::vector<double> project_rows(const PcaModel& m, std::span<const double> data);
std::vector<double> project_rows_serial(const PcaModel& m, std::span<const double> data);

struct FusedStore {
    FusionSpec spec;
    SegmentMap segments;  // layout of the pre-PCA concatenation
    VectorTable features;
    std::optional<PcaModel> pca;
    std::size_t missing_count = 0;

    std::size_t dim() const noexcept { return features.dim(); }
};

/// Concat: raw rows for `entities`. LocalPca: fit on `entities`. GlobalPca: fit
/// on `population` (all graph entities) and project `entities`.
FusedStore build_fused_store(std::span<const std::string> entities, const FusionSpec& spec,
                             std::span<const NamedSource> sources,
                             std::span<const std::string> population = {});

/// Text vectors at `path` plus `<path>.json` carrying the spec, segment map,
/// miss count and PCA summary.
void save_fused_store(const FusedStore& store, const std::filesystem::path& path);
FusedStore load_fused_store(const std::filesystem::path& path);

}  // namespace grand
