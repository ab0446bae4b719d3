#include "grand/represent.hpp"

#include "grand/error.hpp"
#include "grand/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

namespace grand {

DescriptionStore load_description_vectors(std::istream& in) {
    DescriptionStore store;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> dim;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty()) continue;
        auto tab = body.find('\t');
        if (tab == std::string_view::npos)
            throw FormatError("line " + std::to_string(line_no) + ": expected 'iri<TAB>vector'");
        auto iri = trim(body.substr(0, tab));
        if (iri.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty IRI");
        auto fields = split(trim(body.substr(tab + 1)), ',');
        values.clear();
        for (auto f : fields) {
            try {
                values.push_back(parse_real(trim(f)));
            } catch (const FormatError&) {
                throw FormatError("line " + std::to_string(line_no) + ": bad number '" +
                                  std::string(f) + "'");
            }
            if (!std::isfinite(values.back()))
                throw FormatError("line " + std::to_string(line_no) + ": non-finite value");
        }
        if (!dim) {
            dim = values.size();
            store.vectors = VectorTable(*dim);
        } else if (values.size() != *dim) {
            throw DimMismatch(line_no, *dim, values.size());
        }
        if (store.vectors.put(iri, values)) ++store.duplicates;
    }
    return store;
}

DescriptionStore load_description_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_description_vectors(in);
}

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "concat") return FusionMode::Concat;
    if (name == "lpca" || name == "local_pca") return FusionMode::LocalPca;
    if (name == "gpca" || name == "global_pca") return FusionMode::GlobalPca;
    throw Error("unknown fusion mode '" + std::string(name) + "'");
}

std::string_view to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::Concat: return "concat";
        case FusionMode::LocalPca: return "lpca";
        case FusionMode::GlobalPca: return "gpca";
    }
    return "concat";
}

nlohmann::json FusionSpec::to_json() const {
    return {{"parts", parts},
            {"mode", to_string(mode)},
            {"pca_dim", pca_dim},
            {"l2_normalize", l2_normalize}};
}

FusionSpec FusionSpec::from_json(const nlohmann::json& j) {
    FusionSpec s;
    s.parts = j.at("parts").get<std::vector<std::string>>();
    s.mode = parse_fusion_mode(j.value("mode", std::string("concat")));
    s.pca_dim = j.value("pca_dim", s.pca_dim);
    s.l2_normalize = j.value("l2_normalize", s.l2_normalize);
    return s;
}

std::size_t segment_span(const SegmentMap& segments) {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.length;
    return n;
}

ConcatResult concat_features(std::string_view entity, std::span<const NamedSource> parts,
                             bool l2_normalize) {
    ConcatResult out;
    for (const auto& part : parts) {
        const auto dim = part.table->dim();
        out.segments.push_back({part.name, out.vector.size(), dim});
        auto row = part.table->find(entity);
        if (!row) {
            ++out.misses;
            out.vector.insert(out.vector.end(), dim, 0.0);
            continue;
        }
        const auto start = out.vector.size();
        out.vector.insert(out.vector.end(), row->begin(), row->end());
        if (l2_normalize) {
            double norm = 0;
            for (double v : *row) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0)
                for (std::size_t k = start; k < out.vector.size(); ++k) out.vector[k] /= norm;
        }
    }
    return out;
}

std::vector<double> PcaModel::apply(std::span<const double> v) const {
    if (v.size() != input_dim) throw DimMismatch(input_dim, v.size());
    std::vector<double> out(output_dim, 0.0);
    for (std::size_t k = 0; k < output_dim; ++k) {
        const auto c = component(k);
        double s = 0;
        for (std::size_t i = 0; i < input_dim; ++i) s += c[i] * (v[i] - mean[i]);
        out[k] = s;
    }
    return out;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> projection) const {
    if (projection.size() != output_dim) throw DimMismatch(output_dim, projection.size());
    std::vector<double> out(mean);
    for (std::size_t k = 0; k < output_dim; ++k) {
        const auto c = component(k);
        for (std::size_t i = 0; i < input_dim; ++i) out[i] += projection[k] * c[i];
    }
    return out;
}

nlohmann::json PcaModel::to_json() const {
    return {{"input_dim", input_dim},
            {"output_dim", output_dim},
            {"explained_variance", explained_variance}};
}

PcaModel fit_pca(std::span<const double> data, std::size_t dim, std::size_t pca_dim) {
    if (dim == 0 || data.size() % dim != 0) throw DimMismatch(dim, data.size());
    if (pca_dim == 0 || pca_dim > dim)
        throw Error("pca_dim must be in [1, " + std::to_string(dim) + "]");
    const std::size_t n = data.size() / dim;
    {
        std::set<std::vector<double>> distinct;
        for (std::size_t r = 0; r < n && distinct.size() < 2; ++r)
            distinct.emplace(data.begin() + r * dim, data.begin() + (r + 1) * dim);
        if (distinct.size() < 2) throw DegenerateInput("PCA needs at least two distinct vectors");
    }
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> x(data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    Eigen::RowVectorXd mean = x.colwise().mean();
    Mat centered = x.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DegenerateInput("covariance eigendecomposition failed");

    PcaModel m;
    m.input_dim = dim;
    m.output_dim = pca_dim;
    m.mean.assign(mean.data(), mean.data() + dim);
    m.components.resize(pca_dim * dim);
    m.explained_variance.resize(pca_dim);
    // Eigen returns eigenvalues in increasing order.
    for (std::size_t k = 0; k < pca_dim; ++k) {
        const auto col = static_cast<Eigen::Index>(dim - 1 - k);
        Eigen::VectorXd v = eig.eigenvectors().col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        std::copy(v.data(), v.data() + dim, m.components.begin() + k * dim);
        m.explained_variance[k] = std::max(0.0, eig.eigenvalues()(col));
    }
    return m;
}

std::vector<double> apply_pca(const PcaModel& m, std::span<const double> v) { return m.apply(v); }

std::vector<double> project_rows_serial(const PcaModel& m, std::span<const double> data) {
    const std::size_t n = data.size() / m.input_dim;
    std::vector<double> out(n * m.output_dim);
    for (std::size_t r = 0; r < n; ++r) {
        auto p = m.apply(data.subspan(r * m.input_dim, m.input_dim));
        std::copy(p.begin(), p.end(), out.begin() + r * m.output_dim);
    }
    return out;
}

std::vector<double> project_rows(const PcaModel& m, std::span<const double> data) {
    if (m.input_dim == 0 || data.size() % m.input_dim != 0)
        throw DimMismatch(m.input_dim, data.size());
    const auto n = static_cast<std::int64_t>(data.size() / m.input_dim);
    std::vector<double> out(static_cast<std::size_t>(n) * m.output_dim);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        const double* row = data.data() + r * m.input_dim;
        double* dst = out.data() + r * m.output_dim;
        for (std::size_t k = 0; k < m.output_dim; ++k) {
            const double* c = m.components.data() + k * m.input_dim;
            double s = 0;
            for (std::size_t i = 0; i < m.input_dim; ++i) s += c[i] * (row[i] - m.mean[i]);
            dst[k] = s;
        }
    }
    return out;
}

namespace {

std::vector<NamedSource> resolve_parts(const FusionSpec& spec, std::span<const NamedSource> sources) {
    if (spec.parts.empty()) throw Error("fusion spec needs at least one part");
    std::vector<NamedSource> out;
    for (const auto& name : spec.parts) {
        auto it = std::find_if(sources.begin(), sources.end(),
                               [&](const NamedSource& s) { return s.name == name; });
        if (it == sources.end() || it->table == nullptr)
            throw Error("no vector source named '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

std::vector<double> stack(std::span<const std::string> entities, std::span<const NamedSource> parts,
                          bool l2, std::size_t& misses, SegmentMap& segments) {
    std::vector<double> rows;
    for (const auto& e : entities) {
        auto c = concat_features(e, parts, l2);
        misses += c.misses;
        if (segments.empty()) segments = std::move(c.segments);
        rows.insert(rows.end(), c.vector.begin(), c.vector.end());
    }
    return rows;
}

}  // namespace

FusedStore build_fused_store(std::span<const std::string> entities, const FusionSpec& spec,
                             std::span<const NamedSource> sources,
                             std::span<const std::string> population) {
    auto parts = resolve_parts(spec, sources);
    FusedStore store;
    store.spec = spec;
    for (const auto& p : parts) {
        store.segments.push_back({p.name, segment_span(store.segments), p.table->dim()});
    }
    const auto in_dim = segment_span(store.segments);
    if (spec.mode != FusionMode::Concat && spec.pca_dim > in_dim)
        throw Error("pca_dim " + std::to_string(spec.pca_dim) + " exceeds concatenated dim " +
                    std::to_string(in_dim));

    SegmentMap seen;
    auto rows = stack(entities, parts, spec.l2_normalize, store.missing_count, seen);
    std::vector<double> out_rows;
    std::size_t out_dim = in_dim;
    switch (spec.mode) {
        case FusionMode::Concat:
            out_rows = std::move(rows);
            break;
        case FusionMode::LocalPca:
            store.pca = fit_pca(rows, in_dim, spec.pca_dim);
            out_rows = project_rows(*store.pca, rows);
            out_dim = spec.pca_dim;
            break;
        case FusionMode::GlobalPca: {
            if (population.empty()) throw Error("global PCA needs the graph entity population");
            std::size_t ignored = 0;
            SegmentMap unused;
            auto pop_rows = stack(population, parts, spec.l2_normalize, ignored, unused);
            store.pca = fit_pca(pop_rows, in_dim, spec.pca_dim);
            out_rows = project_rows(*store.pca, rows);
            out_dim = spec.pca_dim;
            break;
        }
    }
    store.features = VectorTable(out_dim);
    for (std::size_t i = 0; i < entities.size(); ++i)
        store.features.put(entities[i], std::span<const double>(out_rows).subspan(i * out_dim, out_dim));
    return store;
}

void save_fused_store(const FusedStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_vector_text(out, store.features);
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : store.segments)
        segs.push_back({{"part", s.part}, {"offset", s.offset}, {"length", s.length}});
    nlohmann::json side{{"fusion", store.spec.to_json()},
                        {"segment_map", segs},
                        {"missing_count", store.missing_count}};
    if (store.pca) side["pca"] = store.pca->to_json();
    std::ofstream sout(path.string() + ".json");
    if (!sout) throw IoError("cannot write sidecar for " + path.string());
    sout << side.dump(2) << '\n';
}

FusedStore load_fused_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    FusedStore store;
    store.features = read_vector_text(in);
    std::ifstream sin(path.string() + ".json");
    if (!sin) throw IoError("missing sidecar for " + path.string());
    auto side = nlohmann::json::parse(sin, nullptr, false);
    if (side.is_discarded()) throw FormatError("bad sidecar for " + path.string());
    store.spec = FusionSpec::from_json(side.at("fusion"));
    for (const auto& s : side.at("segment_map"))
        store.segments.push_back({s.at("part"), s.at("offset"), s.at("length")});
    store.missing_count = side.value("missing_count", std::size_t{0});
    return store;
}

}  // namespace grand
