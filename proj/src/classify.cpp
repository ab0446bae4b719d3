#include "grand/classify.hpp"

#include "grand/error.hpp"
#include "grand/eval.hpp"
#include "grand/kernels.hpp"
#include "grand/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>

namespace grand {

std::string_view to_string(OutputHead head) {
    return head == OutputHead::Sigmoid ? "sigmoid" : "softmax";
}

OutputHead parse_output_head(std::string_view name) {
    if (name == "softmax") return OutputHead::Softmax;
    if (name == "sigmoid") return OutputHead::Sigmoid;
    throw FormatError("unknown output head '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<std::size_t> dims, OutputHead head) : head_(head) {
    if (dims.size() < 2) throw Error("an MLP needs at least input and output dims");
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] == 0 || dims[l + 1] == 0) throw Error("layer dims must be positive");
        DenseLayer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.weights.assign(layer.in * layer.out, 0.0);
        layer.bias.assign(layer.out, 0.0);
        layers_.push_back(std::move(layer));
    }
}

Mlp Mlp::initialized(std::vector<std::size_t> dims, OutputHead head, std::uint64_t seed) {
    Mlp m(std::move(dims), head);
    Rng rng(derive_seed(seed, 0x3117));
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
        auto& layer = m.layers_[l];
        double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        if (l + 1 == m.layers_.size()) limit *= 0.1;
        std::uniform_real_distribution<double> u(-limit, limit);
        for (auto& w : layer.weights) w = u(rng);
    }
    return m;
}

std::vector<std::size_t> Mlp::dims() const {
    std::vector<std::size_t> d;
    if (layers_.empty()) return d;
    d.push_back(layers_.front().in);
    for (const auto& l : layers_) d.push_back(l.out);
    return d;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    if (x.size() != input_dim()) throw DimMismatch(input_dim(), x.size());
    std::vector<double> cur(x.begin(), x.end()), next;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        next.assign(layer.out, 0.0);
        kernels::serial::dense_forward({1, layer.in, layer.out}, cur, layer.weights, layer.bias, next);
        if (l + 1 < layers_.size())
            for (auto& v : next) v = std::max(0.0, v);
        cur.swap(next);
    }
    return cur;
}

bool Mlp::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(layers_.begin(), layers_.end(), [&](const DenseLayer& l) {
        return std::all_of(l.weights.begin(), l.weights.end(), finite) &&
               std::all_of(l.bias.begin(), l.bias.end(), finite);
    });
}

bool Mlp::operator==(const Mlp& o) const {
    if (head_ != o.head_ || layers_.size() != o.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& a = layers_[l];
        const auto& b = o.layers_[l];
        if (a.in != b.in || a.out != b.out || a.weights != b.weights || a.bias != b.bias)
            return false;
    }
    return true;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - mx));
    for (auto& v : p) v /= sum;
    return p;
}

LossGrad softmax_ce(std::span<const double> logits, ClassId target) {
    if (target >= logits.size()) throw Error("target class out of range");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (double s : logits) sum += std::exp(s - mx);
    LossGrad out;
    out.loss = std::log(sum) - (logits[target] - mx);
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - mx) / sum;
    out.grad[target] -= 1.0;
    return out;
}

namespace {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x) = -log sigmoid(-x)
inline double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::vector<std::uint8_t> to_bits(const LabelSet& labels, std::size_t n) {
    std::vector<std::uint8_t> bits(n, 0);
    for (auto c : labels) bits.at(c) = 1;
    return bits;
}

LossGrad example_loss(std::span<const double> logits, const LabelSet& labels, OutputHead head) {
    if (head == OutputHead::Softmax) {
        if (labels.empty()) throw Error("softmax target needs a label");
        return softmax_ce(logits, labels.front());
    }
    const auto bits = to_bits(labels, logits.size());
    return sigmoid_bce(logits, bits);
}

}  // namespace

LossGrad sigmoid_bce(std::span<const double> logits, std::span<const std::uint8_t> targets) {
    if (logits.size() != targets.size()) throw DimMismatch(logits.size(), targets.size());
    LossGrad out;
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double s = logits[i];
        // -t log s(x) - (1-t) log(1-s(x)) = t softplus(-x) + (1-t) softplus(x)
        out.loss += targets[i] ? softplus(-s) : softplus(s);
        out.grad[i] = sigmoid(s) - (targets[i] ? 1.0 : 0.0);
    }
    return out;
}

MlpGradient::MlpGradient(const Mlp& m) {
    for (const auto& l : m.layers()) {
        weights.emplace_back(l.weights.size(), 0.0);
        bias.emplace_back(l.bias.size(), 0.0);
    }
}

void MlpGradient::zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

namespace {

struct BatchPass {
    std::vector<std::vector<double>> activations;  // [0] = input, [l+1] = layer l output
};

BatchPass forward_batch(const Mlp& m, std::span<const double> x, std::size_t batch, bool parallel) {
    BatchPass pass;
    pass.activations.emplace_back(x.begin(), x.end());
    const auto& layers = m.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<double> y(batch * layer.out);
        kernels::DenseShape shape{batch, layer.in, layer.out};
        if (parallel)
            kernels::parallel::dense_forward(shape, pass.activations.back(), layer.weights, layer.bias, y);
        else
            kernels::serial::dense_forward(shape, pass.activations.back(), layer.weights, layer.bias, y);
        if (l + 1 < layers.size())
            for (auto& v : y) v = std::max(0.0, v);
        pass.activations.push_back(std::move(y));
    }
    return pass;
}

}  // namespace

double loss_and_gradient(const Mlp& m, std::span<const double> x, std::span<const LabelSet> labels,
                         MlpGradient& grad, bool parallel) {
    const std::size_t batch = labels.size();
    if (x.size() != batch * m.input_dim()) throw DimMismatch(batch * m.input_dim(), x.size());
    grad.zero();
    if (batch == 0) return 0.0;
    auto pass = forward_batch(m, x, batch, parallel);
    const auto& layers = m.layers();
    const std::size_t classes = m.num_classes();

    double loss = 0;
    const double inv = 1.0 / static_cast<double>(batch);
    std::vector<double> delta(batch * classes);
    const auto& logits = pass.activations.back();
    for (std::size_t i = 0; i < batch; ++i) {
        auto lg = example_loss(std::span<const double>(logits).subspan(i * classes, classes),
                               labels[i], m.head());
        loss += lg.loss;
        for (std::size_t c = 0; c < classes; ++c) delta[i * classes + c] = lg.grad[c] * inv;
    }

    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        kernels::DenseShape shape{batch, layer.in, layer.out};
        const auto& input = pass.activations[l];
        if (parallel)
            kernels::parallel::dense_backward_params(shape, input, delta, grad.weights[l], grad.bias[l]);
        else
            kernels::serial::dense_backward_params(shape, input, delta, grad.weights[l], grad.bias[l]);
        if (l == 0) break;
        std::vector<double> prev(batch * layer.in);
        if (parallel)
            kernels::parallel::dense_backward_input(shape, delta, layer.weights, prev);
        else
            kernels::serial::dense_backward_input(shape, delta, layer.weights, prev);
        for (std::size_t k = 0; k < prev.size(); ++k)
            if (input[k] <= 0.0) prev[k] = 0.0;  // ReLU gate
        delta.swap(prev);
    }
    return loss * inv;
}

double batch_loss(const Mlp& m, std::span<const double> x, std::span<const LabelSet> labels) {
    const std::size_t batch = labels.size();
    if (x.size() != batch * m.input_dim()) throw DimMismatch(batch * m.input_dim(), x.size());
    if (batch == 0) return 0.0;
    auto pass = forward_batch(m, x, batch, false);
    const auto classes = m.num_classes();
    double loss = 0;
    for (std::size_t i = 0; i < batch; ++i)
        loss += example_loss(std::span<const double>(pass.activations.back()).subspan(i * classes, classes),
                             labels[i], m.head())
                    .loss;
    return loss / static_cast<double>(batch);
}

Adam::Adam(const Mlp& m, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& l : m.layers()) {
        m_w_.emplace_back(l.weights.size(), 0.0);
        v_w_.emplace_back(l.weights.size(), 0.0);
        m_b_.emplace_back(l.bias.size(), 0.0);
        v_b_.emplace_back(l.bias.size(), 0.0);
    }
}

void Adam::step(Mlp& m, const MlpGradient& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto update = [&](std::vector<double>& p, const std::vector<double>& grad,
                      std::vector<double>& mom, std::vector<double>& var) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            mom[i] = cfg_.beta1 * mom[i] + (1.0 - cfg_.beta1) * grad[i];
            var[i] = cfg_.beta2 * var[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            p[i] -= cfg_.lr * (mom[i] / c1) / (std::sqrt(var[i] / c2) + cfg_.eps);
        }
    };
    auto& layers = m.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights, g.weights[l], m_w_[l], v_w_[l]);
        update(layers[l].bias, g.bias[l], m_b_[l], v_b_[l]);
    }
}

nlohmann::json TrainSpec::to_json() const {
    nlohmann::json j{{"batch_size", batch_size},
                     {"epochs", epochs},
                     {"lr", adam.lr},
                     {"beta1", adam.beta1},
                     {"beta2", adam.beta2},
                     {"eps", adam.eps},
                     {"seed", seed},
                     {"hidden", hidden}};
    if (early_stop_patience) j["early_stop_patience"] = *early_stop_patience;
    return j;
}

TrainSpec TrainSpec::from_json(const nlohmann::json& j) {
    TrainSpec s;
    s.batch_size = j.value("batch_size", s.batch_size);
    s.epochs = j.value("epochs", s.epochs);
    s.adam.lr = j.value("lr", s.adam.lr);
    s.adam.beta1 = j.value("beta1", s.adam.beta1);
    s.adam.beta2 = j.value("beta2", s.adam.beta2);
    s.adam.eps = j.value("eps", s.adam.eps);
    s.seed = j.value("seed", s.seed);
    s.hidden = j.value("hidden", s.hidden);
    if (j.contains("early_stop_patience")) s.early_stop_patience = j["early_stop_patience"].get<std::size_t>();
    return s;
}

LabelSet predict_from_logits(std::span<const double> logits, OutputHead head) {
    if (logits.empty()) return {};
    // max_element returns the first maximum, i.e. the lowest class id.
    const auto best = static_cast<ClassId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (head == OutputHead::Softmax) return {best};
    LabelSet out;
    for (std::size_t c = 0; c < logits.size(); ++c)
        if (sigmoid(logits[c]) >= 0.5) out.push_back(static_cast<ClassId>(c));
    if (out.empty()) out.push_back(best);
    return out;
}

LabelSet predict(const Mlp& m, std::span<const double> x) {
    return predict_from_logits(m.forward(x), m.head());
}

namespace {

double validation_micro_f1(const Mlp& m, const TrainingData& val) {
    PredictionSet p;
    for (std::size_t i = 0; i < val.size(); ++i) p.add(predict(m, val.row(i)), val.labels[i]);
    return micro_f1(p, val.num_classes);
}

}  // namespace

ClassifierResult train_classifier(const TrainingData& train, const TrainingData* validation,
                                  OutputHead head, const TrainSpec& spec,
                                  const EpochCallback& on_epoch) {
    if (train.size() == 0) throw EmptyTrainSet();
    if (train.features.size() != train.size() * train.dim)
        throw DimMismatch(train.size() * train.dim, train.features.size());
    if (spec.batch_size == 0) throw Error("batch size must be positive");
    if (head == OutputHead::Softmax) {
        for (const auto& l : train.labels)
            if (l.size() != 1) throw Error("multi-class training needs exactly one label per example");
    }
    std::vector<std::size_t> dims{train.dim};
    dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
    dims.push_back(train.num_classes);

    ClassifierResult result;
    result.model = Mlp::initialized(dims, head, spec.seed);
    Mlp& model = result.model;
    Adam adam(model, spec.adam);
    MlpGradient grad(model);

    std::optional<Mlp> best;
    double best_f1 = -1;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train.size());
    std::vector<double> xb;
    std::vector<LabelSet> yb;
    for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(spec.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
            const auto end = std::min(order.size(), start + spec.batch_size);
            xb.clear();
            yb.clear();
            for (std::size_t i = start; i < end; ++i) {
                auto r = train.row(order[i]);
                xb.insert(xb.end(), r.begin(), r.end());
                yb.push_back(train.labels[order[i]]);
            }
            loss_sum += loss_and_gradient(model, xb, yb, grad, spec.parallel);
            adam.step(model, grad);
            ++batches;
        }
        if (!model.all_finite())
            throw NonFiniteUpdate("classifier parameters non-finite at epoch " + std::to_string(epoch));
        EpochReport report{epoch, loss_sum / static_cast<double>(batches), std::nullopt};
        if (on_epoch) on_epoch(epoch, model);
        if (validation && validation->size() > 0) {
            const double f1 = validation_micro_f1(model, *validation);
            report.validation_micro_f1 = f1;
            if (f1 > best_f1) {
                best_f1 = f1;
                best = model;
                result.selected_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        result.history.push_back(report);
        if (spec.early_stop_patience && best && since_best > *spec.early_stop_patience) break;
    }
    if (best) {
        result.model = std::move(*best);
    } else {
        result.selected_epoch = result.history.empty() ? 0 : result.history.back().epoch;
    }
    return result;
}

TypeHierarchy TypeHierarchy::from_parents(
    const std::vector<std::pair<std::string, std::optional<std::string>>>& entries) {
    std::map<std::string, std::optional<std::string>> parent_of;
    for (const auto& [cls, parent] : entries) {
        if (cls.empty()) throw InconsistentHierarchy("empty class name");
        auto [it, inserted] = parent_of.emplace(cls, parent);
        if (!inserted && it->second != parent)
            throw InconsistentHierarchy("class " + cls + " has more than one parent");
    }
    for (const auto& [cls, parent] : entries) {
        if (parent && !parent_of.contains(*parent))
            parent_of.emplace(*parent, std::nullopt);  // parents named only as parents are roots
    }
    TypeHierarchy h;
    std::map<std::string, ClassId> id;
    for (const auto& [cls, parent] : parent_of) {
        id.emplace(cls, static_cast<ClassId>(h.names_.size()));
        h.names_.push_back(cls);
    }
    h.parent_.resize(h.names_.size());
    h.children_.resize(h.names_.size());
    for (const auto& [cls, parent] : parent_of) {
        if (parent) {
            if (*parent == cls) throw CyclicHierarchy(cls);
            h.parent_[id[cls]] = id[*parent];
            h.children_[id[*parent]].push_back(id[cls]);
        }
    }
    h.level_.assign(h.names_.size(), 0);
    for (ClassId c = 0; c < h.names_.size(); ++c) {
        std::size_t depth = 1;
        auto cur = h.parent_[c];
        while (cur) {
            if (++depth > h.names_.size()) throw CyclicHierarchy(h.names_[c]);
            cur = h.parent_[*cur];
        }
        h.level_[c] = depth;
        if (h.by_level_.size() < depth) h.by_level_.resize(depth);
        h.by_level_[depth - 1].push_back(c);
    }
    return h;
}

std::optional<ClassId> TypeHierarchy::find(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return std::nullopt;
    return static_cast<ClassId>(it - names_.begin());
}

std::optional<ClassId> TypeHierarchy::ancestor_at_level(ClassId c, std::size_t level) const {
    if (level == 0 || level > level_.at(c)) return std::nullopt;
    ClassId cur = c;
    while (level_[cur] > level) cur = *parent_[cur];
    return cur;
}

std::string TypeHierarchy::digest() const {
    std::string canon;
    for (ClassId c = 0; c < names_.size(); ++c) {
        canon += names_[c];
        canon += '\t';
        if (parent_[c]) canon += names_[*parent_[c]];
        canon += '\n';
    }
    return sha256_hex(canon);
}

TypeHierarchy load_hierarchy(std::istream& in) {
    std::vector<std::pair<std::string, std::optional<std::string>>> entries;
    std::string line;
    while (std::getline(in, line)) {
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto fields = split(body, '\t');
        auto cls = std::string(trim(fields[0]));
        std::optional<std::string> parent;
        if (fields.size() > 1 && !trim(fields[1]).empty()) parent = std::string(trim(fields[1]));
        entries.emplace_back(std::move(cls), std::move(parent));
    }
    return TypeHierarchy::from_parents(entries);
}

TypeHierarchy load_hierarchy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_hierarchy(in);
}

TrainingData project_to_level(const TrainingData& data, const TypeHierarchy& h, std::size_t level) {
    const auto& classes = h.classes_at_level(level);
    std::map<ClassId, ClassId> local;
    for (std::size_t i = 0; i < classes.size(); ++i) local.emplace(classes[i], static_cast<ClassId>(i));
    TrainingData out;
    out.dim = data.dim;
    out.num_classes = classes.size();
    for (std::size_t i = 0; i < data.size(); ++i) {
        LabelSet projected;
        for (auto c : data.labels[i]) {
            if (c >= h.size()) throw InconsistentHierarchy("label id outside the hierarchy");
            if (auto a = h.ancestor_at_level(c, level)) projected.push_back(local.at(*a));
        }
        if (projected.empty()) continue;
        std::sort(projected.begin(), projected.end());
        projected.erase(std::unique(projected.begin(), projected.end()), projected.end());
        auto r = data.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(std::move(projected));
        if (i < data.entities.size()) out.entities.push_back(data.entities[i]);
    }
    return out;
}

LplModel train_lpl(const TrainingData& train, const TrainingData* validation,
                   const TypeHierarchy& h, OutputHead head, const TrainSpec& spec,
                   const std::function<void(std::size_t, std::size_t, const Mlp&)>& on_epoch) {
    LplModel model;
    for (std::size_t level = 1; level <= h.depth(); ++level) {
        auto level_train = project_to_level(train, h, level);
        if (level_train.size() == 0) break;
        std::optional<TrainingData> level_val;
        if (validation) level_val = project_to_level(*validation, h, level);
        EpochCallback cb;
        if (on_epoch) cb = [&, level](std::size_t epoch, const Mlp& m) { on_epoch(level, epoch, m); };
        auto level_spec = spec;
        level_spec.seed = derive_seed(spec.seed, level);
        auto trained = train_classifier(level_train, level_val ? &*level_val : nullptr, head,
                                        level_spec, cb);
        model.levels.push_back({level, h.classes_at_level(level), std::move(trained.model)});
    }
    return model;
}

std::vector<ClassId> repair_path(const TypeHierarchy& h, std::span<const ClassId> per_level) {
    std::vector<ClassId> path;
    for (auto c : per_level) {
        if (path.empty()) {
            if (h.parent(c)) break;
        } else if (h.parent(c) != path.back()) {
            break;
        }
        path.push_back(c);
    }
    return path;
}

std::vector<ClassId> predict_hierarchical(const LplModel& model, const TypeHierarchy& h,
                                          std::span<const double> x) {
    std::vector<ClassId> per_level;
    for (const auto& level : model.levels) {
        const auto logits = level.model.forward(x);
        const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        const ClassId c = level.classes.at(best);
        // Stop as soon as the chain breaks; later levels cannot reattach.
        if (per_level.empty() ? h.parent(c).has_value() : h.parent(c) != per_level.back()) break;
        per_level.push_back(c);
    }
    return repair_path(h, per_level);
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     std::span<const Mlp> models) {
    nlohmann::json header = meta;
    header["format"] = "grand-mlp";
    header["version"] = 1;
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : models) ms.push_back({{"dims", m.dims()}, {"head", to_string(m.head())}});
    header["models"] = ms;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << header.dump() << '\n';
    std::string line;
    auto write_row = [&](const std::vector<double>& values) {
        line.clear();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line.push_back(' ');
            line += format_real(values[i]);
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    };
    for (const auto& m : models) {
        for (const auto& layer : m.layers()) {
            write_row(layer.weights);
            write_row(layer.bias);
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty checkpoint");
    Checkpoint cp;
    cp.meta = nlohmann::json::parse(line, nullptr, false);
    if (cp.meta.is_discarded() || cp.meta.value("format", "") != "grand-mlp")
        throw FormatError("not a grand-mlp checkpoint: " + path.string());
    auto read_row = [&](std::vector<double>& dst) {
        if (!std::getline(in, line)) throw FormatError("truncated checkpoint");
        auto body = trim(line);
        auto fields = body.empty() ? std::vector<std::string_view>{} : split(body, ' ');
        if (fields.size() != dst.size()) throw DimMismatch(dst.size(), fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) dst[i] = parse_real(fields[i]);
    };
    for (const auto& spec : cp.meta.at("models")) {
        Mlp m(spec.at("dims").get<std::vector<std::size_t>>(),
              parse_output_head(spec.at("head").get<std::string>()));
        for (auto& layer : m.layers()) {
            read_row(layer.weights);
            read_row(layer.bias);
        }
        cp.models.push_back(std::move(m));
    }
    return cp;
}

}  // namespace grand
