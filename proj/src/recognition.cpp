#include "cst/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "cst/imaging.hpp"
#include "cst/rng.hpp"

namespace cst {

ClassRegistry ClassRegistry::with_normal(std::vector<std::string> suspicious) {
    ClassRegistry reg;
    reg.names.reserve(suspicious.size() + 1);
    reg.names.push_back("normal");
    for (auto& name : suspicious) {
        if (name == "normal") {
            throw std::invalid_argument("ClassRegistry: \"normal\" is reserved");
        }
        reg.names.push_back(std::move(name));
    }
    return reg;
}

int ClassRegistry::id_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

const std::string& ClassRegistry::name_of(int id) const {
    if (id < 0 || id >= size()) {
        throw std::invalid_argument("ClassRegistry: class id out of range");
    }
    return names[static_cast<std::size_t>(id)];
}

LabeledProposal assign_label(const Proposal& proposal, const std::vector<GroundTruth>& truths,
                             double min_overlap_fraction) {
    const double min_area = min_overlap_fraction * static_cast<double>(proposal.box.area());
    std::int64_t best_area = 0;
    int best_class = -1;
    int overlapped = 0;
    for (const GroundTruth& truth : truths) {
        const std::int64_t inter = intersection_area(proposal.box, truth.box);
        if (inter <= 0 || static_cast<double>(inter) <= min_area) {
            continue;
        }
        ++overlapped;
        if (inter > best_area || (inter == best_area && truth.class_id < best_class)) {
            best_area = inter;
            best_class = truth.class_id;
        }
    }
    if (overlapped == 0) {
        return LabeledProposal{proposal, kNormalClass, LabelSource::normal};
    }
    const LabelSource rule =
        overlapped == 1 ? LabelSource::single_item : LabelSource::largest_overlap;
    return LabeledProposal{proposal, best_class, rule};
}

BalanceResult balance_classes(const std::vector<LabeledProposal>& pool, std::uint64_t seed) {
    if (pool.empty()) {
        throw std::invalid_argument("balance_classes: empty pool");
    }
    std::vector<std::size_t> normal_indices;
    std::size_t suspicious = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].class_id == kNormalClass) {
            normal_indices.push_back(i);
        } else {
            ++suspicious;
        }
    }
    if (suspicious == 0) {
        return BalanceResult{pool, true};
    }

    const std::size_t target = std::min(suspicious, normal_indices.size());
    Rng rng(seed);
    rng.shuffle(normal_indices);
    normal_indices.resize(target);
    std::sort(normal_indices.begin(), normal_indices.end());

    BalanceResult result;
    result.kept.reserve(suspicious + target);
    std::size_t next_normal = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].class_id != kNormalClass) {
            result.kept.push_back(pool[i]);
        } else if (next_normal < normal_indices.size() && normal_indices[next_normal] == i) {
            result.kept.push_back(pool[i]);
            ++next_normal;
        }
    }
    return result;
}

CrossEntropyResult cross_entropy(const std::vector<std::vector<double>>& probs,
                                 const std::vector<std::vector<double>>& onehot) {
    if (probs.size() != onehot.size()) {
        throw std::invalid_argument("cross_entropy: sample count mismatch");
    }
    constexpr double kFloor = 1e-12;
    CrossEntropyResult result;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto& p = probs[i];
        const auto& y = onehot[i];
        if (p.size() != y.size()) {
            throw std::invalid_argument("cross_entropy: class count mismatch");
        }
        double sum = 0.0;
        for (double v : p) {
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("cross_entropy: probabilities must sum to 1");
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (y[j] == 0.0) {
                continue;
            }
            double pj = p[j];
            if (pj < kFloor) {
                pj = kFloor;
                result.clamped = true;
            }
            result.value -= y[j] * std::log(pj);
        }
    }
    return result;
}

std::vector<double> extract_features(const ScanImage& crop, const FeatureSpec& spec) {
    if (crop.empty()) {
        throw std::invalid_argument("extract_features: empty crop");
    }
    const int dim = spec.resize_dim;
    const double scale = 1.0 / static_cast<double>(crop.levels() - 1);

    // Bilinear resample to dim x dim, intensities normalized to [0, 1].
    RealImage resized(dim, dim);
    const double row_step = static_cast<double>(crop.rows()) / dim;
    const double col_step = static_cast<double>(crop.cols()) / dim;
    for (int r = 0; r < dim; ++r) {
        const double src_r = (r + 0.5) * row_step - 0.5;
        const int r0 = std::clamp(static_cast<int>(std::floor(src_r)), 0, crop.rows() - 1);
        const int r1 = std::min(r0 + 1, crop.rows() - 1);
        const double fr = std::clamp(src_r - r0, 0.0, 1.0);
        for (int c = 0; c < dim; ++c) {
            const double src_c = (c + 0.5) * col_step - 0.5;
            const int c0 = std::clamp(static_cast<int>(std::floor(src_c)), 0, crop.cols() - 1);
            const int c1 = std::min(c0 + 1, crop.cols() - 1);
            const double fc = std::clamp(src_c - c0, 0.0, 1.0);
            const double v = (1 - fr) * ((1 - fc) * crop.at(r0, c0) + fc * crop.at(r0, c1)) +
                             fr * ((1 - fc) * crop.at(r1, c0) + fc * crop.at(r1, c1));
            resized.at(r, c) = v * scale;
        }
    }

    std::vector<double> features;
    features.reserve(static_cast<std::size_t>(spec.dimension()));
    features.insert(features.end(), resized.values().begin(), resized.values().end());

    // Sobel magnitude histogram over the resampled crop. Max magnitude for
    // unit-range input is 4*sqrt(2).
    const RealImage gx = directional_gradient(resized, 0.0).values;
    const RealImage gy = directional_gradient(resized, std::numbers::pi / 2.0).values;
    std::vector<double> hist(static_cast<std::size_t>(spec.gradient_bins), 0.0);
    const double mag_max = 4.0 * std::numbers::sqrt2;
    for (std::size_t i = 0; i < gx.size(); ++i) {
        const double mag = std::hypot(gx.values()[i], gy.values()[i]);
        const int b = std::min(spec.gradient_bins - 1,
                               static_cast<int>(mag / mag_max * spec.gradient_bins));
        hist[static_cast<std::size_t>(b)] += 1.0;
    }
    const double inv_count = 1.0 / static_cast<double>(dim * dim);
    for (double h : hist) {
        features.push_back(h * inv_count);
    }
    return features;
}

std::vector<double> ClassifierModel::probabilities(const std::vector<double>& features_in) const {
    const int dim = features.dimension();
    const int n_classes = classes.size();
    if (static_cast<int>(features_in.size()) != dim) {
        throw std::invalid_argument("ClassifierModel: feature dimension mismatch");
    }
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        const double* row = weights.data() + static_cast<std::size_t>(k) * (dim + 1);
        double z = row[dim];  // bias
        for (int d = 0; d < dim; ++d) {
            z += row[d] * features_in[static_cast<std::size_t>(d)];
        }
        logits[static_cast<std::size_t>(k)] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) {
        z = std::exp(z - zmax);
        sum += z;
    }
    for (double& z : logits) {
        z /= sum;
    }
    return logits;
}

namespace {

std::vector<double> class_probabilities(const std::vector<double>& weights,
                                        const std::vector<double>& x, int n_classes) {
    const int stride = static_cast<int>(x.size()) + 1;
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        const double* row = weights.data() + static_cast<std::size_t>(k) * stride;
        double z = row[stride - 1];
        for (std::size_t d = 0; d < x.size(); ++d) {
            z += row[d] * x[d];
        }
        logits[static_cast<std::size_t>(k)] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) {
        z = std::exp(z - zmax);
        sum += z;
    }
    for (double& z : logits) {
        z /= sum;
    }
    return logits;
}

}  // namespace

double training_loss(const std::vector<double>& weights,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, int n_classes, double l2) {
    const std::size_t n = features.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = class_probabilities(weights, features[i], n_classes);
        const double pt = std::max(p[static_cast<std::size_t>(labels[i])], 1e-300);
        loss -= std::log(pt);
    }
    loss /= static_cast<double>(n);
    if (l2 > 0.0) {
        const int stride = static_cast<int>(features[0].size()) + 1;
        double reg = 0.0;
        for (int k = 0; k < n_classes; ++k) {
            const double* row = weights.data() + static_cast<std::size_t>(k) * stride;
            for (int d = 0; d + 1 < stride; ++d) {  // bias excluded
                reg += row[d] * row[d];
            }
        }
        loss += 0.5 * l2 * reg;
    }
    return loss;
}

std::vector<double> training_gradient(const std::vector<double>& weights,
                                      const std::vector<std::vector<double>>& features,
                                      const std::vector<int>& labels, int n_classes, double l2) {
    const std::size_t n = features.size();
    const int stride = static_cast<int>(features[0].size()) + 1;
    std::vector<double> grad(weights.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = class_probabilities(weights, features[i], n_classes);
        for (int k = 0; k < n_classes; ++k) {
            const double delta = p[static_cast<std::size_t>(k)] - (labels[i] == k ? 1.0 : 0.0);
            double* row = grad.data() + static_cast<std::size_t>(k) * stride;
            const auto& x = features[i];
            for (std::size_t d = 0; d < x.size(); ++d) {
                row[d] += delta * x[d];
            }
            row[stride - 1] += delta;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& g : grad) {
        g *= inv_n;
    }
    if (l2 > 0.0) {
        for (int k = 0; k < n_classes; ++k) {
            double* row = grad.data() + static_cast<std::size_t>(k) * stride;
            const double* w = weights.data() + static_cast<std::size_t>(k) * stride;
            for (int d = 0; d + 1 < stride; ++d) {
                row[d] += l2 * w[d];
            }
        }
    }
    return grad;
}

TrainResult train_baseline(const std::vector<LabeledProposal>& data, const ClassRegistry& classes,
                           const TrainConfig& config) {
    if (data.empty()) {
        throw std::invalid_argument("train_baseline: empty training set");
    }
    std::set<int> distinct;
    for (const auto& sample : data) {
        distinct.insert(sample.class_id);
    }
    if (distinct.size() < 2) {
        throw std::invalid_argument("train_baseline: need at least two classes present");
    }

    const FeatureSpec spec;
    const int n_classes = classes.size();
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    features.reserve(data.size());
    labels.reserve(data.size());
    for (const auto& sample : data) {
        if (sample.class_id < 0 || sample.class_id >= n_classes) {
            throw std::invalid_argument("train_baseline: class id outside registry");
        }
        features.push_back(extract_features(sample.proposal.crop, spec));
        labels.push_back(sample.class_id);
    }

    // Zero init keeps training deterministic regardless of seed; the seed is
    // reserved for future stochastic variants.
    const int stride = spec.dimension() + 1;
    std::vector<double> weights(static_cast<std::size_t>(n_classes) * stride, 0.0);

    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(config.epochs));
    double loss = training_loss(weights, features, labels, n_classes, config.l2);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto grad = training_gradient(weights, features, labels, n_classes, config.l2);
        double step = config.learning_rate;
        std::vector<double> candidate(weights.size());
        double new_loss = loss;
        for (int attempt = 0; attempt < 40; ++attempt) {
            for (std::size_t i = 0; i < weights.size(); ++i) {
                candidate[i] = weights[i] - step * grad[i];
            }
            new_loss = training_loss(candidate, features, labels, n_classes, config.l2);
            if (new_loss <= loss) {
                break;
            }
            step *= 0.5;
        }
        if (new_loss <= loss) {
            weights.swap(candidate);
            loss = new_loss;
        }
        result.loss_curve.push_back(loss);
    }

    result.model.features = spec;
    result.model.classes = classes;
    result.model.weights = std::move(weights);
    return result;
}

Detection classify(const ClassifierModel& model, const Proposal& proposal) {
    if (proposal.crop.empty()) {
        throw std::invalid_argument("classify: proposal crop is empty");
    }
    const auto p = model.probabilities(extract_features(proposal.crop, model.features));
    const auto best = std::max_element(p.begin(), p.end());
    return Detection{proposal, static_cast<int>(best - p.begin()), *best};
}

namespace {

constexpr char kMagic[8] = {'C', 'S', 'T', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_model: cannot open " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
    for (const auto& name : model.classes.names) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    put_u32(out, static_cast<std::uint32_t>(model.features.resize_dim));
    put_u32(out, static_cast<std::uint32_t>(model.features.gradient_bins));
    put_u64(out, model.weights.size());
    for (double w : model.weights) {
        put_f64(out, w);
    }
    if (!out) {
        throw std::runtime_error("save_model: write failed for " + path.string());
    }
}

ClassifierModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_model: cannot open " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_model: not a classifier model file");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kModelVersion) {
        throw std::runtime_error("load_model: unsupported model version " +
                                 std::to_string(version));
    }
    ClassifierModel model;
    const std::uint32_t n_classes = get_u32(in);
    if (!in || n_classes == 0 || n_classes > (1u << 20)) {
        throw std::runtime_error("load_model: implausible class count");
    }
    model.classes.names.resize(n_classes);
    for (auto& name : model.classes.names) {
        const std::uint32_t len = get_u32(in);
        if (!in || len > (1u << 20)) {
            throw std::runtime_error("load_model: truncated model file");
        }
        name.resize(len);
        in.read(name.data(), static_cast<std::streamsize>(len));
    }
    model.features.resize_dim = static_cast<int>(get_u32(in));
    model.features.gradient_bins = static_cast<int>(get_u32(in));
    const std::uint64_t n_weights = get_u64(in);
    if (!in || n_weights > (1ull << 32)) {
        throw std::runtime_error("load_model: truncated model file");
    }
    model.weights.resize(n_weights);
    for (double& w : model.weights) {
        w = get_f64(in);
    }
    if (!in) {
        throw std::runtime_error("load_model: truncated model file");
    }
    const std::size_t expected = static_cast<std::size_t>(model.classes.size()) *
                                 (static_cast<std::size_t>(model.features.dimension()) + 1);
    if (model.weights.size() != expected) {
        throw std::runtime_error("load_model: weight count does not match feature spec");
    }
    return model;
}

}  // namespace cst
