#include "gdgan/classifier.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <torch/torch.h>

#include "gdgan/checkpoint.hpp"
#include "gdgan/error.hpp"
#include "gdgan/rng.hpp"
#include "gdgan/split.hpp"

namespace gdgan {

namespace nn = torch::nn;
using nlohmann::json;

namespace {
// VGG-19 ("configuration E") channel multipliers; 0 marks a 2×2 max-pool.
constexpr int kVgg19[] = {1, 1, 0, 2, 2, 0, 4, 4, 4, 4, 0, 8, 8, 8, 8, 0, 8, 8, 8, 8, 0};
}  // namespace

std::string ClassifierArch::to_text() const {
    std::ostringstream os;
    os << "width=" << width << ";dense=" << dense << ";labels=" << num_labels << ";batch_norm=" << (batch_norm ? 1 : 0);
    return os.str();
}

ClassifierArch ClassifierArch::from_text(const std::string& text) {
    ClassifierArch a;
    int bn = 1;
    if (std::sscanf(text.c_str(), "width=%d;dense=%d;labels=%d;batch_norm=%d", &a.width, &a.dense, &a.num_labels, &bn) != 4)
        raise(ErrorKind::CorruptFile, "bad classifier architecture '" + text + "'");
    a.batch_norm = bn != 0;
    return a;
}

std::string ClassifierArch::descriptor() const {
    std::ostringstream os;
    os << "vgg19 input=1x64x64\n";
    int in = 1;
    for (int m : kVgg19) {
        if (m == 0) {
            os << "maxpool 2x2\n";
        } else {
            os << "conv3x3 in=" << in << " out=" << m * width << (batch_norm ? " norm=batch" : " norm=none")
               << " act=relu\n";
            in = m * width;
        }
    }
    os << "linear in=" << in * 4 << " out=" << dense << " act=relu\n"
       << "linear in=" << dense << " out=" << dense << " act=relu\n"
       << "linear in=" << dense << " out=" << num_labels << " act=sigmoid(per-label)\n";
    return os.str();
}

VggNetImpl::VggNetImpl(const ClassifierArch& arch) {
    nn::Sequential f;
    int in = 1;
    for (int m : kVgg19) {
        if (m == 0) {
            f->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2)));
            continue;
        }
        const int out = m * arch.width;
        f->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)));
        if (arch.batch_norm) f->push_back(nn::BatchNorm2d(out));
        f->push_back(nn::ReLU());
        in = out;
    }
    features_ = register_module("features", f);
    head_ = register_module("head", nn::Sequential(nn::Linear(in * 4, arch.dense), nn::ReLU(),
                                                   nn::Linear(arch.dense, arch.dense), nn::ReLU(),
                                                   nn::Linear(arch.dense, arch.num_labels)));
}

torch::Tensor VggNetImpl::forward(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 1 || images.size(2) != 64 || images.size(3) != 64)
        raise(ErrorKind::ShapeMismatch, "classifier expects [n, 1, 64, 64]");
    return head_->forward(features_->forward(images).flatten(1));
}

std::string ClassifierConfig::to_json() const {
    json j{{"learning_rate", learning_rate}, {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2},
           {"epochs", epochs}, {"batch_size", batch_size}, {"seed", seed}};
    return j.dump();
}

ClassifierConfig ClassifierConfig::from_json(const std::string& text) {
    const auto j = json::parse(text);
    ClassifierConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    return c;
}

ClassifierBundle::ClassifierBundle(ClassifierArch a, std::uint64_t init_seed) : arch(a), net(a) {
    if (arch.width <= 0 || arch.dense <= 0 || arch.num_labels <= 0)
        raise(ErrorKind::BadArgument, "classifier architecture sizes must be positive");
    auto gen = make_torch_generator(derive_seed(init_seed, {"init", "classifier"}));
    torch::NoGradGuard guard;
    for (auto& item : net->named_parameters()) {
        auto& p = item.value();
        const auto& name = item.key();
        const bool bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
        if (bias) {
            p.zero_();
        } else if (p.dim() == 1) {
            p.fill_(1.0);
        } else {
            // He-normal on fan-in.
            const double fan_in = static_cast<double>(p.numel() / p.size(0));
            p.normal_(0.0, std::sqrt(2.0 / fan_in), gen);
        }
    }
}

std::vector<NamedTensor> ClassifierBundle::named_parameters() const {
    std::vector<NamedTensor> out;
    for (const auto& p : net->named_parameters()) out.emplace_back(p.key(), p.value());
    for (const auto& b : net->named_buffers()) out.emplace_back("buffer." + b.key(), b.value());
    return out;
}

torch::Tensor ClassifierBundle::predict_logits(const torch::Tensor& images, std::int64_t chunk) {
    torch::NoGradGuard guard;
    net->eval();
    std::vector<torch::Tensor> parts;
    for (std::int64_t s = 0; s < images.size(0); s += chunk)
        parts.push_back(net->forward(images.narrow(0, s, std::min(chunk, images.size(0) - s))));
    if (parts.empty()) return torch::empty({0, arch.num_labels});
    return torch::cat(parts, 0);
}

void ClassifierBundle::save(const std::filesystem::path& path) const {
    CheckpointData data;
    data.header.stage_tag = "classifier";
    data.header.arch_text = arch.to_text();
    data.header.descriptor = arch.descriptor();
    data.header.config_hash = fnv1a64(train_config.to_json());
    data.tensors = named_parameters();
    write_checkpoint_file(path, data);
}

ClassifierBundle ClassifierBundle::load(const std::filesystem::path& path) {
    auto data = read_checkpoint_file(path);
    if (data.header.stage_tag != "classifier")
        raise(ErrorKind::VersionMismatch, "checkpoint holds stage '" + data.header.stage_tag + "', expected 'classifier'");
    auto arch = ClassifierArch::from_text(data.header.arch_text);
    if (arch.descriptor() != data.header.descriptor)
        raise(ErrorKind::CorruptFile, "classifier descriptor does not match architecture");
    ClassifierBundle b(arch, 0);
    assign_tensors(data.tensors, b.named_parameters());
    return b;
}

LabeledSet load_labeled_set(const TrainingManifest& manifest, const ImageStore& store) {
    LabeledSet set;
    const auto batch = load_batch(store, manifest.sources);
    set.images = batch.data;
    const auto n = static_cast<std::int64_t>(manifest.size());
    const auto d = n ? static_cast<std::int64_t>(manifest.rows.front().detailed.size()) : 0;
    set.labels = torch::empty({n, d}, torch::kFloat32);
    auto acc = set.labels.accessor<float, 2>();
    for (std::int64_t i = 0; i < n; ++i) {
        set.ids.push_back(manifest.rows[i].image_id);
        for (std::int64_t k = 0; k < d; ++k) acc[i][k] = manifest.rows[i].detailed[k];
    }
    set.sources = manifest.sources;
    return set;
}

LabeledSet load_labeled_set(const std::vector<LabelRecord>& records, const ImageStore& store) {
    return load_labeled_set(TrainingManifest::identity(records), store);
}

std::string TrainHistory::to_json() const {
    json j;
    j["best_epoch"] = best_epoch;
    j["epochs"] = json::array();
    for (const auto& e : epochs)
        j["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_mean_auc", e.validation_mean_auc}});
    return j.dump();
}

double mean_auc(const torch::Tensor& logits, const torch::Tensor& labels) {
    const auto s = logits.to(torch::kFloat64).contiguous();
    const auto l = labels.to(torch::kUInt8).contiguous();
    double sum = 0.0;
    int used = 0;
    for (std::int64_t k = 0; k < s.size(1); ++k) {
        const auto col = s.select(1, k).contiguous();
        const auto lab = l.select(1, k).contiguous();
        const auto pos = lab.sum().item<std::int64_t>();
        if (pos == 0 || pos == lab.numel()) continue;
        sum += roc_curve({col.data_ptr<double>(), static_cast<std::size_t>(col.numel())},
                         {lab.data_ptr<std::uint8_t>(), static_cast<std::size_t>(lab.numel())})
                   .auc;
        ++used;
    }
    return used ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

ClassifierBundle train_classifier(const ClassifierArch& arch, const LabeledSet& train, const LabeledSet& validation,
                                  const ClassifierConfig& config, TrainHistory* history) {
    {
        std::set<std::string> train_sources(train.sources.begin(), train.sources.end());
        for (const auto& s : validation.sources)
            if (train_sources.count(s)) raise(ErrorKind::BadArgument, "train and validation share image '" + s + "'");
    }
    if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0))
        raise(ErrorKind::BadArgument, "invalid classifier training config");

    ClassifierBundle bundle(arch, derive_seed(config.seed, {"classifier", "init"}));
    bundle.train_config = config;
    TrainHistory local;
    TrainHistory& hist = history ? *history : local;
    hist = {};
    if (config.epochs == 0 || train.size() == 0) return bundle;

    auto gen = make_torch_generator(derive_seed(config.seed, {"classifier", "shuffle"}));
    torch::optim::Adam opt(bundle.net->parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                         .betas(std::make_tuple(config.adam_beta1, config.adam_beta2)));
    std::vector<NamedTensor> best;
    double best_auc = -std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        bundle.net->train();
        const auto order = torch::randperm(train.size(), gen, torch::kLong);
        double loss_sum = 0.0;
        std::int64_t batches = 0;
        for (std::int64_t s = 0; s < train.size(); s += config.batch_size) {
            const auto len = std::min(config.batch_size, train.size() - s);
            if (len < 2 && arch.batch_norm) continue;  // batch norm needs two samples
            const auto idx = order.narrow(0, s, len);
            const auto x = train.images.index_select(0, idx);
            const auto y = train.labels.index_select(0, idx);
            const auto logits = bundle.net->forward(x);
            const auto loss = torch::nn::functional::binary_cross_entropy_with_logits(
                                  logits, y, torch::nn::functional::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kSum)) /
                              static_cast<double>(len);
            const double lv = loss.item<double>();
            if (!std::isfinite(lv))
                raise(ErrorKind::DivergenceDetected, "non-finite classifier loss in epoch " + std::to_string(epoch));
            opt.zero_grad();
            loss.backward();
            opt.step();
            loss_sum += lv;
            ++batches;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
        rec.validation_mean_auc =
            validation.size() ? mean_auc(bundle.predict_logits(validation.images), validation.labels)
                              : std::numeric_limits<double>::quiet_NaN();
        hist.epochs.push_back(rec);
        const double score = std::isnan(rec.validation_mean_auc) ? -1.0 : rec.validation_mean_auc;
        if (score > best_auc) {
            best_auc = score;
            hist.best_epoch = epoch;
            best = snapshot(bundle.named_parameters());
        }
    }
    if (!best.empty()) assign_tensors(best, bundle.named_parameters());
    return bundle;
}

EvaluationResult evaluate_logits(const torch::Tensor& logits, const torch::Tensor& labels, const LabelSchema& schema,
                                 const std::string& focus_label) {
    const auto focus = schema.detailed_index_or_throw(focus_label);
    if (logits.dim() != 2 || logits.sizes() != labels.sizes() ||
        logits.size(1) != static_cast<std::int64_t>(schema.detailed_labels.size()))
        raise(ErrorKind::ShapeMismatch, "logits and labels must both be [n, #detailed labels]");
    const auto s = logits.to(torch::kFloat64).contiguous();
    const auto l = labels.to(torch::kUInt8).contiguous();
    EvaluationResult r;
    r.focus_label = focus_label;
    for (std::size_t k = 0; k < schema.detailed_labels.size(); ++k) {
        const auto col = s.select(1, static_cast<std::int64_t>(k)).contiguous();
        const auto lab = l.select(1, static_cast<std::int64_t>(k)).contiguous();
        try {
            r.per_label[schema.detailed_labels[k]] =
                roc_curve({col.data_ptr<double>(), static_cast<std::size_t>(col.numel())},
                          {lab.data_ptr<std::uint8_t>(), static_cast<std::size_t>(lab.numel())});
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::SingleClass)
                raise(ErrorKind::SingleClass, "label '" + schema.detailed_labels[k] + "' lacks one class in the test set");
            throw;
        }
    }
    r.focus_auc = r.per_label.at(schema.detailed_labels[focus]).auc;
    return r;
}

EvaluationResult evaluate_classifier(ClassifierBundle& bundle, const std::vector<LabelRecord>& test,
                                     const ImageStore& store, const LabelSchema& schema,
                                     const std::string& focus_label, std::optional<std::uint64_t> expected_test_hash) {
    if (expected_test_hash) {
        DatasetSplit probe;
        for (const auto& r : test) probe.test.push_back(r.image_id);
        if (probe.test_hash() != *expected_test_hash)
            raise(ErrorKind::BadArgument, "test records do not match the recorded test split");
    }
    const auto set = load_labeled_set(test, store);
    return evaluate_logits(bundle.predict_logits(set.images), set.labels, schema, focus_label);
}

}  // namespace gdgan
