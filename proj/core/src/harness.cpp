#include "gdgan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <torch/torch.h>

#include <json.hpp>

#include "gdgan/checkpoint.hpp"
#include "gdgan/error.hpp"
#include "gdgan/gan_sampling.hpp"
#include "gdgan/manifest.hpp"
#include "gdgan/png_io.hpp"
#include "gdgan/rng.hpp"
#include "gdgan/toy_corpus.hpp"

namespace gdgan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::MissingArtifact, "missing artifact " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) raise(ErrorKind::IoError, "cannot write " + tmp.string());
        f << text;
        if (!f) raise(ErrorKind::IoError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorKind::CorruptFile, "bad " + what + ": " + e.what());
    }
}

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Runs `f`, prefixing any library error with where in the pipeline it happened.
template <class F>
auto in_context(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.message());
    }
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

json recipe_to_json(const ToyOracleRecipe& r) {
    return {{"seed", r.seed},
            {"images_per_class", r.images_per_class},
            {"epochs", r.epochs},
            {"batch_size", r.batch_size},
            {"learning_rate", r.learning_rate}};
}

ToyOracleRecipe recipe_from_json(const json& j) {
    ToyOracleRecipe r;
    r.seed = j.value("seed", r.seed);
    r.images_per_class = j.value("images_per_class", r.images_per_class);
    r.epochs = j.value("epochs", r.epochs);
    r.batch_size = j.value("batch_size", r.batch_size);
    r.learning_rate = j.value("learning_rate", r.learning_rate);
    return r;
}

}  // namespace

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// ExperimentConfig

LabelSchema ExperimentConfig::schema() const {
    if (corpus.kind == CorpusConfig::Kind::toy || corpus.schema == "toy") return LabelSchema::toy();
    if (corpus.schema == "chest_xray") return LabelSchema::chest_xray();
    raise(ErrorKind::BadArgument, "unknown schema '" + corpus.schema + "'");
}

void ExperimentConfig::validate() const {
    if (strategies.empty()) raise(ErrorKind::BadArgument, "at least one strategy is required");
    if (seeds.empty()) raise(ErrorKind::BadArgument, "at least one seed is required");
    std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
    if (unique_seeds.size() != seeds.size()) raise(ErrorKind::BadArgument, "seeds must be distinct");
    std::set<Strategy> unique_strategies(strategies.begin(), strategies.end());
    if (unique_strategies.size() != strategies.size()) raise(ErrorKind::BadArgument, "strategies must be distinct");
    const LabelSchema s = schema();
    if (!s.detailed_index(focus_label))
        raise(ErrorKind::BadArgument, "focus label '" + focus_label + "' is not a detailed label of the schema");
    if (corpus.kind == CorpusConfig::Kind::manifest && corpus.manifest.empty())
        raise(ErrorKind::BadArgument, "manifest corpus needs a manifest path");
    gan.stage1.validate();
    gan.stage2.validate();
    gan.acgan.validate();
    if (classifier.epochs < 0 || classifier.batch_size <= 0)
        raise(ErrorKind::BadArgument, "classifier epochs must be >= 0 and batch size > 0");
    if (inception.enabled && (inception.splits == 0 || inception.images <= 0 ||
                              inception.images % static_cast<std::int64_t>(inception.splits) != 0))
        raise(ErrorKind::IndivisibleBatch, "inception image count must be a positive multiple of the split count");
    if (inception.labels != "empirical" && inception.labels != "uniform")
        raise(ErrorKind::BadArgument, "inception labels must be 'empirical' or 'uniform'");
}

std::string ExperimentConfig::to_json() const {
    json j;
    json c;
    c["kind"] = corpus.kind == CorpusConfig::Kind::toy ? "toy" : "manifest";
    c["toy_n"] = corpus.toy_n;
    c["toy_rare_rate"] = corpus.toy_rare_rate;
    c["toy_seed"] = corpus.toy_seed;
    c["manifest"] = corpus.manifest.string();
    c["images"] = corpus.images.string();
    c["schema"] = corpus.schema;
    j["corpus"] = c;
    j["focus_label"] = focus_label;
    json strat = json::array();
    for (Strategy s : strategies) strat.push_back(to_string(s));
    j["strategies"] = strat;
    j["seeds"] = seeds;
    j["split"] = {{"train", ratios.train},
                  {"validation", ratios.validation},
                  {"test", ratios.test},
                  {"mode", to_string(split_mode)}};
    j["targets"] = {{"undersample_total_ratio", targets.undersample_total_ratio},
                    {"augment_total_ratio", targets.augment_total_ratio},
                    {"augment_focus_ratio", targets.augment_focus_ratio},
                    {"undersample_total", targets.undersample_total},
                    {"augment_total", targets.augment_total},
                    {"augment_focus", targets.augment_focus},
                    {"minority_threshold", targets.minority_threshold}};
    j["gan"] = {{"noise_dim", gan.noise_dim},
                {"generator_width", gan.generator_width},
                {"critic_width", gan.critic_width},
                {"stage1", json::parse(gan.stage1.to_json())},
                {"stage2", json::parse(gan.stage2.to_json())},
                {"acgan", json::parse(gan.acgan.to_json())},
                {"reuse_across_seeds", gan.reuse_across_seeds}};
    j["classifier"] = {{"arch",
                        {{"width", classifier_arch.width},
                         {"dense", classifier_arch.dense},
                         {"batch_norm", classifier_arch.batch_norm}}},
                       {"train", json::parse(classifier.to_json())}};
    j["inception"] = {{"enabled", inception.enabled},
                      {"images", inception.images},
                      {"splits", inception.splits},
                      {"labels", inception.labels},
                      {"oracle", recipe_to_json(inception.oracle)},
                      {"oracle_checkpoint", inception.oracle_checkpoint.string()}};
    j["output_dir"] = output_dir.string();
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    const json j = parse_json(text, "experiment config");
    ExperimentConfig cfg;
    try {
        if (j.contains("corpus")) {
            const json& c = j["corpus"];
            const std::string kind = c.value("kind", std::string("toy"));
            if (kind == "toy")
                cfg.corpus.kind = CorpusConfig::Kind::toy;
            else if (kind == "manifest")
                cfg.corpus.kind = CorpusConfig::Kind::manifest;
            else
                raise(ErrorKind::BadArgument, "corpus kind must be 'toy' or 'manifest'");
            cfg.corpus.toy_n = c.value("toy_n", cfg.corpus.toy_n);
            cfg.corpus.toy_rare_rate = c.value("toy_rare_rate", cfg.corpus.toy_rare_rate);
            cfg.corpus.toy_seed = c.value("toy_seed", cfg.corpus.toy_seed);
            cfg.corpus.manifest = c.value("manifest", std::string());
            cfg.corpus.images = c.value("images", std::string());
            cfg.corpus.schema = c.value("schema", cfg.corpus.kind == CorpusConfig::Kind::toy ? "toy" : "chest_xray");
        }
        cfg.focus_label = j.value("focus_label", cfg.focus_label);
        if (j.contains("strategies")) {
            cfg.strategies.clear();
            for (const auto& s : j["strategies"]) cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
        }
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("split")) {
            const json& s = j["split"];
            cfg.ratios.train = s.value("train", cfg.ratios.train);
            cfg.ratios.validation = s.value("validation", cfg.ratios.validation);
            cfg.ratios.test = s.value("test", cfg.ratios.test);
            cfg.split_mode = split_mode_from_string(s.value("mode", std::string("by_image")));
        }
        if (j.contains("targets")) {
            const json& t = j["targets"];
            TargetConfig& tc = cfg.targets;
            tc.undersample_total_ratio = t.value("undersample_total_ratio", tc.undersample_total_ratio);
            tc.augment_total_ratio = t.value("augment_total_ratio", tc.augment_total_ratio);
            tc.augment_focus_ratio = t.value("augment_focus_ratio", tc.augment_focus_ratio);
            tc.undersample_total = t.value("undersample_total", tc.undersample_total);
            tc.augment_total = t.value("augment_total", tc.augment_total);
            tc.augment_focus = t.value("augment_focus", tc.augment_focus);
            tc.minority_threshold = t.value("minority_threshold", tc.minority_threshold);
        }
        if (j.contains("gan")) {
            const json& g = j["gan"];
            cfg.gan.noise_dim = g.value("noise_dim", cfg.gan.noise_dim);
            cfg.gan.generator_width = g.value("generator_width", cfg.gan.generator_width);
            cfg.gan.critic_width = g.value("critic_width", cfg.gan.critic_width);
            // Each stage section only overrides the keys it names.
            auto merged = [&](const char* key, const TrainConfig& base) {
                if (!g.contains(key)) return base;
                json j = json::parse(base.to_json());
                j.merge_patch(g[key]);
                return TrainConfig::from_json(j.dump());
            };
            cfg.gan.stage1 = merged("stage1", cfg.gan.stage1);
            cfg.gan.stage2 = merged("stage2", cfg.gan.stage2);
            cfg.gan.acgan = merged("acgan", cfg.gan.acgan);
            cfg.gan.reuse_across_seeds = g.value("reuse_across_seeds", cfg.gan.reuse_across_seeds);
        }
        if (j.contains("classifier")) {
            const json& c = j["classifier"];
            if (c.contains("arch")) {
                const json& a = c["arch"];
                cfg.classifier_arch.width = a.value("width", cfg.classifier_arch.width);
                cfg.classifier_arch.dense = a.value("dense", cfg.classifier_arch.dense);
                cfg.classifier_arch.batch_norm = a.value("batch_norm", cfg.classifier_arch.batch_norm);
            }
            if (c.contains("train")) {
                json t = json::parse(cfg.classifier.to_json());
                t.merge_patch(c["train"]);
                cfg.classifier = ClassifierConfig::from_json(t.dump());
            }
        }
        if (j.contains("inception")) {
            const json& i = j["inception"];
            cfg.inception.enabled = i.value("enabled", cfg.inception.enabled);
            cfg.inception.images = i.value("images", cfg.inception.images);
            cfg.inception.splits = i.value("splits", cfg.inception.splits);
            cfg.inception.labels = i.value("labels", cfg.inception.labels);
            if (i.contains("oracle")) cfg.inception.oracle = recipe_from_json(i["oracle"]);
            cfg.inception.oracle_checkpoint = i.value("oracle_checkpoint", std::string());
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
    } catch (const json::exception& e) {
        raise(ErrorKind::BadArgument, std::string("bad experiment config: ") + e.what());
    }
    // The classifier always emits one logit per detailed label of the schema.
    cfg.classifier_arch.num_labels = static_cast<int>(cfg.schema().detailed_labels.size());
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::MissingArtifact, "cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

std::uint64_t ExperimentConfig::hash() const {
    json j = json::parse(to_json());
    j.erase("output_dir");
    // Seeds and strategies select cells inside the run root; they do not change any cell,
    // except that shared GANs belong to the first seed.
    if (gan.reuse_across_seeds) j["gan"]["owner_seed"] = seeds.front();
    j.erase("seeds");
    j.erase("strategies");
    return fnv1a64(j.dump());
}

fs::path run_root(const ExperimentConfig& config) { return config.output_dir / "runs" / hex64(config.hash()); }

// ---------------------------------------------------------------------------
// Report types

std::string CellResult::to_json(const std::string& focus_label) const {
    json per_label = json::object();
    for (const auto& [name, auc] : per_label_auc) {
        json entry{{"auc", auc}};
        if (auto it = per_label_roc.find(name); it != per_label_roc.end()) entry["roc_csv_path"] = it->second;
        per_label[name] = entry;
    }
    json j{{"strategy", strategy},
           {"split_seed", seed},
           {"split_hash", split_hash},
           {"n_total", n_total},
           {"n_focus", n_focus},
           {"target_total", target_total},
           {"target_focus", target_focus},
           {"focus_label", focus_label},
           {"focus_auc", focus_auc},
           {"per_label", per_label},
           {"best_epoch", best_epoch}};
    return j.dump(2);
}

CellResult CellResult::from_json(const std::string& text) {
    const json j = parse_json(text, "cell result");
    CellResult c;
    try {
        c.strategy = j.at("strategy").get<std::string>();
        c.seed = j.at("split_seed").get<std::uint64_t>();
        c.split_hash = j.at("split_hash").get<std::string>();
        c.n_total = j.at("n_total").get<std::size_t>();
        c.n_focus = j.at("n_focus").get<std::size_t>();
        c.target_total = j.at("target_total").get<std::size_t>();
        c.target_focus = j.at("target_focus").get<std::size_t>();
        c.focus_auc = j.at("focus_auc").get<double>();
        c.best_epoch = j.at("best_epoch").get<int>();
        for (const auto& [name, entry] : j.at("per_label").items()) {
            c.per_label_auc[name] = entry.at("auc").get<double>();
            if (entry.contains("roc_csv_path")) c.per_label_roc[name] = entry["roc_csv_path"].get<std::string>();
        }
    } catch (const json::exception& e) {
        raise(ErrorKind::CorruptFile, std::string("bad cell result: ") + e.what());
    }
    return c;
}

namespace {

json cell_json(const CellResult& c, const std::string& focus_label) { return json::parse(c.to_json(focus_label)); }

json inception_to_json(const InceptionBlock& b) {
    json sources = json::object();
    for (const auto& [name, r] : b.sources)
        sources[name] = {{"mean", r.mean}, {"sd", r.sd}, {"per_batch_scores", r.per_batch_scores}};
    json tests = json::array();
    for (const auto& t : b.tests)
        tests.push_back({{"a", t.a},
                         {"b", t.b},
                         {"defined", t.defined},
                         {"t", number_or_null(t.result.t)},
                         {"dof", number_or_null(t.result.dof)},
                         {"p", number_or_null(t.result.p_two_sided)}});
    return {{"oracle", b.oracle},
            {"images_per_source", b.images_per_source},
            {"sources", sources},
            {"tests", tests},
            {"sample_grids", b.sample_grids}};
}

InceptionBlock inception_from_json(const json& j) {
    InceptionBlock b;
    b.oracle = j.at("oracle").get<std::string>();
    b.images_per_source = j.at("images_per_source").get<std::int64_t>();
    for (const auto& [name, s] : j.at("sources").items()) {
        InceptionScoreResult r;
        r.mean = s.at("mean").get<double>();
        r.sd = s.at("sd").get<double>();
        r.per_batch_scores = s.at("per_batch_scores").get<std::vector<double>>();
        b.sources[name] = r;
    }
    for (const auto& t : j.at("tests")) {
        PairwiseTest p;
        p.a = t.at("a").get<std::string>();
        p.b = t.at("b").get<std::string>();
        p.defined = t.at("defined").get<bool>();
        p.result.t = number_or_nan(t.at("t"));
        p.result.dof = number_or_nan(t.at("dof"));
        p.result.p_two_sided = number_or_nan(t.at("p"));
        b.tests.push_back(p);
    }
    b.sample_grids = j.at("sample_grids").get<std::map<std::string, std::string>>();
    return b;
}

}  // namespace

std::string EvaluationReport::to_json() const {
    json cells_j = json::array();
    for (const auto& c : cells) cells_j.push_back(cell_json(c, focus_label));
    json strat = json::array();
    for (const auto& s : strategies)
        strat.push_back({{"strategy", s.strategy},
                         {"cells", s.cells},
                         {"mean_auc", s.mean_auc},
                         {"sd_auc", s.sd_auc},
                         {"mean_total", s.mean_total},
                         {"sd_total", s.sd_total},
                         {"mean_focus", s.mean_focus},
                         {"sd_focus", s.sd_focus}});
    json j{{"config_hash", config_hash}, {"focus_label", focus_label}, {"cells", cells_j}, {"strategies", strat}};
    j["inception"] = inception ? inception_to_json(*inception) : json(nullptr);
    return j.dump(2);
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
    const json j = parse_json(text, "evaluation report");
    EvaluationReport r;
    try {
        r.config_hash = j.at("config_hash").get<std::string>();
        r.focus_label = j.at("focus_label").get<std::string>();
        for (const auto& c : j.at("cells")) r.cells.push_back(CellResult::from_json(c.dump()));
        for (const auto& s : j.at("strategies")) {
            StrategySummary m;
            m.strategy = s.at("strategy").get<std::string>();
            m.cells = s.at("cells").get<std::size_t>();
            m.mean_auc = s.at("mean_auc").get<double>();
            m.sd_auc = s.at("sd_auc").get<double>();
            m.mean_total = s.at("mean_total").get<double>();
            m.sd_total = s.at("sd_total").get<double>();
            m.mean_focus = s.at("mean_focus").get<double>();
            m.sd_focus = s.at("sd_focus").get<double>();
            r.strategies.push_back(m);
        }
        if (j.contains("inception") && !j["inception"].is_null()) r.inception = inception_from_json(j["inception"]);
    } catch (const json::exception& e) {
        raise(ErrorKind::CorruptFile, std::string("bad evaluation report: ") + e.what());
    }
    return r;
}

std::vector<StrategySummary> summarize(const std::vector<CellResult>& cells) {
    std::vector<std::string> order;
    for (const auto& c : cells)
        if (std::find(order.begin(), order.end(), c.strategy) == order.end()) order.push_back(c.strategy);
    std::vector<StrategySummary> out;
    for (const auto& name : order) {
        std::vector<double> auc, total, focus;
        for (const auto& c : cells) {
            if (c.strategy != name) continue;
            auc.push_back(c.focus_auc);
            total.push_back(static_cast<double>(c.n_total));
            focus.push_back(static_cast<double>(c.n_focus));
        }
        StrategySummary s;
        s.strategy = name;
        s.cells = auc.size();
        std::tie(s.mean_auc, s.sd_auc) = mean_and_sd(auc);
        std::tie(s.mean_total, s.sd_total) = mean_and_sd(total);
        std::tie(s.mean_focus, s.sd_focus) = mean_and_sd(focus);
        out.push_back(s);
    }
    return out;
}

std::vector<PairwiseTest> pairwise_tests(const std::map<std::string, InceptionScoreResult>& sources) {
    std::vector<PairwiseTest> out;
    for (auto a = sources.begin(); a != sources.end(); ++a) {
        for (auto b = std::next(a); b != sources.end(); ++b) {
            PairwiseTest t;
            t.a = a->first;
            t.b = b->first;
            try {
                t.result = welch_t_test(a->second.per_batch_scores, b->second.per_batch_scores);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DegenerateSample) throw;
                t.defined = false;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                t.result = {nan, nan, nan};
            }
            out.push_back(t);
        }
    }
    return out;
}

InceptionBlock compare_inception(const std::map<std::string, ImageBatch>& sources, LabelProbabilityOracle& oracle,
                                 std::size_t n_splits) {
    if (sources.empty()) raise(ErrorKind::EmptyInput, "no image sources to score");
    const std::int64_t n = sources.begin()->second.size();
    InceptionBlock block;
    block.oracle = oracle.descriptor();
    block.images_per_source = n;
    for (const auto& [name, batch] : sources) {
        if (batch.size() != n) raise(ErrorKind::ShapeMismatch, "inception sources must have equal image counts");
        block.sources[name] = inception_score(batch, oracle, n_splits);
    }
    block.tests = pairwise_tests(block.sources);
    return block;
}

PlanTargets resolve_targets(Strategy strategy, const TargetConfig& config, std::size_t n_train, std::size_t n_focus) {
    auto scaled = [](std::size_t n, double ratio) { return static_cast<std::size_t>(std::llround(n * ratio)); };
    switch (strategy) {
        case Strategy::none:
            return {n_train, n_focus};
        case Strategy::undersample:
            return {config.undersample_total ? config.undersample_total
                                             : scaled(n_train, config.undersample_total_ratio),
                    n_focus};
        case Strategy::oversample:
        case Strategy::acgan:
        case Strategy::gdgan:
            return {config.augment_total ? config.augment_total : scaled(n_train, config.augment_total_ratio),
                    config.augment_focus ? config.augment_focus : scaled(n_focus, config.augment_focus_ratio)};
    }
    raise(ErrorKind::BadArgument, "unknown strategy");
}

RawImage image_grid(const ImageBatch& batch, int rows, int cols, int gap) {
    if (rows <= 0 || cols <= 0 || gap < 0) raise(ErrorKind::BadArgument, "grid dimensions must be positive");
    RawImage out;
    out.channels = 1;
    out.height = rows * kImageSize + (rows + 1) * gap;
    out.width = cols * kImageSize + (cols + 1) * gap;
    out.pixels.assign(static_cast<std::size_t>(out.height) * out.width, 255);
    const std::int64_t n = std::min<std::int64_t>(batch.size(), static_cast<std::int64_t>(rows) * cols);
    for (std::int64_t i = 0; i < n; ++i) {
        const RawImage tile = quantize(batch.image(i));
        const int oy = gap + static_cast<int>(i / cols) * (kImageSize + gap);
        const int ox = gap + static_cast<int>(i % cols) * (kImageSize + gap);
        for (int y = 0; y < kImageSize; ++y)
            std::copy_n(tile.pixels.begin() + static_cast<std::ptrdiff_t>(y) * kImageSize, kImageSize,
                        out.pixels.begin() + static_cast<std::ptrdiff_t>(oy + y) * out.width + ox);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ExperimentRunner

struct ExperimentRunner::State {
    bool records_loaded = false;
    std::vector<LabelRecord> records;
    std::unique_ptr<DirectoryStore> store;
};

ExperimentRunner::ExperimentRunner(ExperimentConfig config, RunOptions options)
    : config_(std::move(config)), options_(options), state_(std::make_unique<State>()) {
    config_.validate();
    root_ = run_root(config_);
    fs::create_directories(root_);
    const fs::path cfg_path = root_ / "config.json";
    if (!fs::exists(cfg_path)) {
        ExperimentConfig stored = config_;
        stored.output_dir = ".";
        write_text(cfg_path, stored.to_json() + "\n");
    }
}

ExperimentRunner::~ExperimentRunner() = default;

namespace {

void log(const RunOptions& o, const std::string& msg) {
    if (o.verbose) std::fprintf(stderr, "[gdgan] %s\n", msg.c_str());
}

}  // namespace

const std::vector<LabelRecord>& ExperimentRunner::records() {
    if (state_->records_loaded) return state_->records;
    const LabelSchema schema = config_.schema();
    if (config_.corpus.kind == CorpusConfig::Kind::toy) {
        const fs::path dir = root_ / "corpus";
        const fs::path manifest = dir / "manifest.csv";
        if (!fs::exists(manifest)) {
            log(options_, "rendering toy corpus");
            ToyCorpus corpus = in_context("corpus", [&] {
                return generate_toy_corpus(config_.corpus.toy_n, config_.corpus.toy_rare_rate,
                                           config_.corpus.toy_seed);
            });
            DirectoryStore images(dir / "images", true);
            corpus.images.flush_to(images);
            fs::path tmp = manifest;
            tmp += ".tmp";
            write_manifest(tmp, corpus.records, schema);
            fs::rename(tmp, manifest);
        }
        state_->records = load_manifest(manifest, schema);
        state_->store = std::make_unique<DirectoryStore>(dir / "images");
    } else {
        state_->records = in_context("corpus", [&] { return load_manifest(config_.corpus.manifest, schema); });
        fs::path images = config_.corpus.images.empty() ? config_.corpus.manifest.parent_path() / "images"
                                                        : config_.corpus.images;
        state_->store = std::make_unique<DirectoryStore>(images);
    }
    if (state_->records.empty()) raise(ErrorKind::EmptyInput, "corpus has no records");
    state_->records_loaded = true;
    return state_->records;
}

const ImageStore& ExperimentRunner::corpus_store() {
    records();
    return *state_->store;
}

DatasetSplit ExperimentRunner::split(std::uint64_t seed) {
    const fs::path path = root_ / seed_dir_name(seed) / "split.json";
    if (fs::exists(path)) return DatasetSplit::load(path);
    DatasetSplit s = in_context("seed " + std::to_string(seed) + " / split", [&] {
        return make_split(records(), config_.ratios, derive_seed(seed, {"split"}), config_.split_mode);
    });
    write_text(path, s.to_json() + "\n");
    return s;
}

namespace {

const TrainConfig& stage_config(const GanSettings& g, StageTag stage) {
    switch (stage) {
        case StageTag::stage1: return g.stage1;
        case StageTag::stage2: return g.stage2;
        case StageTag::acgan: return g.acgan;
    }
    raise(ErrorKind::BadArgument, "unknown stage");
}

}  // namespace

fs::path ExperimentRunner::gan(std::uint64_t seed, StageTag stage) {
    // With reuse enabled every seed shares the networks trained on the first seed's split.
    const std::uint64_t owner = config_.gan.reuse_across_seeds ? config_.seeds.front() : seed;
    const fs::path dir = root_ / seed_dir_name(owner) / "gan";
    const fs::path path = dir / (to_string(stage) + ".ckpt");
    if (fs::exists(path)) return path;

    fs::path stage1_path;
    if (stage == StageTag::stage2) stage1_path = gan(owner, StageTag::stage1);

    const std::string where = "seed " + std::to_string(owner) + " / " + to_string(stage);
    in_context(where, [&] {
        const LabelSchema schema = config_.schema();
        const DatasetSplit s = split(owner);
        const std::vector<LabelRecord> train = select_records(records(), s.train);
        log(options_, where + ": loading " + std::to_string(train.size()) + " training images");
        const GanDataset data = GanDataset::from(load_batch(corpus_store(), s.train), train);

        GanArch arch;
        arch.stage = stage;
        arch.noise_dim = config_.gan.noise_dim;
        arch.generator_width = config_.gan.generator_width;
        arch.critic_width = config_.gan.critic_width;
        arch.general_cardinalities = schema.general_cardinalities();
        arch.detailed_count = static_cast<int>(schema.detailed_labels.size());

        TrainConfig tc = stage_config(config_.gan, stage);
        tc.seed = derive_seed(owner, {to_string(stage), "train"});
        GanBundle bundle(arch, derive_seed(owner, {to_string(stage), "init"}));
        log(options_, where + ": training " + std::to_string(tc.total_generator_steps) + " generator steps");
        TrainingLog training;
        if (stage == StageTag::stage2) {
            GanBundle stage1 = load_checkpoint(stage1_path, StageTag::stage1);
            training = train_stage(bundle, data, tc, &stage1);
        } else if (stage == StageTag::acgan) {
            training = train_acgan(bundle, data, tc);
        } else {
            training = train_stage(bundle, data, tc);
        }
        fs::create_directories(dir);
        training.write((dir / (to_string(stage) + "_log.ndjson")).string());
        save_checkpoint(bundle, path, tc.hash());
    });
    return path;
}

fs::path ExperimentRunner::plan(std::uint64_t seed, Strategy strategy) {
    const fs::path path = root_ / seed_dir_name(seed) / to_string(strategy) / "plan.json";
    if (fs::exists(path)) return path;
    in_context("seed " + std::to_string(seed) + " / " + to_string(strategy) + " / plan", [&] {
        const LabelSchema schema = config_.schema();
        const DatasetSplit s = split(seed);
        const std::vector<LabelRecord> train = select_records(records(), s.train);
        const std::size_t focus = count_positive(train, schema.detailed_index_or_throw(config_.focus_label));
        const PlanTargets targets = resolve_targets(strategy, config_.targets, train.size(), focus);
        PlanOptions po;
        po.minority_threshold = config_.targets.minority_threshold;
        const AugmentationPlan p = build_plan(strategy, train, schema, config_.focus_label, targets,
                                              derive_seed(seed, {to_string(strategy), "plan"}), po);
        write_text(path, p.to_json() + "\n");
    });
    return path;
}

fs::path ExperimentRunner::augmented_manifest(std::uint64_t seed, Strategy strategy) {
    const fs::path dir = root_ / seed_dir_name(seed) / to_string(strategy);
    const fs::path path = dir / "manifest.csv";
    if (fs::exists(path)) return path;
    const fs::path plan_path = plan(seed, strategy);
    std::optional<GanBundle> acgan, stage1, stage2;
    GeneratorSet gens;
    if (strategy == Strategy::acgan) {
        acgan.emplace(load_checkpoint(gan(seed, StageTag::acgan), StageTag::acgan));
        gens.acgan = &*acgan;
    } else if (strategy == Strategy::gdgan) {
        const fs::path p1 = gan(seed, StageTag::stage1);
        const fs::path p2 = gan(seed, StageTag::stage2);
        stage1.emplace(load_checkpoint(p1, StageTag::stage1));
        stage2.emplace(load_checkpoint(p2, StageTag::stage2));
        gens.stage1 = &*stage1;
        gens.stage2 = &*stage2;
    }
    in_context("seed " + std::to_string(seed) + " / " + to_string(strategy) + " / augment", [&] {
        const AugmentationPlan p = AugmentationPlan::load(plan_path);
        const DatasetSplit s = split(seed);
        const std::vector<LabelRecord> train = select_records(records(), s.train);
        DirectoryStore synthetic(dir / "synthetic", true);
        log(options_, "seed " + std::to_string(seed) + " / " + to_string(strategy) + ": materializing " +
                          std::to_string(p.total()) + " rows");
        const MaterializedSet m =
            materialize(p, train, synthetic, gens, derive_seed(seed, {to_string(strategy), "synthesize"}));
        fs::path tmp = path;
        tmp += ".tmp";
        write_training_manifest(tmp, m.manifest, config_.schema());
        fs::rename(tmp, path);
    });
    return path;
}

fs::path ExperimentRunner::classifier(std::uint64_t seed, Strategy strategy) {
    const fs::path dir = root_ / seed_dir_name(seed) / to_string(strategy);
    const fs::path path = dir / "classifier.ckpt";
    if (fs::exists(path)) return path;
    const fs::path manifest_path = augmented_manifest(seed, strategy);
    const std::string where = "seed " + std::to_string(seed) + " / " + to_string(strategy) + " / classifier";
    in_context(where, [&] {
        const LabelSchema schema = config_.schema();
        const TrainingManifest m = load_training_manifest(manifest_path, schema);
        DirectoryStore synthetic(dir / "synthetic", true);
        OverlayStore store(synthetic, corpus_store());
        const LabeledSet train = load_labeled_set(m, store);
        const DatasetSplit s = split(seed);
        const LabeledSet val = load_labeled_set(select_records(records(), s.validation), corpus_store());
        ClassifierConfig cc = config_.classifier;
        cc.seed = derive_seed(seed, {to_string(strategy), "classifier"});
        log(options_, where + ": training on " + std::to_string(train.size()) + " images for " +
                          std::to_string(cc.epochs) + " epochs");
        TrainHistory history;
        ClassifierBundle bundle = train_classifier(config_.classifier_arch, train, val, cc, &history);
        write_text(dir / "history.json", history.to_json() + "\n");
        bundle.save(path);
    });
    return path;
}

fs::path ExperimentRunner::cell_path(std::uint64_t seed, Strategy strategy) const {
    return root_ / seed_dir_name(seed) / to_string(strategy) / "eval" / "cell.json";
}

CellResult ExperimentRunner::cell(std::uint64_t seed, Strategy strategy, bool* computed) {
    const fs::path path = cell_path(seed, strategy);
    if (computed) *computed = false;
    if (fs::exists(path)) return CellResult::from_json(read_text(path));

    const fs::path ckpt = classifier(seed, strategy);
    const std::string where = "seed " + std::to_string(seed) + " / " + to_string(strategy) + " / evaluate";
    CellResult cell = in_context(where, [&] {
        const LabelSchema schema = config_.schema();
        const DatasetSplit s = split(seed);
        const AugmentationPlan p = AugmentationPlan::load(plan(seed, strategy));
        const TrainingManifest m = load_training_manifest(augmented_manifest(seed, strategy), schema);
        ClassifierBundle bundle = ClassifierBundle::load(ckpt);
        const std::vector<LabelRecord> test = select_records(records(), s.test);
        const EvaluationResult eval =
            evaluate_classifier(bundle, test, corpus_store(), schema, config_.focus_label, s.test_hash());

        CellResult c;
        c.strategy = to_string(strategy);
        c.seed = seed;
        c.split_hash = hex64(s.hash());
        c.n_total = m.size();
        c.n_focus = count_positive(m.rows, schema.detailed_index_or_throw(config_.focus_label));
        c.target_total = p.targets.total;
        c.target_focus = p.targets.focus;
        c.focus_auc = eval.focus_auc;
        const fs::path rel_dir = fs::path(seed_dir_name(seed)) / to_string(strategy) / "eval";
        for (const auto& [name, roc] : eval.per_label) {
            const fs::path rel = rel_dir / ("roc_" + name + ".csv");
            write_text(root_ / rel, roc.to_csv());
            c.per_label_auc[name] = roc.auc;
            c.per_label_roc[name] = rel.generic_string();
        }
        const json h = parse_json(read_text(root_ / seed_dir_name(seed) / to_string(strategy) / "history.json"),
                                  "training history");
        c.best_epoch = h.value("best_epoch", -1);
        return c;
    });
    if (cell.n_total != cell.target_total || cell.n_focus != cell.target_focus)
        raise(ErrorKind::UnachievableTarget, where + ": realized counts differ from the plan targets");
    write_text(path, cell.to_json(config_.focus_label) + "\n");
    if (computed) *computed = true;
    log(options_, where + ": focus AUC " + std::to_string(cell.focus_auc));
    return cell;
}

bool ExperimentRunner::inception_available() const {
    return config_.inception.enabled &&
           (config_.corpus.kind == CorpusConfig::Kind::toy || !config_.inception.oracle_checkpoint.empty());
}

InceptionBlock ExperimentRunner::inception() {
    const fs::path dir = root_ / "inception";
    const fs::path path = dir / "inception.json";
    if (fs::exists(path)) return inception_from_json(parse_json(read_text(path), "inception block"));
    if (!inception_available())
        raise(ErrorKind::BadArgument, "inception scoring needs the toy corpus or an oracle checkpoint");

    const std::uint64_t seed = config_.seeds.front();
    const fs::path p1 = gan(seed, StageTag::stage1);
    const fs::path p2 = gan(seed, StageTag::stage2);
    const fs::path pa = gan(seed, StageTag::acgan);

    InceptionBlock block = in_context("inception", [&] {
        fs::path oracle_path = config_.inception.oracle_checkpoint;
        if (oracle_path.empty()) {
            oracle_path = dir / "oracle.ckpt";
            if (!fs::exists(oracle_path)) {
                log(options_, "inception: training toy oracle");
                double accuracy = 0.0;
                ToyOracle trained = ToyOracle::train(config_.inception.oracle, &accuracy);
                fs::create_directories(dir);
                trained.save(oracle_path);
                write_text(dir / "oracle.json", json{{"accuracy", accuracy}}.dump(2) + "\n");
            }
        }
        ToyOracle oracle = ToyOracle::load(oracle_path);

        const LabelSchema schema = config_.schema();
        const DatasetSplit s = split(seed);
        const std::vector<LabelRecord> train = select_records(records(), s.train);
        const std::int64_t n = config_.inception.images;
        const auto g = static_cast<std::int64_t>(schema.general_labels.size());
        const auto d = static_cast<std::int64_t>(schema.detailed_labels.size());

        // Real images are drawn from the train split; their labels condition both generators.
        Rng rng(derive_seed(seed, {"inception", "sample"}));
        std::vector<std::size_t> picks(train.size());
        for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
        for (std::size_t i = picks.size(); i > 1; --i) std::swap(picks[i - 1], picks[rng.below(i)]);
        std::vector<std::string> real_ids;
        auto general = torch::zeros({n, g}, torch::kLong);
        auto detailed = torch::zeros({n, d}, torch::kFloat32);
        for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(i) < picks.size() ? picks[i] : rng.below(train.size());
            const LabelRecord& r = train[k];
            real_ids.push_back(r.image_id);
            for (std::int64_t j = 0; j < g; ++j) {
                general[i][j] = config_.inception.labels == "uniform"
                                    ? static_cast<std::int64_t>(rng.below(schema.general_labels[j].cardinality()))
                                    : r.general[j];
            }
            for (std::int64_t j = 0; j < d; ++j) {
                detailed[i][j] = config_.inception.labels == "uniform" ? (rng.bernoulli(0.5) ? 1.0f : 0.0f)
                                                                       : static_cast<float>(r.detailed[j]);
            }
        }

        GanBundle stage1 = load_checkpoint(p1, StageTag::stage1);
        GanBundle stage2 = load_checkpoint(p2, StageTag::stage2);
        GanBundle acgan = load_checkpoint(pa, StageTag::acgan);
        at::Generator gen_g = make_torch_generator(derive_seed(seed, {"inception", "gdgan"}));
        at::Generator gen_a = make_torch_generator(derive_seed(seed, {"inception", "acgan"}));
        std::vector<torch::Tensor> gd_parts, ac_parts;
        constexpr std::int64_t chunk = 250;
        for (std::int64_t start = 0; start < n; start += chunk) {
            const std::int64_t end = std::min(n, start + chunk);
            auto gl = general.slice(0, start, end);
            auto dl = detailed.slice(0, start, end);
            gd_parts.push_back(sample_gdgan(stage1, stage2, gl, dl, gen_g).images.data);
            ac_parts.push_back(sample_acgan(acgan, gl, dl, gen_a).images.data);
        }
        std::map<std::string, ImageBatch> sources;
        sources["real"] = load_batch(corpus_store(), real_ids);
        sources["gdgan"] = ImageBatch{torch::cat(gd_parts), {}};
        sources["acgan"] = ImageBatch{torch::cat(ac_parts), {}};
        log(options_, "inception: scoring " + std::to_string(n) + " images per source");
        InceptionBlock b = compare_inception(sources, oracle, config_.inception.splits);
        for (const auto& [name, batch] : sources) {
            const fs::path rel = fs::path("inception") / ("samples_" + name + ".png");
            fs::create_directories(dir);
            write_png(root_ / rel, image_grid(batch, 4, 4));
            b.sample_grids[name] = rel.generic_string();
        }
        return b;
    });
    write_text(path, inception_to_json(block).dump(2) + "\n");
    return block;
}

// ---------------------------------------------------------------------------

EvaluationReport assemble_report(const ExperimentConfig& config) {
    config.validate();
    const fs::path root = run_root(config);
    EvaluationReport report;
    report.config_hash = hex64(config.hash());
    report.focus_label = config.focus_label;
    for (Strategy s : config.strategies) {
        for (std::uint64_t seed : config.seeds) {
            const fs::path path = root / seed_dir_name(seed) / to_string(s) / "eval" / "cell.json";
            if (fs::exists(path)) report.cells.push_back(CellResult::from_json(read_text(path)));
        }
    }
    report.strategies = summarize(report.cells);
    const fs::path inc = root / "inception" / "inception.json";
    if (fs::exists(inc)) report.inception = inception_from_json(parse_json(read_text(inc), "inception block"));
    return report;
}

std::optional<EvaluationReport> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    ExperimentRunner runner(config, options);
    int fresh = 0;
    auto should_stop = [&] { return options.stop_after_cells && fresh >= *options.stop_after_cells; };
    for (std::uint64_t seed : config.seeds) {
        for (Strategy s : config.strategies) {
            bool computed = false;
            runner.cell(seed, s, &computed);
            if (computed) ++fresh;
            if (should_stop()) return std::nullopt;
        }
    }
    if (runner.inception_available()) runner.inception();
    EvaluationReport report = assemble_report(config);
    render_report(report, runner.root(), runner.root() / "report");
    return report;
}

InceptionBlock run_inception_comparison(const ExperimentConfig& config, const RunOptions& options) {
    ExperimentRunner runner(config, options);
    return runner.inception();
}

}  // namespace gdgan
