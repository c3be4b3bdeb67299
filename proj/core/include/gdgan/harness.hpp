#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdgan/augmentation.hpp"
#include "gdgan/classifier.hpp"
#include "gdgan/gan_bundle.hpp"
#include "gdgan/gan_train.hpp"
#include "gdgan/image_store.hpp"
#include "gdgan/labels.hpp"
#include "gdgan/metrics.hpp"
#include "gdgan/split.hpp"
#include "gdgan/toy_oracle.hpp"

namespace gdgan {

struct CorpusConfig {
    enum class Kind { toy, manifest } kind = Kind::toy;
    // toy
    std::size_t toy_n = 10000;
    double toy_rare_rate = 0.025;
    std::uint64_t toy_seed = 0;
    // manifest
    std::filesystem::path manifest;
    std::filesystem::path images;
    std::string schema = "chest_xray";
};

/// Augmentation targets expressed relative to the raw train split. Defaults
/// are the count ratios of the reference experiment: 64,276/78,468 for the
/// undersampled total; 100,716/78,468 and 14,103/1,937 for the augmented total
/// and focus count.
struct TargetConfig {
    double undersample_total_ratio = 64276.0 / 78468.0;
    double augment_total_ratio = 100716.0 / 78468.0;
    double augment_focus_ratio = 14103.0 / 1937.0;
    /// Absolute overrides (0 = use the ratio).
    std::size_t undersample_total = 0;
    std::size_t augment_total = 0;
    std::size_t augment_focus = 0;
    double minority_threshold = 0.2;
};

struct GanSettings {
    int noise_dim = 100;
    int generator_width = 64;
    int critic_width = 64;
    TrainConfig stage1;
    TrainConfig stage2;
    TrainConfig acgan = TrainConfig::acgan_defaults();
    /// Train the GANs once (first seed) and reuse them for every seed.
    bool reuse_across_seeds = false;
};

struct InceptionSettings {
    bool enabled = true;
    std::int64_t images = 1000;
    std::size_t splits = 10;
    /// "empirical" (train label distribution) or "uniform".
    std::string labels = "empirical";
    ToyOracleRecipe oracle;
    /// Pretrained oracle checkpoint; empty = train the toy oracle.
    std::filesystem::path oracle_checkpoint;
};

struct ExperimentConfig {
    CorpusConfig corpus;
    std::string focus_label = "mark0";
    std::vector<Strategy> strategies = all_strategies();
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    SplitRatios ratios;
    SplitMode split_mode = SplitMode::by_image;
    TargetConfig targets;
    GanSettings gan;
    ClassifierArch classifier_arch;
    ClassifierConfig classifier;
    InceptionSettings inception;
    std::filesystem::path output_dir = "out";

    /// Throws BadArgument when no strategy/seed is given or the focus label is unknown.
    void validate() const;
    LabelSchema schema() const;
    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Hash of everything that influences results (the output directory excluded).
    std::uint64_t hash() const;
};

/// One (strategy, seed) evaluation.
struct CellResult {
    std::string strategy;
    std::uint64_t seed = 0;
    std::string split_hash;
    std::size_t n_total = 0;
    std::size_t n_focus = 0;
    std::size_t target_total = 0;
    std::size_t target_focus = 0;
    double focus_auc = 0.0;
    std::map<std::string, double> per_label_auc;
    /// ROC CSV per label, relative to the run root.
    std::map<std::string, std::string> per_label_roc;
    int best_epoch = -1;

    const std::string& focus_roc(const std::string& focus_label) const { return per_label_roc.at(focus_label); }
    std::string to_json(const std::string& focus_label) const;
    static CellResult from_json(const std::string& text);
};

struct StrategySummary {
    std::string strategy;
    std::size_t cells = 0;
    double mean_auc = 0.0;
    double sd_auc = 0.0;
    double mean_total = 0.0;
    double sd_total = 0.0;
    double mean_focus = 0.0;
    double sd_focus = 0.0;
};

struct PairwiseTest {
    std::string a;
    std::string b;
    WelchResult result;
    bool defined = true;
};

struct InceptionBlock {
    std::string oracle;
    std::int64_t images_per_source = 0;
    std::map<std::string, InceptionScoreResult> sources;
    std::vector<PairwiseTest> tests;
    /// Sample grids (PNG) per source, relative to the run root.
    std::map<std::string, std::string> sample_grids;
};

struct EvaluationReport {
    std::string config_hash;
    std::string focus_label;
    std::vector<CellResult> cells;
    std::vector<StrategySummary> strategies;
    std::optional<InceptionBlock> inception;

    std::string to_json() const;
    static EvaluationReport from_json(const std::string& text);
};

/// Per-strategy mean/SD recomputed from cells (strategy order of first appearance).
std::vector<StrategySummary> summarize(const std::vector<CellResult>& cells);

/// All three pairwise Welch tests between inception-score sources, in key order.
std::vector<PairwiseTest> pairwise_tests(const std::map<std::string, InceptionScoreResult>& sources);

/// Scores each named image source with one shared oracle and runs all pairwise tests.
InceptionBlock compare_inception(const std::map<std::string, ImageBatch>& sources, LabelProbabilityOracle& oracle,
                                 std::size_t n_splits);

/// Resolves (total, focus) targets for a strategy from the raw train counts.
PlanTargets resolve_targets(Strategy strategy, const TargetConfig& config, std::size_t n_train, std::size_t n_focus);

struct RunOptions {
    /// Stop (returning std::nullopt) after this many newly completed cells.
    std::optional<int> stop_after_cells;
    bool verbose = false;
};

/// Stage-level building blocks of run_experiment; each reuses its artifact when present.
class ExperimentRunner {
public:
    ExperimentRunner(ExperimentConfig config, RunOptions options = {});
    ~ExperimentRunner();
    ExperimentRunner(const ExperimentRunner&) = delete;
    ExperimentRunner& operator=(const ExperimentRunner&) = delete;

    const ExperimentConfig& config() const { return config_; }
    const std::filesystem::path& root() const { return root_; }
    const std::vector<LabelRecord>& records();
    const ImageStore& corpus_store();
    DatasetSplit split(std::uint64_t seed);
    /// Path of a trained GAN checkpoint for `seed`, training it on demand.
    std::filesystem::path gan(std::uint64_t seed, StageTag stage);
    std::filesystem::path plan(std::uint64_t seed, Strategy strategy);
    std::filesystem::path augmented_manifest(std::uint64_t seed, Strategy strategy);
    std::filesystem::path classifier(std::uint64_t seed, Strategy strategy);
    /// Evaluates (or reloads) one cell. `computed` reports whether work was done.
    CellResult cell(std::uint64_t seed, Strategy strategy, bool* computed = nullptr);
    InceptionBlock inception();
    bool inception_available() const;
    std::filesystem::path cell_path(std::uint64_t seed, Strategy strategy) const;

private:
    struct State;
    ExperimentConfig config_;
    RunOptions options_;
    std::filesystem::path root_;
    std::unique_ptr<State> state_;
};

/// Runs or resumes the full experiment under config.output_dir. Every stage
/// writes its artifact atomically and is skipped when that artifact exists.
std::optional<EvaluationReport> run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Runs only the inception comparison (real vs ACGAN vs GDGAN) for the first seed.
InceptionBlock run_inception_comparison(const ExperimentConfig& config, const RunOptions& options = {});

/// Rebuilds the report from stored cell artifacts alone.
EvaluationReport assemble_report(const ExperimentConfig& config);

/// Writes report.json, the count/AUC and inception CSV tables, one ROC SVG per
/// strategy (all seeds overlaid) and the real/ACGAN/GDGAN sample figure.
/// Artifact paths in the report are resolved against `artifact_root`. Throws
/// MissingArtifact when the report is empty or a referenced artifact is
/// missing. Returns the written paths.
std::vector<std::filesystem::path> render_report(const EvaluationReport& report,
                                                 const std::filesystem::path& artifact_root,
                                                 const std::filesystem::path& out_dir);

/// Tiles the first rows×cols images of a batch into one 8-bit raster.
RawImage image_grid(const ImageBatch& batch, int rows, int cols, int gap = 2);

/// Directory holding all artifacts of one configuration.
std::filesystem::path run_root(const ExperimentConfig& config);

std::string hex64(std::uint64_t v);

}  // namespace gdgan
