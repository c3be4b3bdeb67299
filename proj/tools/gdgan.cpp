#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <ATen/Context.h>
#include <ATen/Parallel.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdgan/error.hpp"
#include "gdgan/harness.hpp"
#include "gdgan/manifest.hpp"
#include "gdgan/toy_corpus.hpp"

namespace fs = std::filesystem;
using namespace gdgan;

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool deterministic = false;
    bool verbose = false;
};

ExperimentConfig load_config(const GlobalFlags& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
    if (g.seed) cfg.seeds = {*g.seed};
    if (!g.out.empty()) cfg.output_dir = g.out;
    cfg.validate();
    return cfg;
}

void apply_runtime(const GlobalFlags& g) {
    if (g.deterministic) {
        at::set_num_threads(1);
        at::set_num_interop_threads(1);
        at::globalContext().setDeterministicAlgorithms(true, false);
    }
}

RunOptions run_options(const GlobalFlags& g) {
    RunOptions o;
    o.verbose = g.verbose;
    return o;
}

void print_path(const fs::path& p) { std::cout << p.string() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GDGAN: two-stage conditional GAN augmentation and evaluation pipeline"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Repeat seed; restricts the run to this one seed");
    app.add_option("--out", g.out, "Output directory (overrides the config)");
    app.add_flag("--deterministic", g.deterministic, "Single-threaded deterministic kernels");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    auto* prepare = app.add_subcommand("prepare-data", "Load or render the corpus and write the split for --seed");

    auto* toy = app.add_subcommand("make-toy", "Render a procedural toy corpus (manifest.csv + images/)");
    std::size_t toy_n = 10000;
    double toy_rate = 0.025;
    std::uint64_t toy_seed = 0;
    std::string toy_dir = "toy";
    toy->add_option("-n,--count", toy_n, "Number of images")->capture_default_str();
    toy->add_option("--rare-rate", toy_rate, "Frequency of the rare label")->capture_default_str();
    toy->add_option("--corpus-seed", toy_seed, "Seed of the corpus")->capture_default_str();
    toy->add_option("--dir", toy_dir, "Target directory")->capture_default_str();

    auto* train_gan = app.add_subcommand("train-gan", "Train one GAN stage for --seed");
    std::string stage = "1";
    train_gan->add_option("--stage", stage, "1, 2 or acgan")
        ->required()
        ->check(CLI::IsMember({"1", "2", "acgan", "stage1", "stage2"}));

    auto* augment = app.add_subcommand("augment", "Build and materialize the augmented training set");
    auto* train_clf = app.add_subcommand("train-classifier", "Train the classifier on an augmented set");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate the classifier on the test split");
    std::string strategy = "none";
    for (auto* sub : {augment, train_clf, evaluate})
        sub->add_option("--strategy", strategy, "none, undersample, oversample, acgan or gdgan")
            ->check(CLI::IsMember({"none", "undersample", "oversample", "acgan", "gdgan"}))
            ->capture_default_str();
    augment->get_option("--strategy")->required();

    auto* inception = app.add_subcommand("inception-score", "Score real, ACGAN and GDGAN images with the oracle");

    auto* run_all = app.add_subcommand("run-all", "Run or resume the whole experiment and render the report");
    int stop_after = -1;
    run_all->add_option("--stop-after-cells", stop_after, "Stop after this many newly evaluated cells");

    auto* report = app.add_subcommand("report", "Rebuild the report from stored artifacts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (toy->parsed()) {
            ToyCorpus corpus = generate_toy_corpus(toy_n, toy_rate, toy_seed);
            DirectoryStore images(fs::path(toy_dir) / "images", true);
            corpus.images.flush_to(images);
            write_manifest(fs::path(toy_dir) / "manifest.csv", corpus.records, corpus.schema);
            std::printf("%zu images, %zu with %s\n", corpus.records.size(),
                        count_positive(corpus.records, 0), corpus.schema.detailed_labels[0].c_str());
            return 0;
        }

        apply_runtime(g);
        const ExperimentConfig cfg = load_config(g);
        const std::uint64_t seed = cfg.seeds.front();

        if (run_all->parsed()) {
            RunOptions o = run_options(g);
            if (stop_after >= 0) o.stop_after_cells = stop_after;
            auto r = run_experiment(cfg, o);
            if (!r) {
                std::cerr << "stopped early; rerun to resume\n";
                return 0;
            }
            print_path(run_root(cfg) / "report" / "report.json");
            return 0;
        }
        if (report->parsed()) {
            const EvaluationReport r = assemble_report(cfg);
            for (const auto& p : render_report(r, run_root(cfg), run_root(cfg) / "report")) print_path(p);
            return 0;
        }

        ExperimentRunner runner(cfg, run_options(g));
        if (prepare->parsed()) {
            std::printf("%zu records\n", runner.records().size());
            const DatasetSplit s = runner.split(seed);
            std::printf("split %s: train %zu, validation %zu, test %zu\n", hex64(s.hash()).c_str(), s.train.size(),
                        s.validation.size(), s.test.size());
        } else if (train_gan->parsed()) {
            print_path(runner.gan(seed, stage_tag_from_string(stage)));
        } else if (augment->parsed()) {
            print_path(runner.augmented_manifest(seed, strategy_from_string(strategy)));
        } else if (train_clf->parsed()) {
            print_path(runner.classifier(seed, strategy_from_string(strategy)));
        } else if (evaluate->parsed()) {
            const CellResult c = runner.cell(seed, strategy_from_string(strategy));
            std::cout << c.to_json(cfg.focus_label) << "\n";
        } else if (inception->parsed()) {
            const InceptionBlock b = runner.inception();
            for (const auto& [name, r] : b.sources) std::printf("%-6s %.4f ± %.4f\n", name.c_str(), r.mean, r.sd);
            for (const auto& t : b.tests)
                std::printf("%s vs %s: t=%.4g dof=%.4g p=%.4g\n", t.a.c_str(), t.b.c_str(), t.result.t,
                            t.result.dof, t.result.p_two_sided);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.message() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
