// Acceptance suite: one PASS/FAIL line per criterion.

#include <torch/torch.h>

#include <csignal>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "gdgan/augmentation.hpp"
#include "gdgan/checkpoint.hpp"
#include "gdgan/classifier.hpp"
#include "gdgan/error.hpp"
#include "gdgan/gan_losses.hpp"
#include "gdgan/harness.hpp"
#include "gdgan/metrics.hpp"
#include "gdgan/rng.hpp"
#include "gdgan/split.hpp"
#include "gdgan/toy_corpus.hpp"
#include "oracles.hpp"

extern char** environ;

using namespace gdgan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* pattern, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Settings {
    fs::path work = fs::temp_directory_path() / "gdgan_acceptance";
    fs::path e2e_config;
    fs::path determinism_config;
    fs::path cli;
};

// 1. Metric oracles.
Outcome metric_oracles(const Settings&) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t k : {2u, 5u, 10u, 14u}) {
        const std::size_t n = 4 * k, splits = 2;
        std::vector<double> uniform(n * splits * k, 1.0 / static_cast<double>(k));
        std::vector<double> onehot(n * splits * k, 0.0);
        for (std::size_t i = 0; i < n * splits; ++i) onehot[i * k + i % k] = 1.0;
        const auto u = inception_score(uniform, k, splits);
        const auto h = inception_score(onehot, k, splits);
        for (double s : u.per_batch_scores) o.check(std::abs(s - 1.0) <= 1e-9, "uniform IS != 1 for K=" + std::to_string(k));
        for (double s : h.per_batch_scores)
            o.check(std::abs(s - static_cast<double>(k)) <= 1e-9, "one-hot IS != K for K=" + std::to_string(k));
    }

    Rng rng(20240101);
    double worst_auc = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(49);
        const std::uint64_t levels = 1 + rng.below(6);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(levels)) / 3.0;
            labels[i] = rng.bernoulli(0.5);
        }
        labels[0] = 1;
        labels[1] = 0;
        worst_auc = std::max(worst_auc, std::abs(roc_curve(scores, labels).auc - oracle::pairwise_auc(scores, labels)));
    }
    o.check(worst_auc <= 1e-12, "AUC deviates from pairwise oracle by " + fmt("%.3g", worst_auc));
    o.note("max |AUC - oracle| " + fmt("%.2g", worst_auc));

    double worst_rel = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t na = 3 + rng.below(30), nb = 3 + rng.below(30);
        std::vector<double> a(na), b(nb);
        const double ma = rng.uniform(-1, 1), mb = rng.uniform(-1, 1);
        const double sa = rng.uniform(0.05, 2), sb = rng.uniform(0.05, 2);
        for (auto& x : a) x = ma + sa * rng.normal();
        for (auto& x : b) x = mb + sb * rng.normal();
        const WelchResult got = welch_t_test(a, b);
        const oracle::Welch want = oracle::welch(a, b);
        worst_rel = std::max({worst_rel, std::abs(got.t - want.t) / std::abs(want.t),
                              std::abs(got.dof - want.dof) / want.dof,
                              std::abs(got.p_two_sided - want.p) / want.p});
    }
    o.check(worst_rel <= 1e-9, "Welch relative error " + fmt("%.3g", worst_rel));
    o.note("max Welch relative error " + fmt("%.2g", worst_rel));
    const double secs = seconds_since(t0);
    o.check(secs < 60, "runtime " + fmt("%.1f s", secs));
    o.note(fmt("%.1f s", secs));
    return o;
}

/// Central-difference ‖∇ₓ score‖ for one image, perturbing pixels in chunks.
double finite_difference_norm(Critic& critic, const torch::Tensor& x, double h) {
    torch::NoGradGuard guard;
    const std::int64_t pixels = x.numel();
    const std::int64_t chunk = 128;
    const auto base = x.reshape({1, pixels});
    auto buf = base.expand({chunk, pixels}).clone();
    double sum_sq = 0;
    for (std::int64_t s = 0; s < pixels; s += chunk) {
        const std::int64_t m = std::min(chunk, pixels - s);
        auto rows = buf.slice(0, 0, m);
        rows.copy_(base.expand({m, pixels}));
        // Row i perturbs pixel s + i.
        rows.diagonal(s).add_(h);
        const auto up = critic->score(rows.reshape({m, 1, 64, 64}));
        rows.diagonal(s).sub_(2 * h);
        const auto down = critic->score(rows.reshape({m, 1, 64, 64}));
        sum_sq += ((up - down) / (2 * h)).pow(2).sum().item<double>();
    }
    return std::sqrt(sum_sq);
}

// 2. Gradient penalty.
Outcome gradient_penalty_checks(const Settings&) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    auto gen = make_torch_generator(2);
    Critic critic(2, std::vector<int>{2, 2}, 4);
    init_parameters(*critic, gen, 0.3);
    critic->to(torch::kFloat64);
    std::int64_t params = 0;
    for (const auto& p : critic->parameters()) params += p.numel();
    o.check(params <= 10000, "critic has " + std::to_string(params) + " parameters");

    const ScoreFn fn = [&](const torch::Tensor& x) { return critic->score(x); };
    double worst = 0;
    for (int batch = 0; batch < 20; ++batch) {
        const auto real = torch::rand({2, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto fake = torch::rand({2, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto x = random_interpolates(real, fake, gen);
        const auto norms = input_gradient_norms(fn, x);
        for (int i = 0; i < 2; ++i) {
            const double fd = finite_difference_norm(critic, x[i].detach().unsqueeze(0), 1e-5);
            worst = std::max(worst, std::abs(norms[i].item<double>() - fd) / fd);
        }
    }
    o.check(worst <= 1e-3, "finite-difference relative error " + fmt("%.3g", worst));
    o.note(std::to_string(params) + " params, 20 batches, max rel err " + fmt("%.2g", worst));

    const auto real = torch::rand({8, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
    const auto fake = torch::rand({8, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
    auto u = torch::randn({1, 1, 64, 64}, gen, torch::kFloat64);
    u = u / u.norm();
    const double linear_gp =
        gradient_penalty([u](const torch::Tensor& x) { return (x * u).flatten(1).sum(1); }, real, fake, gen)
            .item<double>();
    const double constant_gp =
        gradient_penalty([](const torch::Tensor& x) { return torch::full({x.size(0)}, 0.7, x.options()); }, real,
                         fake, gen)
            .item<double>();
    o.check(std::abs(linear_gp) <= 1e-6, "unit-gradient linear critic GP " + fmt("%.3g", linear_gp));
    o.check(std::abs(constant_gp - 1.0) <= 1e-6, "constant critic GP " + fmt("%.6g", constant_gp));
    const double secs = seconds_since(t0);
    o.check(secs < 120, "runtime " + fmt("%.1f s", secs));
    o.note(fmt("%.1f s", secs));
    return o;
}

// 3. Loss composition.
Outcome loss_composition(const Settings&) {
    Outcome o;
    auto arch = [](StageTag s) {
        GanArch a;
        a.stage = s;
        a.noise_dim = 8;
        a.generator_width = 4;
        a.critic_width = 4;
        return a;
    };
    GanBundle s1(arch(StageTag::stage1), 1), s2(arch(StageTag::stage2), 2), ac(arch(StageTag::acgan), 3);
    auto gen = make_torch_generator(31);
    Rng rng(32);
    double worst = 0;
    std::size_t audited = 0;
    for (int trial = 0; trial < 100; ++trial) {
        LossWeights w{rng.uniform(0, 20), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 50)};
        switch (trial % 5) {
            case 0: w.lambda_gp = 0; break;
            case 1: w.w_cls_general = 0; break;
            case 2: w.w_cls_detailed = 0; break;
            case 3: w.w_mse = 0; break;
            default: break;
        }
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.below(4));
        const auto real = torch::rand({n, 1, 64, 64}, gen) * 2 - 1;
        const auto fake = torch::rand({n, 1, 64, 64}, gen) * 2 - 1;
        const auto general = torch::randint(0, 2, {n, 2}, gen, torch::kLong);
        const auto detailed = torch::randint(0, 2, {n, 4}, gen, torch::kFloat32);
        const std::vector<LossResult> results = {
            stage1_critic_loss(s1.critic(), real, general, fake, w, gen),
            stage1_generator_loss(s1.critic(), fake, general, w),
            stage2_critic_loss(s2.critic(), real, detailed, fake, w, gen),
            stage2_generator_loss(s2.critic(), s1.critic(), real, fake, detailed, general, w),
            acgan_discriminator_loss(ac.critic(), real, general, detailed, fake, general, detailed, w),
            acgan_generator_loss(ac.critic(), fake, general, detailed, w),
        };
        for (const auto& r : results) {
            const auto& p = r.parts;
            const double sum = p.wasserstein_term + w.lambda_gp * p.gradient_penalty_term +
                               w.w_cls_general * p.general_class_nll + w.w_cls_detailed * p.detailed_class_nll +
                               w.w_mse * p.reconstruction_mse;
            const double err = std::abs(p.total - sum) / std::max(1.0, std::abs(sum));
            const double tensor_err = std::abs(r.total.item<double>() - sum) / std::max(1.0, std::abs(sum));
            worst = std::max({worst, err, tensor_err});
            ++audited;
        }
    }
    o.check(worst <= 1e-6, "loss total deviates by " + fmt("%.3g", worst));
    o.note(std::to_string(audited) + " breakdowns over 100 weight configurations, max rel err " + fmt("%.2g", worst));
    return o;
}

// 4. Count bookkeeping.
Outcome count_bookkeeping(const Settings&) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const ToyCorpus corpus = generate_toy_corpus(10000, 0.025, 2024);
    const DatasetSplit split = make_split(corpus.records, {}, 1);
    const std::string val_before = DatasetSplit{{}, split.validation, split.test, 0, SplitMode::by_image}.to_json();
    const auto train = select_records(corpus.records, split.train);
    const std::size_t focus = count_positive(train, 0);
    const std::set<std::string> train_ids(split.train.begin(), split.train.end());
    std::set<std::string> held_out(split.validation.begin(), split.validation.end());
    held_out.insert(split.test.begin(), split.test.end());

    GanArch a;
    a.noise_dim = 8;
    a.generator_width = 4;
    a.critic_width = 4;
    a.stage = StageTag::stage1;
    GanBundle s1(a, 1);
    a.stage = StageTag::stage2;
    GanBundle s2(a, 2);
    a.stage = StageTag::acgan;
    GanBundle ac(a, 3);

    const TargetConfig targets;
    for (Strategy s : all_strategies()) {
        const std::string name = to_string(s);
        const PlanTargets t = resolve_targets(s, targets, train.size(), focus);
        const AugmentationPlan plan = build_plan(s, train, corpus.schema, "mark0", t, 7);
        MemoryStore delta;
        const MaterializedSet m = materialize(plan, train, delta, {&ac, &s1, &s2}, 7);
        std::size_t realized_focus = 0;
        for (const auto& r : m.manifest.rows) realized_focus += r.has(0);
        o.check(m.manifest.size() == t.total && realized_focus == t.focus,
                name + " realized (" + std::to_string(m.manifest.size()) + ", " + std::to_string(realized_focus) +
                    ") vs target (" + std::to_string(t.total) + ", " + std::to_string(t.focus) + ")");
        o.note(name + " (" + std::to_string(m.manifest.size()) + ", " + std::to_string(realized_focus) + ")");

        const std::set<std::string> kept(plan.keep.begin(), plan.keep.end());
        for (const auto& id : plan.keep) o.check(train_ids.count(id) == 1, name + " keeps a non-train id");
        if (s == Strategy::undersample) {
            o.check(plan.duplicate.empty() && plan.synthesize.empty(), "undersample adds records");
            for (const auto& r : train)
                if (r.has(0) && !kept.count(r.image_id)) o.check(false, "undersample dropped a focus positive");
        } else {
            o.check(kept == train_ids, name + " does not keep the whole train split");
        }
        if (s == Strategy::oversample) o.check(plan.synthesize.empty(), "oversample synthesizes");
        if (s == Strategy::acgan || s == Strategy::gdgan) {
            o.check(plan.duplicate.empty(), name + " duplicates records");
            o.check(m.synthetic_ids.size() == plan.synthesize_count(), name + " synthetic count");
        }
        for (const auto& src : m.manifest.sources)
            o.check(!held_out.count(src), name + " uses a validation/test image");
        o.check(DatasetSplit{{}, split.validation, split.test, 0, SplitMode::by_image}.to_json() == val_before,
                name + " changed validation/test ids");
    }
    const DatasetSplit again = make_split(corpus.records, {}, 1);
    o.check(again.validation == split.validation && again.test == split.test, "validation/test ids not reproducible");
    const double secs = seconds_since(t0);
    o.check(secs < 60, "runtime " + fmt("%.1f s", secs));
    o.note(fmt("%.1f s", secs));
    return o;
}

// 5. End-to-end toy pipeline.
Outcome end_to_end(const Settings& s) {
    Outcome o;
    ExperimentConfig cfg = ExperimentConfig::load(s.e2e_config);
    cfg.output_dir = s.work / "e2e";
    fs::remove_all(cfg.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions opts;
    opts.verbose = true;
    const auto report = run_experiment(cfg, opts);
    const double minutes = seconds_since(t0) / 60.0;
    if (!report) {
        o.check(false, "run did not complete");
        return o;
    }
    const unsigned cores = std::thread::hardware_concurrency();
    o.check(minutes <= 60.0, "wall time " + fmt("%.1f min", minutes));
    o.note(fmt("%.1f min", minutes) + " on " + std::to_string(cores) + " core(s)");

    double none = -1, gdgan = -1;
    for (const auto& st : report->strategies) {
        if (st.strategy == "none") none = st.mean_auc;
        if (st.strategy == "gdgan") gdgan = st.mean_auc;
        o.note(st.strategy + " AUC " + fmt("%.4f", st.mean_auc) + " +- " + fmt("%.4f", st.sd_auc));
    }
    o.check(none >= 0 && gdgan >= 0, "missing none or gdgan cells");
    o.check(gdgan >= none - 0.02, "GDGAN mean AUC " + fmt("%.4f", gdgan) + " below none " + fmt("%.4f", none) + " - 0.02");
    if (!report->inception) {
        o.check(false, "no inception comparison");
        return o;
    }
    for (const auto& [name, r] : report->inception->sources) o.note(name + " IS " + fmt("%.3f", r.mean));
    const auto it = report->inception->sources.find("gdgan");
    o.check(it != report->inception->sources.end() && it->second.mean >= 1.05,
            "GDGAN inception score below 1.05");
    return o;
}

int spawn_cli(const fs::path& cli, const std::vector<std::string>& args, pid_t* pid_out) {
    std::vector<std::string> full = {cli.string()};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : full) argv.push_back(a.data());
    argv.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) raise(ErrorKind::IoError, "cannot start " + cli.string());
    if (pid_out) {
        *pid_out = pid;
        return 0;
    }
    int status = 0;
    waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> run_args(const Settings& s, const fs::path& out) {
    return {"--config", s.determinism_config.string(), "--out", out.string(), "--deterministic", "run-all"};
}

bool any_cell_written(const fs::path& root) {
    if (!fs::exists(root)) return false;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.path().filename() == "cell.json") return true;
    return false;
}

// 6. Determinism and resumability.
Outcome determinism(const Settings& s) {
    Outcome o;
    ExperimentConfig cfg = ExperimentConfig::load(s.determinism_config);
    std::map<std::string, fs::path> roots;
    for (const char* name : {"a", "b", "killed"}) {
        const fs::path out = s.work / "determinism" / name;
        fs::remove_all(out);
        cfg.output_dir = out;
        roots[name] = run_root(cfg);
    }
    o.check(spawn_cli(s.cli, run_args(s, s.work / "determinism" / "a"), nullptr) == 0, "first run failed");
    o.check(spawn_cli(s.cli, run_args(s, s.work / "determinism" / "b"), nullptr) == 0, "second run failed");

    pid_t pid = 0;
    spawn_cli(s.cli, run_args(s, s.work / "determinism" / "killed"), &pid);
    bool killed = false;
    for (int i = 0; i < 60000; ++i) {
        int status = 0;
        if (waitpid(pid, &status, WNOHANG) == pid) break;
        if (any_cell_written(roots["killed"])) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            killed = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    o.check(killed, "run finished before it could be killed");
    o.check(!fs::exists(roots["killed"] / "report" / "report.json"), "killed run already has a report");
    o.check(spawn_cli(s.cli, run_args(s, s.work / "determinism" / "killed"), nullptr) == 0, "resumed run failed");

    const fs::path rel = fs::path("report") / "report.json";
    const std::string a = slurp(roots["a"] / rel);
    o.check(!a.empty(), "no report from the first run");
    o.check(a == slurp(roots["b"] / rel), "repeated runs differ");
    o.check(a == slurp(roots["killed"] / rel), "kill-and-resume differs");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(roots["a"] / "report")) {
        const fs::path name = e.path().filename();
        o.check(slurp(e.path()) == slurp(roots["b"] / "report" / name), "repeated runs differ in " + name.string());
        o.check(slurp(e.path()) == slurp(roots["killed"] / "report" / name),
                "kill-and-resume differs in " + name.string());
        ++files;
    }
    o.note(std::to_string(files) + " report files compared across 3 runs, one killed after its first cell");
    return o;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::IoError;
}

// 7. Checkpoint round-trip.
Outcome checkpoint_round_trip(const Settings& s) {
    Outcome o;
    const fs::path dir = s.work / "checkpoints";
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (StageTag stage : {StageTag::stage1, StageTag::stage2, StageTag::acgan}) {
        GanArch a;
        a.stage = stage;
        a.noise_dim = 100;
        a.generator_width = 16;
        a.critic_width = 16;
        a.detailed_count = 14;
        GanBundle b(a, 3);
        const fs::path p = dir / (to_string(stage) + ".ckpt");
        save_checkpoint(b, p);
        const GanBundle back = load_checkpoint(p, stage);
        o.check(tensors_bitwise_equal(back.named_parameters(), b.named_parameters()),
                to_string(stage) + " parameters differ after reload");
        const StageTag other = stage == StageTag::stage1 ? StageTag::stage2 : StageTag::stage1;
        o.check(kind_of([&] { load_checkpoint(p, other); }) == ErrorKind::VersionMismatch,
                to_string(stage) + " accepted as " + to_string(other));

        std::string bytes = slurp(p);
        bytes[bytes.size() / 3] ^= 0x01;
        std::ofstream(dir / "corrupt.ckpt", std::ios::binary) << bytes;
        o.check(kind_of([&] { load_checkpoint(dir / "corrupt.ckpt"); }) == ErrorKind::CorruptFile,
                "corrupted " + to_string(stage) + " accepted");
    }
    ClassifierArch arch;
    arch.width = 8;
    arch.dense = 64;
    ClassifierBundle c(arch, 4);
    c.save(dir / "classifier.ckpt");
    const ClassifierBundle back = ClassifierBundle::load(dir / "classifier.ckpt");
    o.check(tensors_bitwise_equal(back.named_parameters(), c.named_parameters()), "classifier differs after reload");
    o.check(kind_of([&] { load_checkpoint(dir / "classifier.ckpt"); }) == ErrorKind::VersionMismatch,
            "classifier accepted as a GAN bundle");
    o.check(kind_of([&] { ClassifierBundle::load(dir / "stage1.ckpt"); }) == ErrorKind::VersionMismatch,
            "GAN bundle accepted as a classifier");
    std::string bytes = slurp(dir / "classifier.ckpt");
    bytes.resize(bytes.size() / 2);
    std::ofstream(dir / "truncated.ckpt", std::ios::binary) << bytes;
    o.check(kind_of([&] { ClassifierBundle::load(dir / "truncated.ckpt"); }) == ErrorKind::CorruptFile,
            "truncated classifier accepted");
    o.note("stage1, stage2, acgan, classifier");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gdgan acceptance suite"};
    Settings s;
    std::vector<int> only;
    app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 7));
    app.add_option("--work", s.work, "Scratch directory");
    app.add_option("--e2e-config", s.e2e_config, "Experiment config for the end-to-end criterion");
    app.add_option("--determinism-config", s.determinism_config, "Experiment config for the determinism criterion");
    app.add_option("--cli", s.cli, "Path to the gdgan executable");
    CLI11_PARSE(app, argc, argv);
    if (only.empty()) only = {1, 2, 3, 4, 5, 6, 7};

    const std::map<int, std::pair<std::string, std::function<Outcome(const Settings&)>>> criteria = {
        {1, {"metric oracles", metric_oracles}},
        {2, {"gradient penalty", gradient_penalty_checks}},
        {3, {"loss composition", loss_composition}},
        {4, {"count bookkeeping", count_bookkeeping}},
        {5, {"end-to-end toy pipeline", end_to_end}},
        {6, {"determinism and resume", determinism}},
        {7, {"checkpoint round-trip", checkpoint_round_trip}},
    };
    fs::create_directories(s.work);
    bool all = true;
    for (int id : only) {
        const auto& [name, fn] = criteria.at(id);
        Outcome o;
        try {
            o = fn(s);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        all = all && o.pass;
        std::string line = "criterion " + std::to_string(id) + " " + (o.pass ? "PASS" : "FAIL") + "  " + name;
        for (const auto& n : o.notes) line += "; " + n;
        for (const auto& f : o.failures) line += "; FAILED: " + f;
        std::cout << line << std::endl;
    }
    return all ? 0 : 1;
}
