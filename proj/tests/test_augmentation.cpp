#include "doctest_torch.hpp"

#include <map>
#include <set>

#include "gdgan/augmentation.hpp"
#include "gdgan/error.hpp"
#include "gdgan/toy_corpus.hpp"
#include "support.hpp"

using namespace gdgan;

namespace {

struct Fixture {
    ToyCorpus corpus = generate_toy_corpus(400, 0.05, 13);
    const std::vector<LabelRecord>& train = corpus.records;
    std::size_t n = train.size();
    std::size_t n_focus = count_positive(train, 0);
};

ErrorKind plan_error(Strategy s, const Fixture& f, PlanTargets t) {
    try {
        build_plan(s, f.train, f.corpus.schema, "mark0", t, 1);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("plan succeeded");
    return ErrorKind::IoError;
}

GanArch tiny(StageTag stage) {
    GanArch a;
    a.stage = stage;
    a.noise_dim = 8;
    a.generator_width = 4;
    a.critic_width = 4;
    return a;
}

// Counts detailed positives over a manifest by direct iteration.
std::map<std::string, std::size_t> count_manifest(const TrainingManifest& m, const LabelSchema& schema) {
    std::map<std::string, std::size_t> out{{"total", m.size()}};
    for (std::size_t k = 0; k < schema.detailed_labels.size(); ++k) {
        std::size_t c = 0;
        for (const auto& r : m.rows) c += r.detailed[k];
        out[schema.detailed_labels[k]] = c;
    }
    return out;
}

}  // namespace

TEST_CASE("none reproduces the train split") {
    Fixture f;
    const auto plan = build_plan(Strategy::none, f.train, f.corpus.schema, "mark0", {}, 1);
    CHECK(plan.keep.size() == f.n);
    CHECK(plan.duplicate.empty());
    CHECK(plan.synthesize.empty());
    CHECK(plan.targets.total == f.n);
    CHECK(plan.targets.focus == f.n_focus);
}

TEST_CASE("every strategy realizes its targets exactly") {
    Fixture f;
    const std::size_t under_total = f.n * 8 / 10;
    const PlanTargets grow{f.n + 3 * f.n_focus + 40, 4 * f.n_focus};
    for (Strategy s : all_strategies()) {
        const PlanTargets t = s == Strategy::undersample ? PlanTargets{under_total, f.n_focus} : grow;
        const auto plan = build_plan(s, f.train, f.corpus.schema, "mark0", t, 2);
        CAPTURE(to_string(s));
        CHECK_NOTHROW(plan.check_invariants());
        if (s == Strategy::none) continue;
        CHECK(plan.total() == t.total);
        CHECK(plan.target_counts.at("mark0") == t.focus);
        CHECK(plan.target_counts.at("total") == t.total);
    }
}

TEST_CASE("structural invariants per strategy") {
    Fixture f;
    const PlanTargets grow{f.n + 2 * f.n_focus + 30, 3 * f.n_focus};
    const auto under = build_plan(Strategy::undersample, f.train, f.corpus.schema, "mark0", {f.n - 50, f.n_focus}, 3);
    CHECK(under.duplicate.empty());
    CHECK(under.synthesize.empty());
    std::set<std::string> train_ids;
    for (const auto& r : f.train) train_ids.insert(r.image_id);
    for (const auto& id : under.keep) CHECK(train_ids.count(id) == 1);
    // Every focus-positive record survives undersampling.
    std::set<std::string> kept(under.keep.begin(), under.keep.end());
    for (const auto& r : f.train)
        if (r.has(0)) CHECK(kept.count(r.image_id) == 1);

    const auto over = build_plan(Strategy::oversample, f.train, f.corpus.schema, "mark0", grow, 3);
    CHECK(over.synthesize.empty());
    CHECK(over.keep.size() == f.n);
    for (const auto& [id, c] : over.duplicate) CHECK(train_ids.count(id) == 1);

    for (Strategy s : {Strategy::acgan, Strategy::gdgan}) {
        const auto p = build_plan(s, f.train, f.corpus.schema, "mark0", grow, 3);
        CHECK(p.duplicate.empty());
        CHECK(p.keep.size() == f.n);
        CHECK(p.synthesize_count() == grow.total - f.n);
    }

    AugmentationPlan broken = over;
    broken.synthesize.push_back({{0, 0}, {1, 0, 0, 0}, 1});
    CHECK_THROWS_AS(broken.check_invariants(), Error);
    broken = under;
    broken.duplicate.emplace_back(under.keep.front(), 1);
    CHECK_THROWS_AS(broken.check_invariants(), Error);
}

TEST_CASE("unachievable targets are reported") {
    Fixture f;
    CHECK(plan_error(Strategy::undersample, f, {f.n + 1, f.n_focus}) == ErrorKind::UnachievableTarget);
    CHECK(plan_error(Strategy::undersample, f, {f.n - 10, f.n_focus + 1}) == ErrorKind::UnachievableTarget);
    CHECK(plan_error(Strategy::undersample, f, {f.n_focus - 1, f.n_focus}) == ErrorKind::UnachievableTarget);
    CHECK(plan_error(Strategy::oversample, f, {f.n + 10, f.n_focus - 1}) == ErrorKind::UnachievableTarget);
    CHECK(plan_error(Strategy::gdgan, f, {f.n + 5, f.n_focus + 10}) == ErrorKind::UnachievableTarget);
    CHECK(plan_error(Strategy::acgan, f, {f.n, f.n_focus + 1}) == ErrorKind::UnachievableTarget);
}

TEST_CASE("plans are deterministic and round-trip through JSON") {
    Fixture f;
    const PlanTargets grow{f.n + 2 * f.n_focus + 30, 3 * f.n_focus};
    testing::TempDir dir("plan");
    for (Strategy s : all_strategies()) {
        const PlanTargets t = s == Strategy::undersample ? PlanTargets{f.n - 30, f.n_focus} : grow;
        const auto a = build_plan(s, f.train, f.corpus.schema, "mark0", t, 9);
        const auto b = build_plan(s, f.train, f.corpus.schema, "mark0", t, 9);
        CHECK(a.to_json() == b.to_json());
        a.save(dir / "p.json");
        CHECK(AugmentationPlan::load(dir / "p.json").to_json() == a.to_json());
    }
    const auto a = build_plan(Strategy::oversample, f.train, f.corpus.schema, "mark0", grow, 9);
    const auto c = build_plan(Strategy::oversample, f.train, f.corpus.schema, "mark0", grow, 10);
    CHECK(a.to_json() != c.to_json());
}

TEST_CASE("materialized manifests match the plan counts") {
    Fixture f;
    const PlanTargets grow{f.n + 2 * f.n_focus + 30, 3 * f.n_focus};
    GanBundle s1(tiny(StageTag::stage1), 1);
    GanBundle s2(tiny(StageTag::stage2), 2);
    GanBundle ac(tiny(StageTag::acgan), 3);
    const GeneratorSet gens{&ac, &s1, &s2};
    for (Strategy s : all_strategies()) {
        const PlanTargets t = s == Strategy::undersample ? PlanTargets{f.n - 30, f.n_focus} : grow;
        const auto plan = build_plan(s, f.train, f.corpus.schema, "mark0", t, 4);
        MemoryStore delta;
        const auto m = materialize(plan, f.train, delta, gens, 4, 64);
        CAPTURE(to_string(s));
        CHECK(count_manifest(m.manifest, f.corpus.schema) == plan.target_counts);
        CHECK(m.synthetic_ids.size() == plan.synthesize_count());
        CHECK(delta.size() == plan.synthesize_count());
        std::set<std::string> ids;
        for (const auto& r : m.manifest.rows) ids.insert(r.image_id);
        CHECK(ids.size() == m.manifest.size());
        for (std::size_t i = 0; i < m.manifest.size(); ++i) {
            const auto& src = m.manifest.sources[i];
            CHECK((f.corpus.images.contains(src) || delta.contains(src)));
        }
    }
}

TEST_CASE("materialization is deterministic and needs its generators") {
    Fixture f;
    const PlanTargets grow{f.n + f.n_focus + 10, 2 * f.n_focus};
    GanBundle s1(tiny(StageTag::stage1), 1);
    GanBundle s2(tiny(StageTag::stage2), 2);
    const auto plan = build_plan(Strategy::gdgan, f.train, f.corpus.schema, "mark0", grow, 4);
    MemoryStore d1, d2;
    materialize(plan, f.train, d1, {nullptr, &s1, &s2}, 7, 16);
    materialize(plan, f.train, d2, {nullptr, &s1, &s2}, 7, 16);
    REQUIRE(d1.size() == d2.size());
    for (const auto& [id, img] : d1.images()) CHECK(d2.read(id).pixels == img.pixels);

    MemoryStore d3;
    try {
        materialize(plan, f.train, d3, {nullptr, &s1, nullptr}, 7);
        FAIL("expected MissingGenerator");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingGenerator);
    }
    const auto ac_plan = build_plan(Strategy::acgan, f.train, f.corpus.schema, "mark0", grow, 4);
    try {
        materialize(ac_plan, f.train, d3, {nullptr, &s1, &s2}, 7);
        FAIL("expected MissingGenerator");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingGenerator);
    }
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : all_strategies()) CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("smote"), Error);
}
