#include "gdgan/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gdgan/error.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

using nlohmann::json;

std::string to_string(SplitMode mode) { return mode == SplitMode::by_image ? "by_image" : "by_patient"; }

SplitMode split_mode_from_string(const std::string& s) {
    if (s == "by_image") return SplitMode::by_image;
    if (s == "by_patient") return SplitMode::by_patient;
    raise(ErrorKind::BadArgument, "unknown split mode '" + s + "'");
}

namespace {

std::uint64_t hash_ids(const std::vector<std::string>& ids, std::uint64_t h) {
    for (const auto& id : ids) {
        h = fnv1a64(id, h);
        h = fnv1a64(std::string_view("\n", 1), h);
    }
    return fnv1a64("|", h);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

std::uint64_t DatasetSplit::hash() const {
    std::uint64_t h = fnv1a64(to_string(mode) + ":" + std::to_string(seed));
    h = hash_ids(train, h);
    h = hash_ids(validation, h);
    return hash_ids(test, h);
}

std::uint64_t DatasetSplit::test_hash() const { return hash_ids(test, fnv1a64("test")); }

std::string DatasetSplit::to_json() const {
    json j;
    j["seed"] = seed;
    j["mode"] = to_string(mode);
    j["train"] = train;
    j["validation"] = validation;
    j["test"] = test;
    return j.dump();
}

DatasetSplit DatasetSplit::from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        DatasetSplit s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.mode = split_mode_from_string(j.at("mode").get<std::string>());
        s.train = j.at("train").get<std::vector<std::string>>();
        s.validation = j.at("validation").get<std::vector<std::string>>();
        s.test = j.at("test").get<std::vector<std::string>>();
        return s;
    } catch (const json::exception& e) {
        raise(ErrorKind::CorruptFile, std::string("bad split file: ") + e.what());
    }
}

void DatasetSplit::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write " + path.string());
    f << to_json() << '\n';
}

DatasetSplit DatasetSplit::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::MissingArtifact, "cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

DatasetSplit make_split(const std::vector<LabelRecord>& records, SplitRatios ratios, std::uint64_t seed,
                        SplitMode mode) {
    if (records.empty()) raise(ErrorKind::EmptyInput, "cannot split an empty manifest");
    if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
        std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
        raise(ErrorKind::BadArgument, "split ratios must be non-negative and sum to 1");

    const std::size_t n = records.size();
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.train));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.validation)));

    Rng rng(derive_seed(seed, {"split", to_string(mode)}));
    // 0 = train, 1 = validation, 2 = test, per record index.
    std::vector<int> part(n, 2);

    if (mode == SplitMode::by_image) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        for (std::size_t k = 0; k < n; ++k) part[order[k]] = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);
    } else {
        std::vector<std::string> patients;
        std::unordered_map<std::string, std::vector<std::size_t>> members;
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, fresh] = members.try_emplace(records[i].patient_id);
            if (fresh) patients.push_back(records[i].patient_id);
            it->second.push_back(i);
        }
        shuffle(patients, rng);
        std::size_t in_train = 0, in_val = 0;
        for (const auto& p : patients) {
            const auto& idx = members[p];
            int target = 2;
            if (in_train < n_train) {
                target = 0;
                in_train += idx.size();
            } else if (in_val < n_val) {
                target = 1;
                in_val += idx.size();
            }
            for (auto i : idx) part[i] = target;
        }
    }

    DatasetSplit split;
    split.seed = seed;
    split.mode = mode;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = part[i] == 0 ? split.train : (part[i] == 1 ? split.validation : split.test);
        dst.push_back(records[i].image_id);
    }
    return split;
}

std::vector<LabelRecord> select_records(const std::vector<LabelRecord>& records, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].image_id, i);
    std::vector<LabelRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) raise(ErrorKind::BadArgument, "id '" + id + "' not in manifest");
        out.push_back(records[it->second]);
    }
    return out;
}

}  // namespace gdgan
