#include "gdgan/manifest.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "gdgan/error.hpp"

namespace gdgan {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::optional<int> parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

struct ParsedTable {
    std::vector<LabelRecord> records;
    std::vector<std::string> sources;
};

ParsedTable parse_table(std::istream& in, const LabelSchema& schema) {
    schema.validate();
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::MissingColumn, "manifest has no header");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) raise(ErrorKind::MissingColumn, "manifest lacks column '" + name + "'");
        return it->second;
    };
    const auto c_id = require("image_id");
    const auto c_patient = require("patient_id");
    const auto c_age = require("age");
    std::vector<std::size_t> c_general, c_detailed;
    for (const auto& g : schema.general_labels) c_general.push_back(require(g.name));
    for (const auto& d : schema.detailed_labels) c_detailed.push_back(require(d));
    std::optional<std::size_t> c_source;
    if (auto it = col.find("source_id"); it != col.end()) c_source = it->second;

    ParsedTable table;
    std::set<std::string> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw BadLabelValue(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(f.size()));
        LabelRecord r;
        r.image_id = f[c_id];
        r.patient_id = f[c_patient];
        if (r.image_id.empty()) throw BadLabelValue(row, "empty image_id");
        auto age = parse_int(f[c_age]);
        if (!age || *age < 0) throw BadLabelValue(row, "bad age '" + f[c_age] + "'");
        r.age = *age;
        for (std::size_t g = 0; g < c_general.size(); ++g) {
            const auto& token = f[c_general[g]];
            const auto& tokens = schema.general_labels[g].tokens;
            int value = -1;
            for (std::size_t t = 0; t < tokens.size(); ++t)
                if (tokens[t] == token) value = static_cast<int>(t);
            if (value < 0) {
                auto idx = parse_int(token);
                if (idx && *idx >= 0 && *idx < static_cast<int>(tokens.size())) value = *idx;
            }
            if (value < 0)
                throw BadLabelValue(row, "bad value '" + token + "' for " + schema.general_labels[g].name);
            r.general.push_back(value);
        }
        for (std::size_t d = 0; d < c_detailed.size(); ++d) {
            const auto& v = f[c_detailed[d]];
            if (v != "0" && v != "1")
                throw BadLabelValue(row, "bad value '" + v + "' for " + schema.detailed_labels[d]);
            r.detailed.push_back(v == "1" ? 1 : 0);
        }
        if (!seen.insert(r.image_id).second)
            raise(ErrorKind::DuplicateImageId, "image_id '" + r.image_id + "' repeats at row " + std::to_string(row));
        table.sources.push_back(c_source ? f[*c_source] : r.image_id);
        table.records.push_back(std::move(r));
    }
    return table;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::IoError, "cannot open manifest " + path.string());
    return f;
}

void write_rows(std::ostream& out, const std::vector<LabelRecord>& records, const LabelSchema& schema,
                const std::vector<std::string>* sources) {
    out << "image_id,patient_id,age";
    for (const auto& g : schema.general_labels) out << ',' << g.name;
    for (const auto& d : schema.detailed_labels) out << ',' << d;
    if (sources) out << ",source_id";
    out << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out << r.image_id << ',' << r.patient_id << ',' << r.age;
        for (std::size_t g = 0; g < r.general.size(); ++g) out << ',' << schema.general_labels[g].tokens.at(r.general[g]);
        for (auto d : r.detailed) out << ',' << static_cast<int>(d);
        if (sources) out << ',' << (*sources)[i];
        out << '\n';
    }
}

}  // namespace

std::vector<LabelRecord> parse_manifest(std::istream& in, const LabelSchema& schema) {
    return parse_table(in, schema).records;
}

std::vector<LabelRecord> load_manifest(const std::filesystem::path& path, const LabelSchema& schema) {
    auto f = open_or_throw(path);
    return parse_manifest(f, schema);
}

TrainingManifest TrainingManifest::identity(std::vector<LabelRecord> records) {
    TrainingManifest m;
    for (const auto& r : records) m.sources.push_back(r.image_id);
    m.rows = std::move(records);
    return m;
}

TrainingManifest load_training_manifest(const std::filesystem::path& path, const LabelSchema& schema) {
    auto f = open_or_throw(path);
    auto table = parse_table(f, schema);
    return {std::move(table.records), std::move(table.sources)};
}

void write_manifest(std::ostream& out, const std::vector<LabelRecord>& records, const LabelSchema& schema) {
    write_rows(out, records, schema, nullptr);
}

void write_manifest(const std::filesystem::path& path, const std::vector<LabelRecord>& records,
                    const LabelSchema& schema) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write manifest " + path.string());
    write_rows(f, records, schema, nullptr);
}

void write_training_manifest(const std::filesystem::path& path, const TrainingManifest& manifest,
                             const LabelSchema& schema) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write manifest " + path.string());
    write_rows(f, manifest.rows, schema, &manifest.sources);
}

}  // namespace gdgan
