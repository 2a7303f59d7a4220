#include "dimafx/data/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace dimafx::data {

using json = nlohmann::json;

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ifstream open_for_read(const fs::path& path)
{
    if (!fs::exists(path))
        throw DataError("missing file: " + path.string());
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path.string());
    return in;
}

std::ofstream open_for_write(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write file: " + path.string());
    return out;
}

json read_json(const fs::path& path)
{
    auto in = open_for_read(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const json& j)
{
    auto out = open_for_write(path);
    out << j.dump(2) << '\n';
}

template <typename T>
T field(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key))
        throw DataError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw DataError(where + ": field '" + key + "' has the wrong type");
    }
}

bool safe_file_stem(const std::string& s)
{
    if (s.empty() || s == "." || s == "..")
        return false;
    for (char c : s) {
        if (c == '/' || c == '\\' || c == '\0')
            return false;
    }
    return true;
}

} // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m)
{
    auto out = open_for_write(path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(const fs::path& path)
{
    auto in = open_for_read(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            const char* begin = cell.c_str();
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            while (end && (*end == ' ' || *end == '\t'))
                ++end;
            if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
                throw DataError(path.string() + ": row " + std::to_string(row) + ", column " +
                                std::to_string(col) + ": not a finite number '" + cell + "'");
            }
            values.push_back(v);
        }
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(values.size()) + " columns, expected " +
                            std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty())
        throw DataError(path.string() + ": empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void save_catalog(const PathwayCatalog& catalog, const fs::path& path)
{
    json arr = json::array();
    for (const auto& p : catalog.entries)
        arr.push_back({{"name", p.name}, {"gene_indices", p.gene_indices}});
    write_json(path, arr);
}

PathwayCatalog load_catalog(const fs::path& path)
{
    const json j = read_json(path);
    if (!j.is_array())
        throw DataError(path.string() + ": catalog must be a JSON array");
    PathwayCatalog catalog;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = path.string() + " entry " + std::to_string(i);
        catalog.entries.push_back(Pathway{field<std::string>(j[i], "name", where),
                                          field<std::vector<Index>>(j[i], "gene_indices", where)});
    }
    catalog.validate();
    return catalog;
}

fs::path save_cohort(const Cohort& cohort, const fs::path& dir)
{
    cohort.validate();
    fs::create_directories(dir);
    save_catalog(cohort.catalog, dir / "catalog.json");
    json samples = json::array();
    for (const auto& s : cohort.samples) {
        if (!safe_file_stem(s.sample_id))
            throw DataError("sample_id '" + s.sample_id + "' cannot be used as a file name");
        const std::string patch_rel = "patches/" + s.sample_id + ".csv";
        const std::string path_rel = "pathways/" + s.sample_id + ".json";
        write_matrix_csv(dir / patch_rel, s.patch_features);
        json pw = json::object();
        for (std::size_t i = 0; i < cohort.catalog.size(); ++i) {
            const Vector& v = s.pathway_inputs[i];
            pw[cohort.catalog.entries[i].name] = std::vector<double>(v.data(), v.data() + v.size());
        }
        write_json(dir / path_rel, pw);
        samples.push_back({{"sample_id", s.sample_id},
                           {"site_id", s.site_id},
                           {"time", s.time},
                           {"event", s.event},
                           {"patches", patch_rel},
                           {"pathways", path_rel}});
    }
    const json manifest = {{"version", 1}, {"catalog", "catalog.json"}, {"samples", samples}};
    write_json(dir / "manifest.json", manifest);
    return dir / "manifest.json";
}

Cohort load_cohort(const fs::path& manifest_path)
{
    const json manifest = read_json(manifest_path);
    const fs::path base = manifest_path.parent_path();
    const std::string mwhere = manifest_path.string();

    Cohort cohort;
    cohort.catalog = load_catalog(base / field<std::string>(manifest, "catalog", mwhere));
    if (!manifest.contains("samples") || !manifest["samples"].is_array())
        throw DataError(mwhere + ": 'samples' must be an array");

    const auto sizes = cohort.catalog.gene_set_sizes();
    for (std::size_t r = 0; r < manifest["samples"].size(); ++r) {
        const json& rec = manifest["samples"][r];
        std::string where = mwhere + " record " + std::to_string(r);
        CohortSample s;
        s.sample_id = field<std::string>(rec, "sample_id", where);
        where = mwhere + " sample '" + s.sample_id + "'";
        s.site_id = field<std::string>(rec, "site_id", where);
        if (!rec.contains("time") || !rec["time"].is_number())
            throw DataError(where + ": 'time' must be a number");
        s.time = rec["time"].get<double>();
        if (!(s.time >= 0.0) || !std::isfinite(s.time))
            throw DataError(where + ": negative or non-finite time " + format_double(s.time));
        if (!rec.contains("event") || !rec["event"].is_boolean())
            throw DataError(where + ": 'event' must be true or false");
        s.event = rec["event"].get<bool>();

        s.patch_features = read_matrix_csv(base / field<std::string>(rec, "patches", where));

        const fs::path pw_path = base / field<std::string>(rec, "pathways", where);
        const json pw = read_json(pw_path);
        if (!pw.is_object())
            throw DataError(pw_path.string() + ": pathway inputs must be a JSON object");
        if (pw.size() != cohort.catalog.size())
            throw DataError(pw_path.string() + ": " + std::to_string(pw.size()) +
                            " pathways, catalog has " + std::to_string(cohort.catalog.size()));
        for (std::size_t i = 0; i < cohort.catalog.size(); ++i) {
            const auto& name = cohort.catalog.entries[i].name;
            const auto values = field<std::vector<double>>(pw, name.c_str(), pw_path.string());
            if (static_cast<Index>(values.size()) != sizes[i]) {
                throw DataError(pw_path.string() + ": pathway '" + name + "' has " +
                                std::to_string(values.size()) + " values, catalog expects " +
                                std::to_string(sizes[i]));
            }
            s.pathway_inputs.push_back(Eigen::Map<const Vector>(values.data(), sizes[i]));
        }
        cohort.samples.push_back(std::move(s));
    }
    cohort.validate();
    return cohort;
}

void save_ground_truth(const SyntheticGroundTruth& truth, const Cohort& cohort, const fs::path& path)
{
    auto as_vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json arr = json::array();
    for (std::size_t i = 0; i < truth.samples.size(); ++i) {
        const auto& t = truth.samples[i];
        arr.push_back({{"sample_id", cohort.samples.at(i).sample_id},
                       {"u_shared", as_vec(t.shared)},
                       {"u_img", as_vec(t.image)},
                       {"u_gen", as_vec(t.genomic)},
                       {"true_log_hazard", t.log_hazard}});
    }
    write_json(path, {{"censoring_hazard", truth.censoring_hazard}, {"samples", arr}});
}

} // namespace dimafx::data
