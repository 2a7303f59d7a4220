#include "dimafx/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dimafx::model {

using json = nlohmann::json;

std::string checkpoint_json(const ModelParams& model)
{
    const ModelConfig& c = model.config;
    json params = json::array();
    visit_params(model.params, [&](const std::string& name, const Matrix& m) {
        // Zero-width arrays (e.g. no pathway tokens) carry an empty data list.
        std::vector<double> row_major;
        row_major.reserve(static_cast<std::size_t>(m.size()));
        for (Index r = 0; r < m.rows(); ++r)
            for (Index col = 0; col < m.cols(); ++col)
                row_major.push_back(m(r, col));
        params.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", row_major}});
    });
    const json doc = {
        {"format", "dimafx-checkpoint"},
        {"version", kCheckpointVersion},
        {"init_seed", model.init_seed},
        {"config",
         {{"prototypes", c.prototypes},
          {"patch_dim", c.patch_dim},
          {"pathway_sizes", c.pathway_sizes},
          {"d", c.d},
          {"d_z", c.d_z},
          {"hidden", c.hidden},
          {"pathway_token_width", c.pathway_token_width},
          {"heads", c.heads},
          {"residual", c.residual}}},
        {"params", params}};
    return doc.dump(1) + "\n";
}

ModelParams parse_checkpoint(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "dimafx-checkpoint")
            throw DataError("checkpoint: unknown format tag");
        if (doc.at("version").get<int>() != kCheckpointVersion)
            throw DataError("checkpoint: unsupported version " + doc.at("version").dump());
        ModelParams m;
        m.init_seed = doc.at("init_seed").get<std::uint64_t>();
        const json& c = doc.at("config");
        m.config.prototypes = c.at("prototypes").get<Index>();
        m.config.patch_dim = c.at("patch_dim").get<Index>();
        m.config.pathway_sizes = c.at("pathway_sizes").get<std::vector<Index>>();
        m.config.d = c.at("d").get<Index>();
        m.config.d_z = c.at("d_z").get<Index>();
        m.config.hidden = c.at("hidden").get<Index>();
        m.config.pathway_token_width = c.at("pathway_token_width").get<Index>();
        m.config.heads = c.at("heads").get<Index>();
        m.config.residual = c.at("residual").get<bool>();
        m.params = zero_params(m.config);

        const json& arr = doc.at("params");
        std::size_t i = 0;
        visit_params(m.params, [&](const std::string& name, Matrix& target) {
            if (i >= arr.size())
                throw DataError("checkpoint: missing parameter '" + name + "'");
            const json& e = arr[i++];
            if (e.at("name").get<std::string>() != name)
                throw DataError("checkpoint: expected parameter '" + name + "', found '" +
                                e.at("name").get<std::string>() + "'");
            const auto shape = e.at("shape").get<std::vector<Index>>();
            if (shape.size() != 2 || shape[0] != target.rows() || shape[1] != target.cols())
                throw DataError("checkpoint: parameter '" + name + "' has the wrong shape");
            const auto data = e.at("data").get<std::vector<double>>();
            if (static_cast<Index>(data.size()) != target.size())
                throw DataError("checkpoint: parameter '" + name + "' has the wrong length");
            for (Index r = 0, k = 0; r < target.rows(); ++r)
                for (Index col = 0; col < target.cols(); ++col)
                    target(r, col) = data[static_cast<std::size_t>(k++)];
        });
        if (i != arr.size())
            throw DataError("checkpoint: unexpected extra parameters");
        validate_params(m.params, m.config);
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed document: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write checkpoint: " + path.string());
    out << checkpoint_json(model);
}

ModelParams load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("missing checkpoint: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str());
}

bool identical(const ModelParams& a, const ModelParams& b)
{
    if (!(a.config == b.config) || a.init_seed != b.init_seed ||
        a.params.pathways.size() != b.params.pathways.size())
        return false;
    bool same = true;
    visit_params2(a.params, b.params, [&](const std::string&, const Matrix& x, const Matrix& y) {
        same = same && x.rows() == y.rows() && x.cols() == y.cols() &&
               (x.size() == 0 ||
                std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0);
    });
    return same;
}

} // namespace dimafx::model
