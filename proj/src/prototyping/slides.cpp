#include "dimafx/prototyping/slides.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "dimafx/data/io.hpp"
#include "dimafx/numerics/rng.hpp"
#include "json.hpp"

namespace dimafx::prototyping {

using json = nlohmann::json;

void SlideOptions::validate() const
{
    if (components < 1)
        throw ConfigError("prototype.components must be >= 1");
    if (kmeans_patches < components)
        throw ConfigError("prototype.kmeans_patches must be >= prototype.components");
    if (kmeans_iters < 1)
        throw ConfigError("prototype.kmeans_iters must be >= 1");
    if (em.iterations < 0)
        throw ConfigError("prototype.em_iters must be >= 0");
    if (!(em.relative_tolerance >= 0.0))
        throw ConfigError("prototype.em_tol must be >= 0");
    if (!(em.variance_floor >= 0.0))
        throw ConfigError("prototype.variance_floor must be >= 0");
}

Matrix pool_patches(const data::Cohort& cohort, const std::vector<std::size_t>& slides,
                    Index max_patches, std::uint64_t seed)
{
    if (slides.empty())
        throw DataError("pool_patches: no slides");
    const Index dim = cohort.patch_dim();
    Index total = 0;
    for (std::size_t s : slides)
        total += cohort.samples.at(s).patch_features.rows();

    std::vector<bool> keep(static_cast<std::size_t>(total), true);
    if (total > max_patches) {
        std::vector<std::size_t> idx(keep.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(seed);
        rng.shuffle(idx);
        std::fill(keep.begin(), keep.end(), false);
        for (Index i = 0; i < max_patches; ++i)
            keep[idx[static_cast<std::size_t>(i)]] = true;
    }

    Matrix out(std::min(total, max_patches), dim);
    Index row = 0;
    std::size_t flat = 0;
    for (std::size_t s : slides) {
        const Matrix& p = cohort.samples[s].patch_features;
        for (Index r = 0; r < p.rows(); ++r, ++flat)
            if (keep[flat])
                out.row(row++) = p.row(r);
    }
    return out;
}

Matrix global_centroids(const data::Cohort& cohort, const std::vector<std::size_t>& slides,
                        const SlideOptions& options, std::uint64_t seed)
{
    options.validate();
    const Matrix pooled = pool_patches(cohort, slides, options.kmeans_patches, mix_seed(seed ^ 0x5a));
    return kmeans(pooled, options.components, seed, options.kmeans_iters).centroids;
}

std::vector<PrototypeModel> fit_slides(const data::Cohort& cohort, const Matrix& centroids,
                                       const SlideOptions& options)
{
    options.validate();
    const PrototypeModel init = uniform_init(centroids);
    std::vector<PrototypeModel> out;
    out.reserve(cohort.size());
    for (const auto& s : cohort.samples)
        out.push_back(fit_gmm_em(s.patch_features, init, options.em).model);
    return out;
}

namespace {

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index c = 0; c < m.cols(); ++c)
            row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    return out;
}

} // namespace

void save_prototypes(const data::Cohort& cohort, const Matrix& centroids,
                     const std::vector<PrototypeModel>& models, const std::filesystem::path& path)
{
    if (models.size() != cohort.size())
        throw DataError("save_prototypes: one model per slide required");
    json slides = json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        slides.push_back({{"sample_id", cohort.samples[i].sample_id},
                          {"means", matrix_json(m.means)},
                          {"variances", matrix_json(m.variances)},
                          {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())}});
    }
    const json doc = {{"components", centroids.rows()},
                      {"dim", centroids.cols()},
                      {"centroids", matrix_json(centroids)},
                      {"slides", slides}};
    open_out(path) << doc.dump(1) << '\n';
}

void save_top_assignments(const data::Cohort& cohort, const std::vector<PrototypeModel>& models,
                          Index m, const std::filesystem::path& path)
{
    if (models.size() != cohort.size())
        throw DataError("save_top_assignments: one model per slide required");
    std::ofstream out = open_out(path);
    out << "sample_id,prototype,rank,patch_index,responsibility\n";
    for (std::size_t i = 0; i < models.size(); ++i) {
        const Matrix& patches = cohort.samples[i].patch_features;
        const Index take = std::min(m, patches.rows());
        const auto top = top_assignments(models[i], patches, take);
        const Matrix resp = responsibilities(models[i], patches);
        for (std::size_t k = 0; k < top.size(); ++k)
            for (std::size_t r = 0; r < top[k].size(); ++r)
                out << cohort.samples[i].sample_id << ',' << k << ',' << r + 1 << ',' << top[k][r] << ','
                    << data::format_double(resp(top[k][r], static_cast<Index>(k))) << '\n';
    }
}

} // namespace dimafx::prototyping
