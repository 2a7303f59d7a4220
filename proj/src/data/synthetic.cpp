#include "dimafx/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "dimafx/numerics/kernels.hpp"
#include "dimafx/numerics/rng.hpp"

namespace dimafx::data {

void SyntheticConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError("synthetic cohort: " + msg); };
    if (samples < 4)
        fail("need at least 4 samples");
    if (patch_dim < 2)
        fail("patch_dim must be >= 2");
    if (min_patches < 1 || max_patches < min_patches)
        fail("invalid patch count range");
    if (morphologies < 1)
        fail("need at least one morphology");
    if (pathways < 1 || genes < 1)
        fail("need at least one pathway and one gene");
    if (min_pathway_genes < 1 || max_pathway_genes < min_pathway_genes || max_pathway_genes > genes)
        fail("invalid pathway gene-set size range");
    if (shared_dim + image_dim + genomic_dim == 0)
        fail("no latent factors");
    if (sites < 1 || sites > samples)
        fail("site count must be in [1, samples]");
    if (!(censor_rate >= 0.0 && censor_rate < 1.0))
        fail("censor_rate must be in [0, 1)");
    if (!(baseline_median > 0.0) || !(followup_cutoff > 0.0))
        fail("baseline_median and followup_cutoff must be positive");
    if (patch_noise < 0.0 || gene_noise < 0.0 || morphology_spread < 0.0 || site_shift < 0.0)
        fail("noise scales must be non-negative");
}

SyntheticConfig strong_signal_config()
{
    SyntheticConfig c;
    c.shared_effect = 1.2;
    c.image_effect = 0.9;
    c.genomic_effect = 0.9;
    c.mixture_sharpness = 2.0;
    c.gene_noise = 0.3;
    return c;
}

double expected_censor_fraction(const std::vector<double>& event_hazards, double censoring_hazard,
                                double cutoff)
{
    // P(event observed) = lambda / (lambda + c) * (1 - exp(-(lambda + c) * cutoff))
    double observed = 0.0;
    for (double lambda : event_hazards) {
        const double total = lambda + censoring_hazard;
        const double horizon = std::isfinite(cutoff) ? -std::expm1(-total * cutoff) : 1.0;
        observed += lambda / total * horizon;
    }
    return 1.0 - observed / static_cast<double>(event_hazards.size());
}

namespace {

double solve_censoring_hazard(const std::vector<double>& hazards, double target, double cutoff)
{
    const double floor_fraction = expected_censor_fraction(hazards, 0.0, cutoff);
    if (target < floor_fraction - 1e-12) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "synthetic cohort: censor_rate %.4f is below the %.4f implied by the "
                      "follow-up cutoff alone",
                      target, floor_fraction);
        throw ConfigError(buf);
    }
    double lo = 0.0;
    double hi = *std::max_element(hazards.begin(), hazards.end());
    while (expected_censor_fraction(hazards, hi, cutoff) < target)
        hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expected_censor_fraction(hazards, mid, cutoff) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

Matrix normal_matrix(Rng& rng, Index rows, Index cols, double sd)
{
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = rng.normal() * sd;
    return m;
}

Vector normal_vector(Rng& rng, std::size_t n)
{
    Vector v(static_cast<Index>(n));
    for (Index i = 0; i < v.size(); ++i)
        v(i) = rng.normal();
    return v;
}

double block_effect(const Vector& u, double effect)
{
    if (u.size() == 0)
        return 0.0;
    return effect * u.sum() / std::sqrt(static_cast<double>(u.size()));
}

std::string padded(const char* prefix, std::size_t i, int width)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

} // namespace

SyntheticCohort generate_cohort(const SyntheticConfig& config, std::uint64_t seed)
{
    config.validate();
    const Rng root(seed);
    Rng structure = root.fork(1);
    Rng draws = root.fork(2);
    Rng site_rng = root.fork(3);
    Rng time_rng = root.fork(4);

    const Index dim = config.patch_dim;
    const auto k_morph = static_cast<Index>(config.morphologies);
    const auto img_in = static_cast<Index>(config.shared_dim + config.image_dim);
    const auto gen_in = static_cast<Index>(config.shared_dim + config.genomic_dim);

    const Matrix morph_means = normal_matrix(structure, k_morph, dim, config.morphology_spread);
    const Matrix mixture_map =
        normal_matrix(structure, k_morph, img_in, img_in > 0 ? 1.0 / std::sqrt(double(img_in)) : 0.0);
    const Matrix gene_loadings = normal_matrix(structure, static_cast<Index>(config.genes), gen_in, 1.0);

    SyntheticCohort out;
    Cohort& cohort = out.cohort;
    for (std::size_t p = 0; p < config.pathways; ++p) {
        const std::size_t span = config.max_pathway_genes - config.min_pathway_genes + 1;
        const std::size_t size = config.min_pathway_genes + structure.index(span);
        std::vector<Index> all(config.genes);
        for (std::size_t g = 0; g < config.genes; ++g)
            all[g] = static_cast<Index>(g);
        structure.shuffle(all);
        all.resize(size);
        std::sort(all.begin(), all.end());
        cohort.catalog.entries.push_back(Pathway{padded("pathway_", p, 2), std::move(all)});
    }
    const Matrix site_shifts =
        normal_matrix(structure, static_cast<Index>(config.sites), dim, config.site_shift);

    // Sites: a seeded permutation cut into near-equal chunks.
    std::vector<std::size_t> order(config.samples);
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    site_rng.shuffle(order);
    std::vector<std::size_t> site_of(config.samples);
    for (std::size_t r = 0; r < order.size(); ++r)
        site_of[order[r]] = r * config.sites / config.samples;

    std::vector<double> hazards;
    hazards.reserve(config.samples);
    const double base_hazard = std::numbers::ln2 / config.baseline_median;

    for (std::size_t i = 0; i < config.samples; ++i) {
        LatentFactors lat;
        lat.shared = normal_vector(draws, config.shared_dim);
        lat.image = normal_vector(draws, config.image_dim);
        lat.genomic = normal_vector(draws, config.genomic_dim);
        lat.log_hazard = block_effect(lat.shared, config.shared_effect) +
                         block_effect(lat.image, config.image_effect) +
                         block_effect(lat.genomic, config.genomic_effect);

        Vector img_latent(img_in);
        img_latent << lat.shared, lat.image;
        const Vector weights = softmax(config.mixture_sharpness * (mixture_map * img_latent));

        CohortSample s;
        s.sample_id = padded("S", i, 4);
        s.site_id = padded("site", site_of[i], 2);
        const std::size_t n_patches =
            config.min_patches + draws.index(config.max_patches - config.min_patches + 1);
        s.patch_features.resize(static_cast<Index>(n_patches), dim);
        for (Index p = 0; p < s.patch_features.rows(); ++p) {
            // Inverse-CDF draw of the morphology.
            double u = draws.uniform();
            Index comp = 0;
            while (comp + 1 < k_morph && u >= weights(comp)) {
                u -= weights(comp);
                ++comp;
            }
            for (Index d = 0; d < dim; ++d) {
                s.patch_features(p, d) = morph_means(comp, d) +
                                         site_shifts(static_cast<Index>(site_of[i]), d) +
                                         config.patch_noise * draws.normal();
            }
        }

        Vector gen_latent(gen_in);
        gen_latent << lat.shared, lat.genomic;
        Vector expression = gene_loadings * gen_latent;
        for (Index g = 0; g < expression.size(); ++g)
            expression(g) += config.gene_noise * draws.normal();
        for (const auto& pw : cohort.catalog.entries) {
            Vector x(static_cast<Index>(pw.gene_indices.size()));
            for (Index j = 0; j < x.size(); ++j)
                x(j) = expression(pw.gene_indices[static_cast<std::size_t>(j)]);
            s.pathway_inputs.push_back(std::move(x));
        }

        hazards.push_back(base_hazard * std::exp(lat.log_hazard));
        cohort.samples.push_back(std::move(s));
        out.truth.samples.push_back(std::move(lat));
    }

    // A zero censor rate switches off every censoring mechanism, including the cutoff.
    const bool censoring = config.censor_rate > 0.0;
    const double cutoff = censoring ? config.followup_cutoff : std::numeric_limits<double>::infinity();
    const double censor_hazard =
        censoring ? solve_censoring_hazard(hazards, config.censor_rate, cutoff) : 0.0;
    out.truth.censoring_hazard = censor_hazard;

    for (std::size_t i = 0; i < config.samples; ++i) {
        auto& s = cohort.samples[i];
        const double u_event = 1.0 - time_rng.uniform();
        const double u_censor = 1.0 - time_rng.uniform();
        const double event_time = -std::log(u_event) / hazards[i];
        const double censor_time = censor_hazard > 0.0 ? -std::log(u_censor) / censor_hazard
                                                       : std::numeric_limits<double>::infinity();
        s.time = std::min({event_time, censor_time, cutoff});
        s.event = event_time <= censor_time && event_time <= cutoff;
    }
    cohort.validate();
    return out;
}

} // namespace dimafx::data
