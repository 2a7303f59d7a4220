#pragma once

#include <vector>

#include "dimafx/model/network.hpp"
#include "dimafx/numerics/rng.hpp"

namespace fixture {

using namespace dimafx;

/// A small network that keeps finite-difference checks fast.
inline model::ModelConfig tiny_config(Index prototypes = 3, std::vector<Index> pathways = {4, 3, 5})
{
    model::ModelConfig c;
    c.prototypes = prototypes;
    c.patch_dim = 5;
    c.pathway_sizes = std::move(pathways);
    c.d = 6;
    c.d_z = 5;
    c.hidden = 4;
    c.pathway_token_width = 2;
    return c;
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double sd = 1.0)
{
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i)
        m(i) = rng.normal(0.0, sd);
    return m;
}

inline model::SampleInput random_input(const model::ModelConfig& c, Rng& rng)
{
    model::SampleInput in;
    in.prototypes.means = random_matrix(rng, c.prototypes, c.patch_dim);
    Vector w(c.prototypes);
    for (Index k = 0; k < c.prototypes; ++k)
        w(k) = rng.uniform(0.1, 1.0);
    in.prototypes.cardinality = w / w.sum();
    for (Index g : c.pathway_sizes) {
        Vector v(g);
        for (Index i = 0; i < g; ++i)
            v(i) = rng.normal();
        in.pathways.push_back(v);
    }
    return in;
}

/// Random parameters, tokens included, so every array carries signal.
inline model::ModelParams random_model(const model::ModelConfig& c, std::uint64_t seed, double sd = 0.5)
{
    model::ModelParams m{c, model::zero_params(c), seed};
    Rng rng(seed);
    model::visit_params(m.params, [&](const std::string&, Matrix& a) {
        for (Index i = 0; i < a.size(); ++i)
            a(i) = rng.normal(0.0, sd);
    });
    return m;
}

} // namespace fixture
