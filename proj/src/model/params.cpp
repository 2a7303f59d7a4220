#include "dimafx/model/params.hpp"

#include <cmath>

#include "dimafx/numerics/rng.hpp"

namespace dimafx::model {

void ModelConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
    if (prototypes < 1)
        fail("prototypes must be >= 1");
    if (patch_dim < 1)
        fail("patch_dim must be >= 1");
    if (pathway_sizes.empty())
        fail("no pathways");
    for (Index s : pathway_sizes) {
        if (s < 1)
            fail("empty pathway");
    }
    if (d < 2 || d_z < 1 || hidden < 1)
        fail("d must be >= 2, d_z and hidden >= 1");
    if (pathway_token_width < 0 || pathway_token_width >= d)
        fail("pathway_token_width must be in [0, d)");
    if (heads < 1 || d_z % heads != 0)
        fail("heads must divide d_z");
    if (residual && d != d_z)
        fail("residual attention needs d == d_z");
}

namespace {

LinearT<Matrix> zero_linear(Index in, Index out)
{
    return {Matrix::Zero(in, out), Matrix::Zero(1, out)};
}

AttentionBlockT<Matrix> zero_attention(Index d, Index d_z)
{
    return {zero_linear(d, d_z), zero_linear(d, d_z), zero_linear(d, d_z), zero_linear(d_z, d_z)};
}

} // namespace

Params zero_params(const ModelConfig& c)
{
    c.validate();
    Params p;
    p.wsi_reduce = zero_linear(c.patch_dim, c.d - 1);
    p.wsi_tokens = Matrix::Zero(c.prototypes, c.d);
    for (Index size : c.pathway_sizes) {
        p.pathways.push_back({zero_linear(size, c.hidden), zero_linear(c.hidden, c.snn_out()),
                              Matrix::Zero(1, c.pathway_token_width)});
    }
    p.attn_hh = p.attn_gg = p.attn_gh = p.attn_hg = zero_attention(c.d, c.d_z);
    p.agg_hh = p.agg_gg = p.agg_gh = p.agg_hg = zero_linear(c.d_z, 1);
    p.risk_head = zero_linear(4 * c.d_z, 1);
    return p;
}

Params init_params(const ModelConfig& config, std::uint64_t seed)
{
    Params p = zero_params(config);
    Rng rng(seed);
    // Each weight is visited right before its bias, which shares its fan-in.
    Index fan_in = 1;
    auto ends_with = [](const std::string& s, std::string_view tail) {
        return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
    };
    visit_params(p, [&](const std::string& name, Matrix& m) {
        if (ends_with(name, ".weight"))
            fan_in = m.rows();
        else if (!ends_with(name, ".bias"))
            return; // tokens stay zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Index i = 0; i < m.size(); ++i)
            m(i) = rng.uniform(-bound, bound);
    });
    return p;
}

std::size_t parameter_count(const Params& p)
{
    std::size_t n = 0;
    visit_params(p, [&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

void validate_params(const Params& p, const ModelConfig& config)
{
    const Params ref = zero_params(config);
    if (p.pathways.size() != ref.pathways.size())
        throw NumericalError("params: pathway encoder count does not match config");
    visit_params2(ref, p, [](const std::string& name, const Matrix& want, const Matrix& got) {
        if (want.rows() != got.rows() || want.cols() != got.cols())
            throw NumericalError("params: '" + name + "' has shape " + std::to_string(got.rows()) +
                                 "x" + std::to_string(got.cols()) + ", expected " +
                                 std::to_string(want.rows()) + "x" + std::to_string(want.cols()));
        if (!all_finite(got))
            throw NumericalError("params: '" + name + "' has non-finite entries");
    });
}

} // namespace dimafx::model
