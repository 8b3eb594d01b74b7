#include "impnet/tensorize.hpp"

#include <cmath>
#include <stdexcept>

namespace impnet::tensorize {

FlatSample flatten(const spectra::DqAdmittanceCurve& curve) {
    const std::size_t t_count = curve.values.size();
    FlatSample x(t_count * 8);
    for (std::size_t t = 0; t < t_count; ++t) {
        const spectra::Yblock& y = curve.values[t];
        const spectra::cplx* vals[4] = {&y.y11, &y.y12, &y.y21, &y.y22};
        for (std::size_t e = 0; e < 4; ++e) {
            x[t * 8 + 0 * 4 + e] = vals[e]->real();
            x[t * 8 + 1 * 4 + e] = vals[e]->imag();
        }
    }
    return x;
}

spectra::DqAdmittanceCurve unflatten(const FlatSample& x,
                                     const spectra::FrequencyGrid& grid) {
    if (x.size() != static_cast<std::size_t>(grid.count) * 8) {
        throw std::invalid_argument(
            "tensorize: flat sample length " + std::to_string(x.size()) +
            " does not match 8*T = " + std::to_string(grid.count * 8));
    }
    spectra::DqAdmittanceCurve curve{grid, std::vector<spectra::Yblock>(grid.count)};
    for (std::size_t t = 0; t < grid.count; ++t) {
        spectra::Yblock& y = curve.values[t];
        spectra::cplx* vals[4] = {&y.y11, &y.y12, &y.y21, &y.y22};
        for (std::size_t e = 0; e < 4; ++e) {
            *vals[e] = spectra::cplx(x[t * 8 + e], x[t * 8 + 4 + e]);
        }
    }
    return curve;
}

NormStats fit_norm(const std::vector<FlatSample>& samples) {
    std::size_t count = 0;
    double mean = 0.0;
    for (const FlatSample& s : samples) count += s.size();
    if (count == 0) throw std::invalid_argument("tensorize: empty pool");

    for (const FlatSample& s : samples) {
        for (double v : s) mean += v;
    }
    mean /= static_cast<double>(count);

    double ss = 0.0;
    for (const FlatSample& s : samples) {
        for (double v : s) {
            const double d = v - mean;
            ss += d * d;
        }
    }
    const double sigma = std::sqrt(ss / static_cast<double>(count));
    if (!(sigma > 0.0)) {
        throw std::runtime_error("tensorize: degenerate dataset (sigma == 0)");
    }
    return NormStats{mean, sigma};
}

FlatSample normalize(const FlatSample& x, const NormStats& n) {
    FlatSample out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - n.mu) / n.sigma;
    return out;
}

FlatSample denormalize(const FlatSample& x, const NormStats& n) {
    FlatSample out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * n.sigma + n.mu;
    return out;
}

std::array<FlatSample, 4> regroup_by_element(const FlatSample& x) {
    if (x.size() % 8 != 0) {
        throw std::invalid_argument("tensorize: flat length not divisible by 8");
    }
    const std::size_t t_count = x.size() / 8;
    std::array<FlatSample, 4> groups;
    for (auto& g : groups) g.resize(t_count * 2);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t e = 0; e < 4; ++e) {
                groups[e][t * 2 + c] = x[t * 8 + c * 4 + e];
            }
        }
    }
    return groups;
}

FlatSample degroup_by_element(const std::array<FlatSample, 4>& groups) {
    const std::size_t glen = groups[0].size();
    for (const auto& g : groups) {
        if (g.size() != glen || glen % 2 != 0) {
            throw std::invalid_argument("tensorize: inconsistent group lengths");
        }
    }
    const std::size_t t_count = glen / 2;
    FlatSample x(t_count * 8);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t e = 0; e < 4; ++e) {
                x[t * 8 + c * 4 + e] = groups[e][t * 2 + c];
            }
        }
    }
    return x;
}

}  // namespace impnet::tensorize
