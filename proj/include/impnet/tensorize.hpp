#pragma once

#include <array>
#include <vector>

#include "impnet/spectra.hpp"

namespace impnet::tensorize {

// Flat real layout of a curve: index(t, c, e) = t*8 + c*4 + e with
// c in {0=real, 1=imag} and e in {0=Y11, 1=Y12, 2=Y21, 3=Y22}.
// Length is 8*T. This order is normative for checkpoints and wire data.
using FlatSample = std::vector<double>;

struct NormStats {
    double mu = 0.0;
    double sigma = 1.0;
    bool operator==(const NormStats&) const = default;
};

FlatSample flatten(const spectra::DqAdmittanceCurve& curve);
spectra::DqAdmittanceCurve unflatten(const FlatSample& x,
                                     const spectra::FrequencyGrid& grid);

// Pooled mean and population standard deviation over every entry of every
// sample. Throws if the pool is empty or constant.
NormStats fit_norm(const std::vector<FlatSample>& samples);

FlatSample normalize(const FlatSample& x, const NormStats& n);
FlatSample denormalize(const FlatSample& x, const NormStats& n);

// Per-element regrouping used by the grouped encoder: group e holds the
// entries of element e in (t, c) order, g[t*2 + c] = x[t*8 + c*4 + e].
std::array<FlatSample, 4> regroup_by_element(const FlatSample& x);
FlatSample degroup_by_element(const std::array<FlatSample, 4>& groups);

}  // namespace impnet::tensorize
