#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "impnet/autonet.hpp"

namespace impnet::latentmap {

// Contiguous latent slice belonging to one impedance matrix element.
// The dimension mapping is fixed: Y11 = dims 0..15, Y12 = 16..31,
// Y21 = 32..47, Y22 = 48..63 (for latent_dim 64).
struct SemanticGroup {
    spectra::Element element;
    std::vector<double> sub_vector;
    std::size_t sample_index = 0;
};

std::array<SemanticGroup, 4> split_groups(const autonet::LatentVector& h,
                                          std::size_t sample_index = 0);

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch_iter = 250;
    double perplexity_tol = 1e-5;
    std::size_t max_bisection_steps = 50;
    std::uint64_t seed = 1;
};

struct Point2 {
    double x = 0.0, y = 0.0;
};

// Pairwise affinities of exact t-SNE: per-point Gaussian bandwidths found by
// bisection until the conditional perplexity matches, then symmetrized to a
// joint distribution summing to 1.
struct Affinities {
    std::size_t n = 0;
    std::vector<double> p;        // n x n, symmetric joint probabilities
    std::vector<double> betas;    // 1/(2 sigma_i^2)
    std::vector<double> achieved_perplexity;
};

Affinities tsne_affinities(const std::vector<std::vector<double>>& points,
                           const TsneConfig& config);

// Exact O(n^2) t-SNE to 2-D, deterministic in the seed. Output is centered
// at the origin.
std::vector<Point2> tsne(const std::vector<std::vector<double>>& points,
                         const TsneConfig& config);

// Mean silhouette coefficient (Euclidean) of a labeled 2-D embedding.
double silhouette(const std::vector<Point2>& embedding,
                  const std::vector<int>& labels);

struct GroupEmbeddings {
    std::vector<Point2> joint;              // 4N points
    std::vector<int> joint_labels;          // element index per point
    std::vector<std::size_t> joint_samples; // sample index per point
    double joint_silhouette = 0.0;
    std::array<std::vector<Point2>, 4> per_element;  // N points each
};

// Joint embedding of all 4N group vectors plus four independent per-element
// embeddings of the N sub-vectors.
GroupEmbeddings embed_groups(const std::vector<autonet::LatentVector>& latents,
                             const TsneConfig& config);

void write_embedding_csv(const std::vector<Point2>& pts,
                         const std::vector<int>& element_labels,
                         const std::vector<std::size_t>& sample_indices,
                         const std::string& path);

}  // namespace impnet::latentmap
