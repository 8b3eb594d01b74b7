#include "impnet/latentmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "impnet/linalg.hpp"
#include "impnet/rng.hpp"

namespace impnet::latentmap {

std::array<SemanticGroup, 4> split_groups(const autonet::LatentVector& h,
                                          std::size_t sample_index) {
    if (h.size() % 4 != 0) {
        throw std::invalid_argument("latentmap: latent_dim not divisible by 4");
    }
    const std::size_t q = h.size() / 4;
    std::array<SemanticGroup, 4> groups;
    for (std::size_t g = 0; g < 4; ++g) {
        groups[g].element = static_cast<spectra::Element>(g);
        groups[g].sample_index = sample_index;
        groups[g].sub_vector.assign(h.begin() + g * q, h.begin() + (g + 1) * q);
    }
    return groups;
}

// ---- affinities -------------------------------------------------------------

Affinities tsne_affinities(const std::vector<std::vector<double>>& points,
                           const TsneConfig& config) {
    const std::size_t n = points.size();
    if (n < 4) throw std::invalid_argument("latentmap: need at least 4 points");
    const std::size_t dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) {
            throw std::invalid_argument("latentmap: ragged input points");
        }
    }
    if (!(static_cast<double>(n) > 3.0 * config.perplexity)) {
        throw std::invalid_argument(
            "latentmap: perplexity " + std::to_string(config.perplexity) +
            " infeasible for " + std::to_string(n) + " points");
    }

    std::vector<double> flat(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(points[i].begin(), points[i].end(), flat.begin() + i * dim);
    }
    std::vector<double> d2(n * n);
    kern::pairwise_sqdist(flat.data(), n, dim, d2.data());

    Affinities aff;
    aff.n = n;
    aff.p.assign(n * n, 0.0);
    aff.betas.assign(n, 0.0);
    aff.achieved_perplexity.assign(n, 0.0);

    const double target_entropy = std::log(config.perplexity);
    std::string error;

    // Conditional distributions row by row; each row is independent.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        double beta = 1.0;
        double beta_lo = 0.0;
        double beta_hi = std::numeric_limits<double>::infinity();
        std::vector<double> row(n, 0.0);
        double entropy = 0.0;
        bool converged = false;

        for (std::size_t step = 0; step < config.max_bisection_steps; ++step) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = (j == static_cast<std::size_t>(i))
                             ? 0.0
                             : std::exp(-beta * d2[i * n + j]);
                sum += row[j];
            }
            // H = log(sum) + beta * E[d^2]
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                weighted += row[j] * d2[i * n + j];
            }
            entropy = std::log(sum) + beta * weighted / sum;
            for (std::size_t j = 0; j < n; ++j) row[j] /= sum;

            const double perp = std::exp(entropy);
            if (std::abs(perp - config.perplexity) < config.perplexity_tol) {
                converged = true;
                break;
            }
            if (entropy > target_entropy) {
                beta_lo = beta;  // too spread out, sharpen
                beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta + beta_lo);
            }
        }
        if (!converged) {
#pragma omp critical
            if (error.empty()) {
                error = "latentmap: perplexity bisection did not converge for point " +
                        std::to_string(i);
            }
        }
        aff.betas[i] = beta;
        aff.achieved_perplexity[i] = std::exp(entropy);
        std::copy(row.begin(), row.end(), aff.p.begin() + i * n);
    }
    if (!error.empty()) throw std::runtime_error(error);

    // Symmetrize: p_ij = (p_j|i + p_i|j) / (2n), which sums to 1.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (aff.p[i * n + j] + aff.p[j * n + i]) /
                             (2.0 * static_cast<double>(n));
            aff.p[i * n + j] = v;
            aff.p[j * n + i] = v;
        }
        aff.p[i * n + i] = 0.0;
    }
    return aff;
}

// ---- embedding --------------------------------------------------------------

std::vector<Point2> tsne(const std::vector<std::vector<double>>& points,
                         const TsneConfig& config) {
    Affinities aff = tsne_affinities(points, config);
    const std::size_t n = aff.n;

    // Early exaggeration.
    for (double& v : aff.p) v *= config.early_exaggeration;

    Rng rng(config.seed);
    std::vector<double> y(2 * n);
    for (double& v : y) v = 1e-4 * rng.normal();
    std::vector<double> vel(2 * n, 0.0);
    std::vector<double> grad(2 * n, 0.0);
    std::vector<double> qnum(n * n, 0.0);  // (1 + ||y_i - y_j||^2)^-1

    double momentum = config.momentum_initial;

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        if (iter == config.exaggeration_iters) {
            for (double& v : aff.p) v /= config.early_exaggeration;
        }
        if (iter == config.momentum_switch_iter) {
            momentum = config.momentum_final;
        }

        // Student-t numerators; the normalizer is a fixed-order serial sum.
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == static_cast<std::size_t>(i)) {
                    qnum[i * n + j] = 0.0;
                    continue;
                }
                const double dx = y[2 * i] - y[2 * j];
                const double dy = y[2 * i + 1] - y[2 * j + 1];
                qnum[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
            }
        }
        double qsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                qsum += qnum[i * n + j];
            }
        }
        qsum *= 2.0;

        // dC/dy_i = 4 * sum_j (p_ij - q_ij) * qnum_ij * (y_i - y_j)
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == static_cast<std::size_t>(i)) continue;
                const double mult =
                    (aff.p[i * n + j] - qnum[i * n + j] / qsum) * qnum[i * n + j];
                gx += mult * (y[2 * i] - y[2 * j]);
                gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }

        for (std::size_t k = 0; k < 2 * n; ++k) {
            vel[k] = momentum * vel[k] - config.learning_rate * grad[k];
            y[k] += vel[k];
        }

        // Re-center exactly.
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
    }

    std::vector<Point2> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {y[2 * i], y[2 * i + 1]};
    return out;
}

// ---- silhouette -------------------------------------------------------------

double silhouette(const std::vector<Point2>& embedding,
                  const std::vector<int>& labels) {
    const std::size_t n = embedding.size();
    if (labels.size() != n || n < 4) {
        throw std::invalid_argument("latentmap: silhouette needs labeled points");
    }
    std::vector<int> uniq(labels);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) {
        throw std::invalid_argument("latentmap: silhouette needs >= 2 labels");
    }
    std::vector<std::size_t> count(uniq.size(), 0);
    std::vector<int> lab(n);
    for (std::size_t i = 0; i < n; ++i) {
        lab[i] = static_cast<int>(
            std::lower_bound(uniq.begin(), uniq.end(), labels[i]) - uniq.begin());
        count[lab[i]]++;
    }
    for (std::size_t c : count) {
        if (c < 2) {
            throw std::invalid_argument(
                "latentmap: silhouette needs >= 2 points per label");
        }
    }

    auto dist = [&](std::size_t i, std::size_t j) {
        const double dx = embedding[i].x - embedding[j].x;
        const double dy = embedding[i].y - embedding[j].y;
        return std::sqrt(dx * dx + dy * dy);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> mean_to(uniq.size(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) mean_to[lab[j]] += dist(i, j);
        }
        for (std::size_t c = 0; c < uniq.size(); ++c) {
            const double denom = static_cast<double>(count[c]) -
                                 (static_cast<int>(c) == lab[i] ? 1.0 : 0.0);
            mean_to[c] /= denom;
        }
        const double a = mean_to[lab[i]];
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < uniq.size(); ++c) {
            if (static_cast<int>(c) != lab[i]) b = std::min(b, mean_to[c]);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

// ---- group embeddings ---------------------------------------------------------

GroupEmbeddings embed_groups(const std::vector<autonet::LatentVector>& latents,
                             const TsneConfig& config) {
    if (latents.empty()) {
        throw std::invalid_argument("latentmap: no latents to embed");
    }

    std::vector<std::vector<double>> joint_pts;
    GroupEmbeddings out;
    std::array<std::vector<std::vector<double>>, 4> per_element_pts;
    for (std::size_t s = 0; s < latents.size(); ++s) {
        const auto groups = split_groups(latents[s], s);
        for (std::size_t g = 0; g < 4; ++g) {
            joint_pts.push_back(groups[g].sub_vector);
            out.joint_labels.push_back(static_cast<int>(g));
            out.joint_samples.push_back(s);
            per_element_pts[g].push_back(groups[g].sub_vector);
        }
    }

    out.joint = tsne(joint_pts, config);
    out.joint_silhouette = silhouette(out.joint, out.joint_labels);
    for (std::size_t g = 0; g < 4; ++g) {
        TsneConfig per_cfg = config;
        per_cfg.seed = mix_seed(config.seed, g + 1);
        // Keep perplexity feasible for the smaller per-element set.
        const double max_perp =
            (static_cast<double>(per_element_pts[g].size()) - 1.0) / 3.0;
        per_cfg.perplexity = std::min(config.perplexity, max_perp * 0.9);
        out.per_element[g] = tsne(per_element_pts[g], per_cfg);
    }
    return out;
}

void write_embedding_csv(const std::vector<Point2>& pts,
                         const std::vector<int>& element_labels,
                         const std::vector<std::size_t>& sample_indices,
                         const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("latentmap: cannot open " + path);
    f.precision(17);
    f << "sample_index,element_label,x,y\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::size_t sample =
            sample_indices.empty() ? i : sample_indices[i];
        const char* label =
            element_labels.empty()
                ? "all"
                : spectra::element_name(
                      static_cast<spectra::Element>(element_labels[i]));
        f << sample << ',' << label << ',' << pts[i].x << ',' << pts[i].y
          << '\n';
    }
}

}  // namespace impnet::latentmap
