#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impnet/tensorize.hpp"

namespace impnet::autonet {

using tensorize::FlatSample;
using tensorize::NormStats;
using LatentVector = std::vector<double>;

enum class ArchMode : std::uint8_t { Monolithic = 0, Grouped = 1 };

// Encoder pipeline input_dim -> encoder_dims... -> latent_dim; the decoder
// mirrors it. Grouped mode runs four parallel stacks, one per impedance
// element, each at a quarter of every dimension; their latent outputs are
// concatenated in element order (Y11, Y12, Y21, Y22).
struct Architecture {
    ArchMode mode = ArchMode::Monolithic;
    std::size_t input_dim = 20000;
    std::vector<std::size_t> encoder_dims = {2048, 512};
    std::size_t latent_dim = 64;

    std::size_t stack_count() const { return mode == ArchMode::Grouped ? 4 : 1; }
    // Full pipeline dims including input and latent.
    std::vector<std::size_t> pipeline() const;
    void validate() const;
    bool operator==(const Architecture&) const = default;
};

Architecture default_arch(ArchMode mode, std::size_t input_dim,
                          std::size_t latent_dim,
                          std::vector<std::size_t> encoder_dims);

// Paper-shape architecture: 20000 -> 2048 -> 512 -> 64 (input is 8*T at
// T=2500). The reduced desk-scale shape is 8T -> 512 -> 128 -> 32 (T=500).
Architecture paper_shape_arch(ArchMode mode);
Architecture reduced_arch(ArchMode mode, std::size_t t_points);

struct DenseLayer {
    std::size_t in = 0, out = 0;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
    bool operator==(const DenseLayer&) const = default;
};

// One encoder+decoder pair. Monolithic models have a single stack; grouped
// models have four.
struct Stack {
    std::vector<DenseLayer> enc;
    std::vector<DenseLayer> dec;
    bool operator==(const Stack&) const = default;
};

struct AutoencoderModel {
    Architecture arch;
    std::vector<Stack> stacks;
    NormStats norm;
    std::uint64_t rng_seed = 0;
    bool operator==(const AutoencoderModel&) const = default;

    // Visits parameter tensors in the canonical (serialization and Adam)
    // order: stacks-major, then encoder layers, then decoder layers, w then b.
    template <typename F>
    void for_each_param(F&& f) {
        for (Stack& s : stacks) {
            for (DenseLayer& l : s.enc) { f(l.w); f(l.b); }
            for (DenseLayer& l : s.dec) { f(l.w); f(l.b); }
        }
    }
    template <typename F>
    void for_each_param(F&& f) const {
        for (const Stack& s : stacks) {
            for (const DenseLayer& l : s.enc) { f(l.w); f(l.b); }
            for (const DenseLayer& l : s.dec) { f(l.w); f(l.b); }
        }
    }
};

// He-normal weights (std sqrt(2/fan_in)), zero biases, deterministic in seed.
AutoencoderModel init_model(const Architecture& arch, const NormStats& norm,
                            std::uint64_t seed);

std::vector<double> relu(const std::vector<double>& v);

LatentVector encode(const AutoencoderModel& model, const FlatSample& x,
                    bool already_normalized = false);
// Output is in normalized space; denormalize separately.
FlatSample decode(const AutoencoderModel& model, const LatentVector& h);

// ||xhat - x||_2 / (||x||_2 + eps)
double recon_loss(const FlatSample& xhat, const FlatSample& x,
                  double eps = 1e-8);
double total_loss(const std::vector<double>& batch_losses);

// Gradients in the same canonical order as for_each_param.
struct Gradients {
    std::vector<std::vector<double>> tensors;
    void add_scaled(const Gradients& other, double scale);
};

Gradients zero_gradients(const AutoencoderModel& model);

// Analytic gradient of recon_loss(decode(encode(x, normalized)), x) for a
// normalized sample x. Also returns the sample's loss.
double backward(const AutoencoderModel& model, const FlatSample& x,
                Gradients& grads, double eps = 1e-8);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

AdamState zero_adam_state(const AutoencoderModel& model);
void adam_step(AutoencoderModel& model, const Gradients& grads,
               AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 10;
    std::size_t epochs = 500;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double loss_eps = 1e-8;
    std::uint64_t seed = 7;
    std::string checkpoint_dir;       // empty: no per-epoch checkpoints
    std::size_t checkpoint_every = 1;
};

struct EpochRecord {
    double train_loss = 0.0;
    double test_loss = 0.0;
    double seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct Split {
    std::size_t train_count = 90;
    std::size_t test_count = 10;
};

struct TrainResult {
    AutoencoderModel model;
    AdamState adam;
    TrainHistory history;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// The seeded split shuffle shared by train and any evaluator that needs to
// reproduce it.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
SplitIndices split_indices(std::size_t n, const Split& split, std::uint64_t seed);

// Deterministic end-to-end training: seeded split shuffle, per-epoch seeded
// batch shuffle, Eq.-style mean relative loss, optional per-epoch
// checkpoints. Normalization stats are fit on the training split only.
TrainResult train(const spectra::Dataset& dataset, const Split& split,
                  const Architecture& arch, const TrainConfig& config);

// Mean recon loss of the model over the given normalized samples.
double mean_loss(const AutoencoderModel& model,
                 const std::vector<FlatSample>& normalized, double eps = 1e-8);
std::vector<double> per_sample_losses(const AutoencoderModel& model,
                                      const std::vector<FlatSample>& normalized,
                                      double eps = 1e-8);

// "AECK" checkpoint format, little-endian. load(save(m)) == m exactly.
void save_checkpoint(const AutoencoderModel& model, const AdamState* adam,
                     const std::string& path);
struct Checkpoint {
    AutoencoderModel model;
    bool has_adam = false;
    AdamState adam;
};
Checkpoint load_checkpoint(const std::string& path);

void write_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace impnet::autonet
