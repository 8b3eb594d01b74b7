#include "impnet/autonet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "impnet/binio.hpp"
#include "impnet/linalg.hpp"
#include "impnet/rng.hpp"

namespace impnet::autonet {

// ---- architecture ----------------------------------------------------------

std::vector<std::size_t> Architecture::pipeline() const {
    std::vector<std::size_t> p;
    p.push_back(input_dim);
    p.insert(p.end(), encoder_dims.begin(), encoder_dims.end());
    p.push_back(latent_dim);
    return p;
}

void Architecture::validate() const {
    if (input_dim == 0 || latent_dim == 0) {
        throw std::invalid_argument("autonet: zero dimension in architecture");
    }
    if (mode == ArchMode::Grouped) {
        if (input_dim % 4 != 0 || latent_dim % 4 != 0) {
            throw std::invalid_argument(
                "autonet: grouped mode needs input_dim and latent_dim divisible by 4");
        }
        for (std::size_t d : encoder_dims) {
            if (d % 4 != 0) {
                throw std::invalid_argument(
                    "autonet: grouped mode needs encoder dims divisible by 4");
            }
        }
    }
    if (input_dim % 8 != 0) {
        throw std::invalid_argument("autonet: input_dim must be 8*T");
    }
}

Architecture default_arch(ArchMode mode, std::size_t input_dim,
                          std::size_t latent_dim,
                          std::vector<std::size_t> encoder_dims) {
    Architecture a;
    a.mode = mode;
    a.input_dim = input_dim;
    a.latent_dim = latent_dim;
    a.encoder_dims = std::move(encoder_dims);
    a.validate();
    return a;
}

Architecture paper_shape_arch(ArchMode mode) {
    return default_arch(mode, 20000, 64, {2048, 512});
}

Architecture reduced_arch(ArchMode mode, std::size_t t_points) {
    return default_arch(mode, 8 * t_points, 32, {512, 128});
}

// ---- init ------------------------------------------------------------------

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, Rng& rng) {
    DenseLayer l;
    l.in = in;
    l.out = out;
    l.w.resize(in * out);
    l.b.assign(out, 0.0);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : l.w) v = std_dev * rng.normal();
    return l;
}

std::vector<std::size_t> stack_pipeline(const Architecture& arch) {
    std::vector<std::size_t> p = arch.pipeline();
    if (arch.mode == ArchMode::Grouped) {
        for (std::size_t& d : p) d /= 4;
    }
    return p;
}

}  // namespace

AutoencoderModel init_model(const Architecture& arch, const NormStats& norm,
                            std::uint64_t seed) {
    arch.validate();
    AutoencoderModel m;
    m.arch = arch;
    m.norm = norm;
    m.rng_seed = seed;
    Rng rng(seed);
    const std::vector<std::size_t> dims = stack_pipeline(arch);
    m.stacks.resize(arch.stack_count());
    for (Stack& s : m.stacks) {
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
            s.enc.push_back(make_layer(dims[k], dims[k + 1], rng));
        }
        for (std::size_t k = dims.size() - 1; k > 0; --k) {
            s.dec.push_back(make_layer(dims[k], dims[k - 1], rng));
        }
    }
    return m;
}

// ---- forward ---------------------------------------------------------------

std::vector<double> relu(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    kern::relu(v.data(), out.data(), v.size());
    return out;
}

namespace {

// Activations cached for backprop: pre[k] is the pre-activation of layer k,
// act[k] the post-activation input of layer k (act[0] is the stack input).
struct StackTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    std::vector<double> output;
};

// ReLU on hidden layers only. The latent layer is linear (z-scored data
// keeps a large signed common component; a rectified latent dies during the
// mean-learning phase and never recovers), and so is the decoder output
// (signed targets).
bool layer_is_linear(const Stack& s, std::size_t k) {
    return k == s.enc.size() - 1 || k == s.enc.size() + s.dec.size() - 1;
}

StackTrace run_stack(const Stack& s, const std::vector<double>& input) {
    StackTrace tr;
    tr.act.push_back(input);
    std::vector<double> cur = input;
    const std::size_t total = s.enc.size() + s.dec.size();
    for (std::size_t k = 0; k < total; ++k) {
        const DenseLayer& l = k < s.enc.size() ? s.enc[k] : s.dec[k - s.enc.size()];
        std::vector<double> z(l.out);
        kern::matvec(l.w.data(), l.out, l.in, cur.data(), l.b.data(), z.data());
        tr.pre.push_back(z);
        if (layer_is_linear(s, k)) {
            cur = std::move(z);
        } else {
            std::vector<double> a(l.out);
            kern::relu(z.data(), a.data(), z.size());
            cur = std::move(a);
        }
        if (k + 1 < total) tr.act.push_back(cur);
    }
    tr.output = std::move(cur);
    return tr;
}

std::vector<double> stack_encode(const Stack& s, const std::vector<double>& input) {
    std::vector<double> cur = input;
    for (std::size_t k = 0; k < s.enc.size(); ++k) {
        const DenseLayer& l = s.enc[k];
        std::vector<double> z(l.out);
        kern::matvec(l.w.data(), l.out, l.in, cur.data(), l.b.data(), z.data());
        if (k + 1 == s.enc.size()) {
            cur = std::move(z);  // linear latent
        } else {
            std::vector<double> a(l.out);
            kern::relu(z.data(), a.data(), z.size());
            cur = std::move(a);
        }
    }
    return cur;
}

std::vector<double> stack_decode(const Stack& s, const std::vector<double>& h) {
    std::vector<double> cur = h;
    for (std::size_t k = 0; k < s.dec.size(); ++k) {
        const DenseLayer& l = s.dec[k];
        std::vector<double> z(l.out);
        kern::matvec(l.w.data(), l.out, l.in, cur.data(), l.b.data(), z.data());
        if (k + 1 < s.dec.size()) {
            std::vector<double> a(l.out);
            kern::relu(z.data(), a.data(), z.size());
            cur = std::move(a);
        } else {
            cur = std::move(z);
        }
    }
    return cur;
}

void check_input_dim(const AutoencoderModel& model, std::size_t n) {
    if (n != model.arch.input_dim) {
        throw std::invalid_argument(
            "autonet: input length " + std::to_string(n) + " != input_dim " +
            std::to_string(model.arch.input_dim));
    }
}

}  // namespace

LatentVector encode(const AutoencoderModel& model, const FlatSample& x,
                    bool already_normalized) {
    check_input_dim(model, x.size());
    const FlatSample xn =
        already_normalized ? x : tensorize::normalize(x, model.norm);
    if (model.arch.mode == ArchMode::Monolithic) {
        return stack_encode(model.stacks[0], xn);
    }
    const auto groups = tensorize::regroup_by_element(xn);
    LatentVector h;
    h.reserve(model.arch.latent_dim);
    for (std::size_t g = 0; g < 4; ++g) {
        const auto hg = stack_encode(model.stacks[g], groups[g]);
        h.insert(h.end(), hg.begin(), hg.end());
    }
    return h;
}

FlatSample decode(const AutoencoderModel& model, const LatentVector& h) {
    if (h.size() != model.arch.latent_dim) {
        throw std::invalid_argument(
            "autonet: latent length " + std::to_string(h.size()) +
            " != latent_dim " + std::to_string(model.arch.latent_dim));
    }
    if (model.arch.mode == ArchMode::Monolithic) {
        return stack_decode(model.stacks[0], h);
    }
    const std::size_t q = model.arch.latent_dim / 4;
    std::array<FlatSample, 4> groups;
    for (std::size_t g = 0; g < 4; ++g) {
        const LatentVector hg(h.begin() + g * q, h.begin() + (g + 1) * q);
        groups[g] = stack_decode(model.stacks[g], hg);
    }
    return tensorize::degroup_by_element(groups);
}

// ---- loss and gradients -----------------------------------------------------

double recon_loss(const FlatSample& xhat, const FlatSample& x, double eps) {
    if (xhat.size() != x.size()) {
        throw std::invalid_argument("autonet: recon_loss length mismatch");
    }
    double diff_sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = xhat[i] - x[i];
        diff_sq += d * d;
    }
    return std::sqrt(diff_sq) / (kern::norm2(x) + eps);
}

double total_loss(const std::vector<double>& batch_losses) {
    if (batch_losses.empty()) {
        throw std::invalid_argument("autonet: empty loss batch");
    }
    return std::accumulate(batch_losses.begin(), batch_losses.end(), 0.0) /
           static_cast<double>(batch_losses.size());
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    if (tensors.size() != other.tensors.size()) {
        throw std::invalid_argument("autonet: gradient shape mismatch");
    }
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        for (std::size_t i = 0; i < tensors[t].size(); ++i) {
            tensors[t][i] += scale * other.tensors[t][i];
        }
    }
}

Gradients zero_gradients(const AutoencoderModel& model) {
    Gradients g;
    model.for_each_param(
        [&](const std::vector<double>& p) { g.tensors.emplace_back(p.size(), 0.0); });
    return g;
}

namespace {

// Backprop through one stack given dL/d(output); accumulates dW/db into the
// gradient tensors starting at slot `slot`.
void stack_backward(const Stack& s, const StackTrace& tr,
                    const std::vector<double>& dout, Gradients& grads,
                    std::size_t slot) {
    const std::size_t n_layers = s.enc.size() + s.dec.size();
    std::vector<double> delta = dout;  // dL/d(pre) of the last (linear) layer
    for (std::size_t k = n_layers; k-- > 0;) {
        const DenseLayer& l =
            k < s.enc.size() ? s.enc[k] : s.dec[k - s.enc.size()];
        kern::rank1_acc(grads.tensors[slot + 2 * k].data(), l.out, l.in,
                        delta.data(), tr.act[k].data());
        for (std::size_t i = 0; i < l.out; ++i) {
            grads.tensors[slot + 2 * k + 1][i] += delta[i];
        }
        if (k == 0) break;
        std::vector<double> dprev(l.in);
        kern::matvec_t(l.w.data(), l.out, l.in, delta.data(), dprev.data());
        if (!layer_is_linear(s, k - 1)) {
            kern::relu_backward(tr.pre[k - 1].data(), dprev.data(), dprev.size());
        }
        delta = std::move(dprev);
    }
}

}  // namespace

double backward(const AutoencoderModel& model, const FlatSample& x,
                Gradients& grads, double eps) {
    check_input_dim(model, x.size());

    std::vector<StackTrace> traces;
    FlatSample xhat;
    std::array<FlatSample, 4> groups;
    if (model.arch.mode == ArchMode::Monolithic) {
        traces.push_back(run_stack(model.stacks[0], x));
        xhat = traces[0].output;
    } else {
        groups = tensorize::regroup_by_element(x);
        std::array<FlatSample, 4> outs;
        for (std::size_t g = 0; g < 4; ++g) {
            traces.push_back(run_stack(model.stacks[g], groups[g]));
            outs[g] = traces[g].output;
        }
        xhat = tensorize::degroup_by_element(outs);
    }

    double diff_sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = xhat[i] - x[i];
        diff_sq += d * d;
    }
    const double diff_norm = std::sqrt(diff_sq);
    const double denom = kern::norm2(x) + eps;
    const double loss = diff_norm / denom;

    // dL/dxhat = (xhat - x) / (max(||xhat - x||, 1e-12) * (||x|| + eps))
    const double scale = 1.0 / (std::max(diff_norm, 1e-12) * denom);
    FlatSample dout(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dout[i] = scale * (xhat[i] - x[i]);
    }

    if (model.arch.mode == ArchMode::Monolithic) {
        stack_backward(model.stacks[0], traces[0], dout, grads, 0);
        return loss;
    }
    const auto dgroups = tensorize::regroup_by_element(dout);
    std::size_t slot = 0;
    for (std::size_t g = 0; g < 4; ++g) {
        stack_backward(model.stacks[g], traces[g], dgroups[g], grads, slot);
        slot += 2 * (model.stacks[g].enc.size() + model.stacks[g].dec.size());
    }
    return loss;
}

// ---- Adam --------------------------------------------------------------------

AdamState zero_adam_state(const AutoencoderModel& model) {
    AdamState st;
    model.for_each_param([&](const std::vector<double>& p) {
        st.m.emplace_back(p.size(), 0.0);
        st.v.emplace_back(p.size(), 0.0);
    });
    return st;
}

void adam_step(AutoencoderModel& model, const Gradients& grads,
               AdamState& state, const AdamConfig& cfg) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    std::size_t t = 0;
    model.for_each_param([&](std::vector<double>& p) {
        const std::vector<double>& g = grads.tensors[t];
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        if (g.size() != p.size()) {
            throw std::invalid_argument("autonet: adam shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        ++t;
    });
}

// ---- training ------------------------------------------------------------------

double mean_loss(const AutoencoderModel& model,
                 const std::vector<FlatSample>& normalized, double eps) {
    return total_loss(per_sample_losses(model, normalized, eps));
}

std::vector<double> per_sample_losses(const AutoencoderModel& model,
                                      const std::vector<FlatSample>& normalized,
                                      double eps) {
    std::vector<double> losses;
    losses.reserve(normalized.size());
    for (const FlatSample& x : normalized) {
        const FlatSample xhat = decode(model, encode(model, x, true));
        losses.push_back(recon_loss(xhat, x, eps));
    }
    return losses;
}

SplitIndices split_indices(std::size_t n, const Split& split,
                           std::uint64_t seed) {
    if (split.train_count + split.test_count > n) {
        throw std::invalid_argument("autonet: split exceeds dataset size");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(mix_seed(seed, 0x517u));
    split_rng.shuffle(order);
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + split.train_count);
    out.test.assign(order.begin() + split.train_count,
                    order.begin() + split.train_count + split.test_count);
    return out;
}

TrainResult train(const spectra::Dataset& dataset, const Split& split,
                  const Architecture& arch, const TrainConfig& config) {
    arch.validate();
    const std::size_t n = dataset.size();
    if (split.train_count == 0) {
        throw std::invalid_argument("autonet: empty training split");
    }
    if (config.batch_size < 1 || config.epochs < 1 ||
        !(config.learning_rate > 0.0)) {
        throw std::invalid_argument("autonet: invalid training config");
    }

    const SplitIndices indices = split_indices(n, split, config.seed);

    TrainResult res;
    res.train_indices = indices.train;
    res.test_indices = indices.test;

    std::vector<FlatSample> train_flat, test_flat;
    train_flat.reserve(split.train_count);
    for (std::size_t i : res.train_indices) {
        train_flat.push_back(tensorize::flatten(dataset.curves[i]));
    }
    for (const FlatSample& x : train_flat) {
        if (!(kern::norm2(x) > 0.0)) {
            throw std::runtime_error("autonet: zero-norm training sample");
        }
    }
    const NormStats norm = tensorize::fit_norm(train_flat);
    for (FlatSample& x : train_flat) x = tensorize::normalize(x, norm);
    for (std::size_t i : res.test_indices) {
        test_flat.push_back(
            tensorize::normalize(tensorize::flatten(dataset.curves[i]), norm));
    }

    AutoencoderModel model = init_model(arch, norm, config.seed);
    AdamState adam = zero_adam_state(model);
    const AdamConfig adam_cfg{config.learning_rate, config.adam_beta1,
                              config.adam_beta2, config.adam_eps};

    if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
    }

    std::vector<std::size_t> batch_order(split.train_count);
    std::iota(batch_order.begin(), batch_order.end(), 0);

    Gradients grads = zero_gradients(model);  // reused across batches
    res.history.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        Rng epoch_rng(mix_seed(config.seed, epoch + 1));
        epoch_rng.shuffle(batch_order);

        // Epoch training loss is the running mean over all train samples,
        // each evaluated when its batch is processed.
        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < batch_order.size();
             start += config.batch_size) {
            const std::size_t end =
                std::min(start + config.batch_size, batch_order.size());
            for (auto& t : grads.tensors) std::fill(t.begin(), t.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                batch_loss +=
                    backward(model, train_flat[batch_order[k]], grads,
                             config.loss_eps);
            }
            epoch_loss_sum += batch_loss;
            const double inv = 1.0 / static_cast<double>(end - start);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error(
                    "autonet: non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(start / config.batch_size));
            }
            for (auto& t : grads.tensors) {
                for (double& g : t) g *= inv;
            }
            adam_step(model, grads, adam, adam_cfg);
        }

        EpochRecord rec;
        rec.train_loss =
            epoch_loss_sum / static_cast<double>(batch_order.size());
        rec.test_loss =
            test_flat.empty() ? 0.0 : mean_loss(model, test_flat, config.loss_eps);
        rec.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        res.history.push_back(rec);

        if (!config.checkpoint_dir.empty() &&
            (epoch % config.checkpoint_every == 0 ||
             epoch + 1 == config.epochs)) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%04zu.aeck", epoch);
            save_checkpoint(model, &adam,
                            (std::filesystem::path(config.checkpoint_dir) / name)
                                .string());
        }
    }

    res.model = std::move(model);
    res.adam = std::move(adam);
    return res;
}

// ---- "AECK" checkpoint format -----------------------------------------------
// Layout (little-endian):
//   magic "AECK" | version u8=1 | mode u8 | stack_count u32 | dim_count u32 |
//   pipeline dims u32[dim_count] (full model dims; per-stack dims are /4 in
//   grouped mode) | mu f64 | sigma f64 | rng_seed u64 |
//   params f64[] stacks-major (enc w,b then dec w,b per stack) |
//   adam_flag u8 | if set: step u64, m f64[], v f64[] in param order.

void save_checkpoint(const AutoencoderModel& model, const AdamState* adam,
                     const std::string& path) {
    binio::Writer w;
    w.magic("AECK");
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(model.arch.mode));
    w.u32(static_cast<std::uint32_t>(model.arch.stack_count()));
    const auto dims = model.arch.pipeline();
    w.u32(static_cast<std::uint32_t>(dims.size()));
    for (std::size_t d : dims) w.u32(static_cast<std::uint32_t>(d));
    w.f64(model.norm.mu);
    w.f64(model.norm.sigma);
    w.u64(model.rng_seed);
    model.for_each_param([&](const std::vector<double>& p) {
        w.bytes(p.data(), p.size() * sizeof(double));
    });
    w.u8(adam ? 1 : 0);
    if (adam) {
        w.u64(adam->step);
        for (const auto& t : adam->m) w.bytes(t.data(), t.size() * sizeof(double));
        for (const auto& t : adam->v) w.bytes(t.data(), t.size() * sizeof(double));
    }
    binio::write_file(path, w.data());
}

Checkpoint load_checkpoint(const std::string& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes.data(), bytes.size(), path);
    r.expect_magic("AECK");
    const auto version = r.u8();
    if (version != 1) r.fail("unsupported version " + std::to_string(version), 4);
    Architecture arch;
    arch.mode = static_cast<ArchMode>(r.u8());
    const std::uint32_t stack_count = r.u32();
    if ((arch.mode == ArchMode::Monolithic && stack_count != 1) ||
        (arch.mode == ArchMode::Grouped && stack_count != 4)) {
        r.fail("stack count inconsistent with mode", r.offset());
    }
    const std::uint32_t dim_count = r.u32();
    if (dim_count < 2) r.fail("need at least input and latent dims", r.offset());
    std::vector<std::size_t> dims(dim_count);
    for (auto& d : dims) d = r.u32();
    arch.input_dim = dims.front();
    arch.latent_dim = dims.back();
    arch.encoder_dims.assign(dims.begin() + 1, dims.end() - 1);
    arch.validate();

    Checkpoint ck;
    ck.model.arch = arch;
    ck.model.norm.mu = r.f64();
    ck.model.norm.sigma = r.f64();
    ck.model.rng_seed = r.u64();

    std::vector<std::size_t> stack_dims = dims;
    if (arch.mode == ArchMode::Grouped) {
        for (auto& d : stack_dims) d /= 4;
    }
    ck.model.stacks.resize(stack_count);
    for (Stack& s : ck.model.stacks) {
        for (std::size_t k = 0; k + 1 < stack_dims.size(); ++k) {
            DenseLayer l;
            l.in = stack_dims[k];
            l.out = stack_dims[k + 1];
            s.enc.push_back(std::move(l));
        }
        for (std::size_t k = stack_dims.size() - 1; k > 0; --k) {
            DenseLayer l;
            l.in = stack_dims[k];
            l.out = stack_dims[k - 1];
            s.dec.push_back(std::move(l));
        }
    }
    for (Stack& s : ck.model.stacks) {
        for (std::vector<DenseLayer>* half : {&s.enc, &s.dec}) {
            for (DenseLayer& l : *half) {
                l.w.resize(l.in * l.out);
                l.b.resize(l.out);
                r.raw(l.w.data(), l.w.size() * sizeof(double));
                r.raw(l.b.data(), l.b.size() * sizeof(double));
            }
        }
    }
    ck.has_adam = r.u8() != 0;
    if (ck.has_adam) {
        ck.adam.step = r.u64();
        ck.model.for_each_param([&](const std::vector<double>& p) {
            ck.adam.m.emplace_back(p.size());
        });
        for (auto& t : ck.adam.m) r.raw(t.data(), t.size() * sizeof(double));
        ck.model.for_each_param([&](const std::vector<double>& p) {
            ck.adam.v.emplace_back(p.size());
        });
        for (auto& t : ck.adam.v) r.raw(t.data(), t.size() * sizeof(double));
    }
    if (r.remaining() != 0) {
        r.fail(std::to_string(r.remaining()) + " trailing bytes", r.offset());
    }
    return ck;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("autonet: cannot open " + path);
    f.precision(17);
    f << "epoch,train_loss,test_loss,seconds\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        f << e << ',' << history[e].train_loss << ',' << history[e].test_loss
          << ',' << history[e].seconds << '\n';
    }
}

}  // namespace impnet::autonet
