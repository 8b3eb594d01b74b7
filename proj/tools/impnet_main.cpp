// impnet: synthesize wideband dq admittance datasets, train the MLP
// autoencoder, push latent frames through the simulated farm link, and
// assemble the per-frequency nodal admittance model.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "impnet/autonet.hpp"
#include "impnet/farmlink.hpp"
#include "impnet/gridnet.hpp"
#include "impnet/latentmap.hpp"
#include "impnet/rng.hpp"
#include "impnet/spectra.hpp"
#include "impnet/svgplot.hpp"
#include "impnet/tensorize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace impnet;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Relative output paths resolve under IMPNET_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        if (const char* root = std::getenv("IMPNET_OUT_ROOT")) {
            return fs::path(root) / p;
        }
    }
    return p;
}

// Run manifest written alongside every subcommand's outputs; re-running with
// the recorded flags reproduces the outputs bit-exactly (timestamps aside).
class Manifest {
public:
    Manifest(std::string subcommand) {
        j_["subcommand"] = std::move(subcommand);
        j_["tool_version"] = kToolVersion;
        j_["started"] = iso_now();
    }
    void flag(const std::string& name, const json& value) { j_["flags"][name] = value; }
    void input(const std::string& path) { j_["inputs"].push_back(path); }
    void output(const std::string& path) { j_["outputs"].push_back(path); }
    void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }

    void write(const fs::path& dir) {
        j_["finished"] = iso_now();
        fs::create_directories(dir);
        std::ofstream f(dir / "manifest.json");
        f << j_.dump(2) << '\n';
    }

private:
    json j_;
};

spectra::FrequencyGrid grid_for(bool paper_shape, double f_start, double f_step,
                                std::uint32_t t_points) {
    if (paper_shape) return spectra::make_frequency_grid(1.0, 1.0, 2500);
    return spectra::make_frequency_grid(f_start, f_step, t_points);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        throw std::invalid_argument("missing CSV column '" + name + "'");
    }
};

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (std::getline(f, line)) t.header = split_csv_line(line);
    while (std::getline(f, line)) {
        if (!line.empty()) t.rows.push_back(split_csv_line(line));
    }
    return t;
}

autonet::Split make_split(std::size_t n, std::size_t train_count,
                          std::size_t test_count) {
    if (train_count == 0 && test_count == 0) {
        train_count = (n * 9) / 10;
        test_count = n - train_count;
    }
    return {train_count, test_count};
}

// ---- gen-dataset ----------------------------------------------------------

int cmd_gen_dataset(const std::string& out, std::size_t n, std::uint64_t seed,
                    bool paper_shape, double f_start, double f_step,
                    std::uint32_t t_points, int csv_sample,
                    const std::string& csv_path, const spectra::OpRanges& ranges) {
    Manifest man("gen-dataset");
    const auto grid = grid_for(paper_shape, f_start, f_step, t_points);
    man.flag("n", n);
    man.flag("paper_shape", paper_shape);
    man.flag("f_start", grid.f_start);
    man.flag("f_step", grid.f_step);
    man.flag("t_points", grid.count);
    man.flag("p_range", json::array({ranges.p_min, ranges.p_max}));
    man.flag("pf_range", json::array({ranges.pf_min, ranges.pf_max}));
    man.flag("u_range", json::array({ranges.u_min, ranges.u_max}));
    man.seed("dataset", seed);

    const spectra::VscParams params;
    const auto dataset = spectra::gen_dataset(n, seed, params, ranges, grid);

    const fs::path out_path = resolve_out(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    spectra::write_dataset(dataset, out_path.string());
    man.output(out_path.string());
    std::cout << "wrote " << dataset.size() << " samples, T=" << grid.count
              << " -> " << out_path.string() << "\n";

    if (!csv_path.empty()) {
        const std::size_t idx = csv_sample < 0 ? 0 : static_cast<std::size_t>(csv_sample);
        if (idx >= dataset.size()) {
            throw std::invalid_argument("csv sample index out of range");
        }
        const fs::path cp = resolve_out(csv_path);
        spectra::write_curve_csv(dataset.curves[idx], cp.string());
        man.output(cp.string());
    }
    man.write(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));
    return 0;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const std::string& dataset_path, const std::string& out_dir,
              const std::string& arch_name, std::size_t epochs, double lr,
              std::size_t batch, std::uint64_t seed, std::size_t train_count,
              std::size_t test_count, bool paper_shape,
              std::size_t checkpoint_every, bool no_epoch_checkpoints) {
    Manifest man("train");
    man.input(dataset_path);
    man.seed("train", seed);
    man.flag("arch", arch_name);
    man.flag("epochs", epochs);
    man.flag("lr", lr);
    man.flag("batch", batch);
    man.flag("paper_shape", paper_shape);

    const auto dataset = spectra::read_dataset(dataset_path);
    const auto mode = arch_name == "grouped" ? autonet::ArchMode::Grouped
                                             : autonet::ArchMode::Monolithic;
    const auto arch = paper_shape ? autonet::paper_shape_arch(mode)
                                  : autonet::reduced_arch(mode, dataset.grid.count);
    if (arch.input_dim != static_cast<std::size_t>(dataset.grid.count) * 8) {
        throw std::invalid_argument(
            "architecture input dim does not match dataset T (use --paper-shape "
            "with a T=2500 dataset)");
    }

    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);

    autonet::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.checkpoint_every = checkpoint_every;
    if (!no_epoch_checkpoints) {
        cfg.checkpoint_dir = (dir / "checkpoints").string();
    }

    const auto split = make_split(dataset.size(), train_count, test_count);
    man.flag("train_count", split.train_count);
    man.flag("test_count", split.test_count);

    auto result = autonet::train(dataset, split, arch, cfg);

    const std::string model_path = (dir / "model.aeck").string();
    autonet::save_checkpoint(result.model, &result.adam, model_path);
    const std::string hist_path = (dir / "history.csv").string();
    autonet::write_history_csv(result.history, hist_path);
    man.output(model_path);
    man.output(hist_path);
    man.write(dir);

    std::cout << "final train loss " << result.history.back().train_loss
              << ", test loss " << result.history.back().test_loss << "\n"
              << "model -> " << model_path << "\n";
    return 0;
}

// ---- eval ------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& dataset_path,
             const std::string& split_name, std::uint64_t seed,
             std::size_t train_count, std::size_t test_count,
             const std::string& out_dir, int dump_sample) {
    Manifest man("eval");
    man.input(checkpoint);
    man.input(dataset_path);
    man.flag("split", split_name);
    man.seed("split", seed);

    const auto ck = autonet::load_checkpoint(checkpoint);
    const auto dataset = spectra::read_dataset(dataset_path);

    // Same seeded shuffle as training so the split lines up with a model
    // trained with the same seed/counts.
    const auto split = make_split(dataset.size(), train_count, test_count);
    const auto split_idx = autonet::split_indices(dataset.size(), split, seed);

    std::vector<std::size_t> indices;
    if (split_name == "train") {
        indices = split_idx.train;
    } else if (split_name == "test") {
        indices = split_idx.test;
    } else {
        indices.resize(dataset.size());
        std::iota(indices.begin(), indices.end(), 0);
    }

    std::vector<autonet::FlatSample> normalized;
    for (std::size_t i : indices) {
        normalized.push_back(tensorize::normalize(
            tensorize::flatten(dataset.curves[i]), ck.model.norm));
    }
    const auto losses = autonet::per_sample_losses(ck.model, normalized);
    std::cout << "mean relative reconstruction loss (" << split_name
              << ", n=" << losses.size() << "): " << autonet::total_loss(losses)
              << "\n";

    // per-element amplitude/phase error table
    double amp_err[4] = {0, 0, 0, 0};
    double phase_err[4] = {0, 0, 0, 0};
    std::size_t count = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& curve = dataset.curves[indices[k]];
        const auto latent = autonet::encode(ck.model, normalized[k], true);
        const auto rec_flat = tensorize::denormalize(
            autonet::decode(ck.model, latent), ck.model.norm);
        const auto rec = tensorize::unflatten(rec_flat, dataset.grid);
        for (int e = 0; e < 4; ++e) {
            const auto orig_ap =
                spectra::amplitude_phase(curve, static_cast<spectra::Element>(e));
            const auto rec_ap =
                spectra::amplitude_phase(rec, static_cast<spectra::Element>(e));
            for (std::size_t t = 0; t < orig_ap.size(); ++t) {
                amp_err[e] += std::abs(orig_ap[t].magnitude - rec_ap[t].magnitude);
                double dp = std::abs(orig_ap[t].phase_deg - rec_ap[t].phase_deg);
                if (dp > 180.0) dp = 360.0 - dp;
                phase_err[e] += dp;
            }
        }
        count += curve.values.size();
    }
    std::cout << "element  mean|dA| (S)   mean|dphi| (deg)\n";
    for (int e = 0; e < 4; ++e) {
        std::printf("%-7s  %-13.6g  %-13.6g\n",
                    spectra::element_name(static_cast<spectra::Element>(e)),
                    amp_err[e] / static_cast<double>(count),
                    phase_err[e] / static_cast<double>(count));
    }

    if (!out_dir.empty()) {
        const fs::path dir = resolve_out(out_dir);
        fs::create_directories(dir);
        // dump one sample's original vs reconstructed amplitude/phase
        const std::size_t k =
            dump_sample < 0 ? 0 : static_cast<std::size_t>(dump_sample);
        if (k < indices.size()) {
            const auto& curve = dataset.curves[indices[k]];
            const auto latent = autonet::encode(ck.model, normalized[k], true);
            const auto rec = tensorize::unflatten(
                tensorize::denormalize(autonet::decode(ck.model, latent),
                                       ck.model.norm),
                dataset.grid);
            std::ofstream f(dir / "recon.csv");
            f.precision(17);
            f << "f,element,orig_mag,orig_phase,rec_mag,rec_phase\n";
            for (int e = 0; e < 4; ++e) {
                const auto oap = spectra::amplitude_phase(
                    curve, static_cast<spectra::Element>(e));
                const auto rap = spectra::amplitude_phase(
                    rec, static_cast<spectra::Element>(e));
                for (std::size_t t = 0; t < oap.size(); ++t) {
                    f << oap[t].freq << ','
                      << spectra::element_name(static_cast<spectra::Element>(e))
                      << ',' << oap[t].magnitude << ',' << oap[t].phase_deg << ','
                      << rap[t].magnitude << ',' << rap[t].phase_deg << '\n';
                }
            }
            man.output((dir / "recon.csv").string());
        }
        man.write(dir);
    }
    return 0;
}

// ---- encode / decode ----------------------------------------------------------

int cmd_encode(const std::string& checkpoint, const std::string& dataset_path,
               const std::string& out_dir) {
    Manifest man("encode");
    man.input(checkpoint);
    man.input(dataset_path);
    const auto ck = autonet::load_checkpoint(checkpoint);
    const auto dataset = spectra::read_dataset(dataset_path);
    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);
    std::ofstream f(dir / "latents.csv");
    f.precision(17);
    f << "sample,dim,value\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto h = autonet::encode(
            ck.model, tensorize::flatten(dataset.curves[i]), false);
        for (std::size_t d = 0; d < h.size(); ++d) {
            f << i << ',' << d << ',' << h[d] << '\n';
        }
    }
    man.output((dir / "latents.csv").string());
    man.write(dir);
    std::cout << "encoded " << dataset.size() << " samples -> "
              << (dir / "latents.csv").string() << "\n";
    return 0;
}

int cmd_decode(const std::string& checkpoint, const std::string& latents_path,
               const std::string& grid_from, double f_start, double f_step,
               const std::string& out_dir) {
    Manifest man("decode");
    man.input(checkpoint);
    man.input(latents_path);
    const auto ck = autonet::load_checkpoint(checkpoint);
    const std::size_t t_points = ck.model.arch.input_dim / 8;
    spectra::FrequencyGrid grid;
    if (!grid_from.empty()) {
        grid = spectra::read_dataset(grid_from).grid;
    } else {
        grid = spectra::make_frequency_grid(f_start, f_step,
                                            static_cast<std::uint32_t>(t_points));
    }
    if (grid.count != t_points) {
        throw std::invalid_argument("grid T does not match checkpoint input_dim/8");
    }

    const auto table = read_csv(latents_path);
    const int c_sample = table.col("sample");
    const int c_dim = table.col("dim");
    const int c_value = table.col("value");
    std::map<std::size_t, autonet::LatentVector> latents;
    for (const auto& row : table.rows) {
        const std::size_t s = std::stoul(row[c_sample]);
        const std::size_t d = std::stoul(row[c_dim]);
        auto& h = latents[s];
        if (h.size() <= d) h.resize(d + 1, 0.0);
        h[d] = std::stod(row[c_value]);
    }

    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);
    std::ofstream f(dir / "curves.csv");
    f.precision(17);
    f << "sample,f,element,real,imag\n";
    for (const auto& [s, h] : latents) {
        const auto flat = tensorize::denormalize(autonet::decode(ck.model, h),
                                                 ck.model.norm);
        const auto curve = tensorize::unflatten(flat, grid);
        for (std::size_t t = 0; t < curve.values.size(); ++t) {
            const auto& y = curve.values[t];
            const spectra::cplx* vals[4] = {&y.y11, &y.y12, &y.y21, &y.y22};
            for (int e = 0; e < 4; ++e) {
                f << s << ',' << grid.freq(static_cast<std::uint32_t>(t)) << ','
                  << spectra::element_name(static_cast<spectra::Element>(e)) << ','
                  << vals[e]->real() << ',' << vals[e]->imag() << '\n';
            }
        }
    }
    man.output((dir / "curves.csv").string());
    man.write(dir);
    std::cout << "decoded " << latents.size() << " latent vectors -> "
              << (dir / "curves.csv").string() << "\n";
    return 0;
}

// ---- tsne ---------------------------------------------------------------------

int cmd_tsne(const std::string& checkpoint, const std::string& dataset_path,
             const std::string& out_dir, double perplexity, std::size_t iters,
             std::uint64_t seed) {
    Manifest man("tsne");
    man.input(checkpoint);
    man.input(dataset_path);
    man.seed("tsne", seed);
    man.flag("perplexity", perplexity);
    man.flag("iterations", iters);

    const auto ck = autonet::load_checkpoint(checkpoint);
    const auto dataset = spectra::read_dataset(dataset_path);
    std::vector<autonet::LatentVector> latents;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        latents.push_back(autonet::encode(
            ck.model, tensorize::flatten(dataset.curves[i]), false));
    }

    latentmap::TsneConfig cfg;
    cfg.perplexity = perplexity;
    cfg.iterations = iters;
    cfg.seed = seed;
    const auto emb = latentmap::embed_groups(latents, cfg);

    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);
    latentmap::write_embedding_csv(emb.joint, emb.joint_labels, emb.joint_samples,
                                   (dir / "tsne_joint.csv").string());
    man.output((dir / "tsne_joint.csv").string());
    for (int e = 0; e < 4; ++e) {
        std::vector<int> labels(emb.per_element[e].size(), e);
        std::vector<std::size_t> samples(emb.per_element[e].size());
        std::iota(samples.begin(), samples.end(), 0);
        const std::string path =
            (dir / (std::string("tsne_") +
                    spectra::element_name(static_cast<spectra::Element>(e)) +
                    ".csv"))
                .string();
        latentmap::write_embedding_csv(emb.per_element[e], labels, samples, path);
        man.output(path);
    }
    man.write(dir);
    std::cout << "joint embedding silhouette over element labels: "
              << emb.joint_silhouette << "\n";
    return 0;
}

// ---- assemble --------------------------------------------------------------------

int cmd_assemble(const std::string& topology_path, const std::string& dataset_path,
                 const std::string& turbine_list, const std::string& out_dir) {
    Manifest man("assemble");
    man.input(topology_path);
    man.input(dataset_path);

    const auto topo = gridnet::read_topology(topology_path);
    const auto dataset = spectra::read_dataset(dataset_path);

    std::vector<std::size_t> sample_for_node;
    if (turbine_list.empty()) {
        for (std::size_t i = 0; i < topo.node_count; ++i) sample_for_node.push_back(i);
    } else {
        std::istringstream ss(turbine_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            sample_for_node.push_back(std::stoul(tok));
        }
    }
    if (sample_for_node.size() != topo.node_count) {
        throw std::invalid_argument("need one dataset sample per topology node");
    }

    std::vector<gridnet::TurbineBlock> turbines;
    for (std::size_t nidx = 0; nidx < topo.node_count; ++nidx) {
        if (sample_for_node[nidx] >= dataset.size()) {
            throw std::invalid_argument("sample index out of range");
        }
        turbines.push_back({nidx, dataset.curves[sample_for_node[nidx]]});
    }

    auto ynet = gridnet::assemble_ynet(topo, dataset.grid);
    auto ywt = gridnet::assemble_ywt(turbines, topo.node_count, dataset.grid);
    const auto model = gridnet::assemble_ynode(std::move(ywt), std::move(ynet),
                                               dataset.grid, topo.node_count);

    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);
    gridnet::write_matrix_csv(model.y_node, model.grid, (dir / "ynode.csv").string());
    gridnet::write_matrix_csv(model.y_wt, model.grid, (dir / "ywt.csv").string());
    gridnet::write_matrix_csv(model.y_net, model.grid, (dir / "ynet.csv").string());
    const auto sweep = gridnet::det_sweep(model);
    gridnet::write_det_csv(sweep, (dir / "det_sweep.csv").string());
    for (const char* name : {"ynode.csv", "ywt.csv", "ynet.csv", "det_sweep.csv"}) {
        man.output((dir / name).string());
    }
    man.write(dir);
    std::cout << "assembled " << 2 * topo.node_count << "x" << 2 * topo.node_count
              << " model over " << model.grid.count << " frequencies -> "
              << dir.string() << "\n";
    return 0;
}

// ---- simulate --------------------------------------------------------------------

int cmd_simulate(const std::string& checkpoint, const std::string& topology_path,
                 const std::string& out_dir, std::size_t ticks, double period_ms,
                 const std::string& transport, std::uint64_t seed,
                 double f_start, double f_step, bool export_all) {
    Manifest man("simulate");
    man.input(checkpoint);
    man.input(topology_path);
    man.seed("schedule", seed);
    man.flag("ticks", ticks);
    man.flag("period_ms", period_ms);
    man.flag("transport", transport);

    const auto ck = autonet::load_checkpoint(checkpoint);
    const auto topo = gridnet::read_topology(topology_path);
    const std::size_t t_points = ck.model.arch.input_dim / 8;

    farmlink::PipelineConfig cfg;
    cfg.schedule =
        farmlink::default_schedule(topo.node_count, ticks, period_ms, seed);
    cfg.grid = spectra::make_frequency_grid(f_start, f_step,
                                            static_cast<std::uint32_t>(t_points));
    cfg.topology = topo;
    cfg.transport = transport == "socket"
                        ? farmlink::PipelineConfig::TransportKind::Socket
                        : farmlink::PipelineConfig::TransportKind::InProcess;
    cfg.out_dir = resolve_out(out_dir).string();
    cfg.export_all_inmodels = export_all;

    const auto report = farmlink::run_pipeline(ck.model, cfg);

    std::size_t complete = 0;
    double worst = 0.0;
    for (const auto& tick : report.ticks) {
        if (!tick.complete) continue;
        ++complete;
        for (double e : tick.recon_errors) worst = std::max(worst, e);
    }
    std::cout << "ticks: " << report.ticks.size() << " (" << complete
              << " complete), frames: " << report.frames_received
              << ", rejected: " << report.frames_rejected
              << ", assembled models: " << report.assembled_models
              << ", worst recon error: " << worst << "\n";
    for (const auto& e : report.errors) std::cerr << "warning: " << e << "\n";
    man.write(cfg.out_dir);
    return 0;
}

// ---- plot ------------------------------------------------------------------------

int cmd_plot(const std::string& kind, const std::string& in_path,
             const std::string& out_path) {
    Manifest man("plot");
    man.input(in_path);
    man.flag("kind", kind);
    const fs::path out = resolve_out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    const auto table = read_csv(in_path);

    if (kind == "loss") {
        const int ce = table.col("epoch"), ctr = table.col("train_loss"),
                  cte = table.col("test_loss");
        svgplot::Series train{"train", {}, {}, false}, test{"test", {}, {}, false};
        for (const auto& r : table.rows) {
            train.x.push_back(std::stod(r[ce]));
            train.y.push_back(std::stod(r[ctr]));
            test.x.push_back(std::stod(r[ce]));
            test.y.push_back(std::stod(r[cte]));
        }
        svgplot::PlotSpec spec{"training loss", "epoch", "mean relative loss",
                               true, 900, 560};
        svgplot::write_svg({train, test}, spec, out.string());
    } else if (kind == "recon") {
        const int cf = table.col("f"), cel = table.col("element");
        const int com = table.col("orig_mag"), cop = table.col("orig_phase");
        const int crm = table.col("rec_mag"), crp = table.col("rec_phase");
        std::vector<svgplot::Panel> panels;
        for (const char* el : {"Y11", "Y12", "Y21", "Y22"}) {
            svgplot::Series om{"original", {}, {}, false},
                rm{"reconstructed", {}, {}, false}, op{"original", {}, {}, false},
                rp{"reconstructed", {}, {}, false};
            for (const auto& r : table.rows) {
                if (r[cel] != el) continue;
                const double f = std::stod(r[cf]);
                om.x.push_back(f);
                om.y.push_back(std::stod(r[com]));
                rm.x.push_back(f);
                rm.y.push_back(std::stod(r[crm]));
                op.x.push_back(f);
                op.y.push_back(std::stod(r[cop]));
                rp.x.push_back(f);
                rp.y.push_back(std::stod(r[crp]));
            }
            panels.push_back({{std::string(el) + " amplitude", "f (Hz)", "|Y| (S)",
                               false, 460, 320},
                              {om, rm}});
            panels.push_back({{std::string(el) + " phase", "f (Hz)", "deg", false,
                               460, 320},
                              {op, rp}});
        }
        svgplot::write_svg_grid(panels, 2, "original vs reconstructed",
                                out.string());
    } else if (kind == "tsne") {
        const int cl = table.col("element_label"), cx = table.col("x"),
                  cy = table.col("y");
        std::map<std::string, svgplot::Series> by_label;
        for (const auto& r : table.rows) {
            auto& s = by_label[r[cl]];
            s.label = r[cl];
            s.scatter = true;
            s.x.push_back(std::stod(r[cx]));
            s.y.push_back(std::stod(r[cy]));
        }
        std::vector<svgplot::Series> series;
        for (auto& [_, s] : by_label) series.push_back(std::move(s));
        svgplot::PlotSpec spec{"t-SNE embedding", "x", "y", false, 720, 720};
        svgplot::write_svg(series, spec, out.string());
    } else if (kind == "latent") {
        // accepts simulate latents (tick,turbine,dim,value) or encode latents
        // (sample,dim,value); plots the latest tick / all samples as curves
        const bool sim = !table.rows.empty() &&
                         std::find(table.header.begin(), table.header.end(),
                                   "tick") != table.header.end();
        std::map<std::string, svgplot::Series> by_key;
        if (sim) {
            const int ct = table.col("tick"), cw = table.col("turbine"),
                      cd = table.col("dim"), cv = table.col("value");
            long last_tick = 0;
            for (const auto& r : table.rows) {
                last_tick = std::max(last_tick, std::stol(r[ct]));
            }
            for (const auto& r : table.rows) {
                if (std::stol(r[ct]) != last_tick) continue;
                auto& s = by_key["turbine " + r[cw]];
                s.label = "turbine " + r[cw];
                s.x.push_back(std::stod(r[cd]));
                s.y.push_back(std::stod(r[cv]));
            }
        } else {
            const int cs = table.col("sample"), cd = table.col("dim"),
                      cv = table.col("value");
            for (const auto& r : table.rows) {
                auto& s = by_key["sample " + r[cs]];
                s.label = "sample " + r[cs];
                s.x.push_back(std::stod(r[cd]));
                s.y.push_back(std::stod(r[cv]));
            }
        }
        std::vector<svgplot::Series> series;
        for (auto& [_, s] : by_key) series.push_back(std::move(s));
        svgplot::PlotSpec spec{"latent vectors", "dimension", "value", false, 900,
                               560};
        svgplot::write_svg(series, spec, out.string());
    } else {
        throw std::invalid_argument("unknown plot kind '" + kind + "'");
    }
    man.output(out.string());
    man.write(out.has_parent_path() ? out.parent_path() : fs::path("."));
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"impedance encoding-decoding pipeline for wind-farm "
                 "admittance models"};
    app.require_subcommand(1);

    // gen-dataset
    std::string gd_out = "dataset.imps";
    std::size_t gd_n = 100;
    std::uint64_t gd_seed = 7;
    bool gd_paper = false;
    double gd_fstart = 1.0, gd_fstep = 5.0;
    std::uint32_t gd_t = 500;
    int gd_csv_sample = -1;
    std::string gd_csv;
    auto* gen = app.add_subcommand("gen-dataset",
                                   "synthesize a dq admittance dataset");
    gen->add_option("--out", gd_out, "output .imps path");
    gen->add_option("--n", gd_n, "sample count");
    gen->add_option("--seed", gd_seed, "dataset seed");
    gen->add_flag("--paper-shape", gd_paper, "T=2500, 1..2500 Hz step 1");
    gen->add_option("--f-start", gd_fstart, "first frequency (Hz)");
    gen->add_option("--f-step", gd_fstep, "frequency step (Hz)");
    gen->add_option("--t", gd_t, "frequency point count");
    gen->add_option("--csv-sample", gd_csv_sample, "sample index for CSV export");
    gen->add_option("--csv", gd_csv, "CSV export path (f,element,real,imag)");
    spectra::OpRanges gd_ranges;
    gen->add_option("--p-min", gd_ranges.p_min, "min active power (MW)");
    gen->add_option("--p-max", gd_ranges.p_max, "max active power (MW)");
    gen->add_option("--pf-min", gd_ranges.pf_min, "min power factor");
    gen->add_option("--pf-max", gd_ranges.pf_max, "max power factor");
    gen->add_option("--u-min", gd_ranges.u_min, "min PCC voltage (pu)");
    gen->add_option("--u-max", gd_ranges.u_max, "max PCC voltage (pu)");

    // train
    std::string tr_dataset, tr_out = "train_out", tr_arch = "monolithic";
    std::size_t tr_epochs = 200, tr_batch = 10, tr_train = 0, tr_test = 0,
                tr_ckevery = 1;
    double tr_lr = 1e-4;
    std::uint64_t tr_seed = 7;
    bool tr_paper = false, tr_nocheckpoints = false;
    auto* tr = app.add_subcommand("train", "train the autoencoder");
    tr->add_option("--dataset", tr_dataset, "input .imps dataset")->required();
    tr->add_option("--out", tr_out, "output directory");
    tr->add_option("--arch", tr_arch, "monolithic|grouped")
        ->check(CLI::IsMember({"monolithic", "grouped"}));
    tr->add_option("--epochs", tr_epochs, "epoch count (500 with --paper-shape)");
    tr->add_option("--lr", tr_lr, "Adam learning rate");
    tr->add_option("--batch", tr_batch, "batch size");
    tr->add_option("--seed", tr_seed, "training seed");
    tr->add_option("--train-count", tr_train, "training split size (default 90%)");
    tr->add_option("--test-count", tr_test, "test split size (default 10%)");
    tr->add_flag("--paper-shape", tr_paper, "20000->2048->512->64, 500 epochs");
    tr->add_option("--checkpoint-every", tr_ckevery, "epochs between checkpoints");
    tr->add_flag("--no-epoch-checkpoints", tr_nocheckpoints,
                 "skip per-epoch checkpoint files");

    // eval
    std::string ev_ck, ev_dataset, ev_split = "test", ev_out;
    std::uint64_t ev_seed = 7;
    std::size_t ev_train = 0, ev_test = 0;
    int ev_dump = 0;
    auto* ev = app.add_subcommand("eval", "evaluate reconstruction quality");
    ev->add_option("--checkpoint", ev_ck, "model checkpoint")->required();
    ev->add_option("--dataset", ev_dataset, "input dataset")->required();
    ev->add_option("--split", ev_split, "train|test|all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    ev->add_option("--seed", ev_seed, "split seed used at training time");
    ev->add_option("--train-count", ev_train, "training split size");
    ev->add_option("--test-count", ev_test, "test split size");
    ev->add_option("--out", ev_out, "output directory for recon.csv");
    ev->add_option("--dump-sample", ev_dump, "split-local sample index to dump");

    // encode / decode
    std::string en_ck, en_dataset, en_out = "encode_out";
    auto* en = app.add_subcommand("encode", "encode a dataset to latent vectors");
    en->add_option("--checkpoint", en_ck, "model checkpoint")->required();
    en->add_option("--dataset", en_dataset, "input dataset")->required();
    en->add_option("--out", en_out, "output directory");

    std::string de_ck, de_latents, de_grid_from, de_out = "decode_out";
    double de_fstart = 1.0, de_fstep = 5.0;
    auto* de = app.add_subcommand("decode", "decode latent vectors to curves");
    de->add_option("--checkpoint", de_ck, "model checkpoint")->required();
    de->add_option("--latents", de_latents, "latents.csv from encode")->required();
    de->add_option("--grid-from", de_grid_from, "dataset to copy the grid from");
    de->add_option("--f-start", de_fstart, "first frequency (Hz)");
    de->add_option("--f-step", de_fstep, "frequency step (Hz)");
    de->add_option("--out", de_out, "output directory");

    // tsne
    std::string ts_ck, ts_dataset, ts_out = "tsne_out";
    double ts_perp = 30.0;
    std::size_t ts_iters = 1000;
    std::uint64_t ts_seed = 1;
    auto* ts = app.add_subcommand("tsne", "embed latent semantic groups in 2D");
    ts->add_option("--checkpoint", ts_ck, "model checkpoint")->required();
    ts->add_option("--dataset", ts_dataset, "input dataset")->required();
    ts->add_option("--out", ts_out, "output directory");
    ts->add_option("--perplexity", ts_perp, "t-SNE perplexity");
    ts->add_option("--iters", ts_iters, "gradient-descent iterations");
    ts->add_option("--seed", ts_seed, "layout seed");

    // assemble
    std::string as_topo, as_dataset, as_turbines, as_out = "assemble_out";
    auto* as = app.add_subcommand("assemble",
                                  "assemble the impedance-network model");
    as->add_option("--topology", as_topo, "topology file")->required();
    as->add_option("--dataset", as_dataset, "dataset providing turbine curves")
        ->required();
    as->add_option("--turbines", as_turbines,
                   "comma list of sample indices, one per node");
    as->add_option("--out", as_out, "output directory");

    // simulate
    std::string si_ck, si_topo, si_out = "simulate_out", si_transport = "inproc";
    std::size_t si_ticks = 10;
    double si_period = 100.0, si_fstart = 1.0, si_fstep = 5.0;
    std::uint64_t si_seed = 11;
    bool si_export_all = false;
    auto* si = app.add_subcommand("simulate",
                                  "run the turbine-agents -> aggregator pipeline");
    si->add_option("--checkpoint", si_ck, "model checkpoint")->required();
    si->add_option("--topology", si_topo, "topology file")->required();
    si->add_option("--out", si_out, "output directory");
    si->add_option("--ticks", si_ticks, "tick count");
    si->add_option("--period-ms", si_period, "tick period (ms)");
    si->add_option("--transport", si_transport, "inproc|socket")
        ->check(CLI::IsMember({"inproc", "socket"}));
    si->add_option("--seed", si_seed, "schedule seed");
    si->add_option("--f-start", si_fstart, "first frequency (Hz)");
    si->add_option("--f-step", si_fstep, "frequency step (Hz)");
    si->add_flag("--export-all-inmodels", si_export_all,
                 "export Y_node CSV for every tick");

    // plot
    std::string pl_kind, pl_in, pl_out = "plot.svg";
    auto* pl = app.add_subcommand("plot", "emit an SVG figure from a CSV");
    pl->add_option("--kind", pl_kind, "loss|recon|tsne|latent")
        ->required()
        ->check(CLI::IsMember({"loss", "recon", "tsne", "latent"}));
    pl->add_option("--in", pl_in, "input CSV")->required();
    pl->add_option("--out", pl_out, "output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_dataset(gd_out, gd_n, gd_seed, gd_paper, gd_fstart,
                                   gd_fstep, gd_t, gd_csv_sample, gd_csv,
                                   gd_ranges);
        }
        if (tr->parsed()) {
            if (tr_paper && !tr->count("--epochs")) tr_epochs = 500;
            return cmd_train(tr_dataset, tr_out, tr_arch, tr_epochs, tr_lr,
                             tr_batch, tr_seed, tr_train, tr_test, tr_paper,
                             tr_ckevery, tr_nocheckpoints);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_ck, ev_dataset, ev_split, ev_seed, ev_train,
                            ev_test, ev_out, ev_dump);
        }
        if (en->parsed()) return cmd_encode(en_ck, en_dataset, en_out);
        if (de->parsed()) {
            return cmd_decode(de_ck, de_latents, de_grid_from, de_fstart,
                              de_fstep, de_out);
        }
        if (ts->parsed()) {
            return cmd_tsne(ts_ck, ts_dataset, ts_out, ts_perp, ts_iters, ts_seed);
        }
        if (as->parsed()) {
            return cmd_assemble(as_topo, as_dataset, as_turbines, as_out);
        }
        if (si->parsed()) {
            return cmd_simulate(si_ck, si_topo, si_out, si_ticks, si_period,
                                si_transport, si_seed, si_fstart, si_fstep,
                                si_export_all);
        }
        if (pl->parsed()) return cmd_plot(pl_kind, pl_in, pl_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
