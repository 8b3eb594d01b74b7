#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <cstring>

#include "impnet/farmlink.hpp"
#include "impnet/rng.hpp"

using namespace impnet;
using farmlink::LatentFrame;

namespace {

LatentFrame sample_frame(std::size_t latent_len = 64) {
    LatentFrame f;
    f.turbine_id = 3;
    f.timestamp_ms = 1234567890123ULL;
    f.p_active_mw = 1.25f;
    f.power_factor = 0.97f;
    f.u_pcc = 1.01f;
    f.latent.resize(latent_len);
    Rng rng(9);
    for (float& v : f.latent) v = static_cast<float>(rng.normal());
    return f;
}

autonet::AutoencoderModel tiny_model(std::uint64_t seed = 5) {
    const auto arch = autonet::default_arch(autonet::ArchMode::Monolithic,
                                            8 * 16, 8, {32});
    return autonet::init_model(arch, {0.0, 1.0}, seed);
}

spectra::FrequencyGrid tiny_grid() {
    return spectra::make_frequency_grid(1.0, 150.0, 16);
}

gridnet::Topology two_node_topology() {
    gridnet::Topology topo;
    topo.node_count = 2;
    topo.branches = {
        {0, gridnet::kGround, gridnet::BranchKind::GridThevenin, 0.01, 1e-4, 0.0, 1.0},
        {0, 1, gridnet::BranchKind::SeriesRl, 0.05, 2e-4, 0.0, 1.0},
    };
    return topo;
}

farmlink::PipelineConfig tiny_pipeline_config(
    const gridnet::Topology& topo, std::size_t ticks,
    farmlink::PipelineConfig::TransportKind kind) {
    farmlink::PipelineConfig cfg;
    cfg.schedule = farmlink::default_schedule(topo.node_count, ticks, 100.0, 31);
    cfg.grid = tiny_grid();
    cfg.topology = topo;
    cfg.transport = kind;
    return cfg;
}

}  // namespace

TEST_CASE("crc32 reference vector") {
    const char* msg = "123456789";
    CHECK(farmlink::crc32(reinterpret_cast<const std::uint8_t*>(msg), 9) ==
          0xCBF43926u);
    CHECK(farmlink::crc32(nullptr, 0) == 0x00000000u);
}

TEST_CASE("frame wire size and round-trip") {
    const auto f = sample_frame();
    const auto bytes = farmlink::encode_frame(f);
    CHECK(bytes.size() == 289);
    CHECK(farmlink::frame_wire_size(64) == 289);

    std::string err;
    const auto back = farmlink::decode_frame(bytes.data(), bytes.size(), &err);
    REQUIRE(back.has_value());
    CHECK(*back == f);

    // extreme float payloads survive exactly
    auto x = sample_frame();
    x.latent[0] = FLT_MAX;
    x.latent[1] = -FLT_MAX;
    x.latent[2] = FLT_MIN;
    x.latent[3] = -0.0f;
    x.p_active_mw = FLT_MAX;
    const auto xb = farmlink::encode_frame(x);
    const auto xr = farmlink::decode_frame(xb.data(), xb.size(), &err);
    REQUIRE(xr.has_value());
    CHECK(*xr == x);

    // other latent lengths use the same layout
    const auto small = sample_frame(32);
    const auto sb = farmlink::encode_frame(small);
    CHECK(sb.size() == farmlink::frame_wire_size(32));
    CHECK(*farmlink::decode_frame(sb.data(), sb.size(), &err) == small);
}

TEST_CASE("every single-bit corruption of a frame is rejected") {
    const auto bytes = farmlink::encode_frame(sample_frame());
    std::string err;
    std::size_t rejected = 0;
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
        auto corrupted = bytes;
        corrupted[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        if (!farmlink::decode_frame(corrupted.data(), corrupted.size(), &err)) {
            ++rejected;
        }
    }
    CHECK(rejected == bytes.size() * 8);
}

TEST_CASE("frame rejection reasons") {
    const auto bytes = farmlink::encode_frame(sample_frame());
    std::string err;

    auto bad_magic = bytes;
    std::memcpy(bad_magic.data(), "XENC", 4);
    CHECK_FALSE(farmlink::decode_frame(bad_magic.data(), bad_magic.size(), &err));
    CHECK(err.find("magic") != std::string::npos);

    CHECK_FALSE(farmlink::decode_frame(bytes.data(), 288, &err));
    CHECK(err.find("length") != std::string::npos);

    CHECK_FALSE(farmlink::decode_frame(bytes.data(), 5, &err));

    auto bad_crc = bytes;
    bad_crc[100] ^= 0xFF;
    CHECK_FALSE(farmlink::decode_frame(bad_crc.data(), bad_crc.size(), &err));
    CHECK(err.find("crc") != std::string::npos);
    CHECK(err.find("computed") != std::string::npos);
}

TEST_CASE("piecewise-linear trajectories clamp and interpolate") {
    farmlink::Trajectory tr;
    tr.knots = {{0.0, 1.0}, {100.0, 2.0}, {300.0, 0.0}};
    CHECK(tr.at(-50.0) == 1.0);
    CHECK(tr.at(0.0) == 1.0);
    CHECK(tr.at(50.0) == doctest::Approx(1.5));
    CHECK(tr.at(200.0) == doctest::Approx(1.0));
    CHECK(tr.at(1000.0) == 0.0);

    const auto sched = farmlink::default_schedule(3, 10, 100.0, 77);
    CHECK(sched.turbines.size() == 3);
    const spectra::OpRanges ranges;
    for (std::size_t wt = 0; wt < 3; ++wt) {
        for (std::size_t tick = 0; tick < 10; ++tick) {
            const auto op = sched.op_at(wt, tick);
            CHECK(op.p_active_mw >= ranges.p_min);
            CHECK(op.p_active_mw <= ranges.p_max);
            CHECK(op.power_factor >= ranges.pf_min);
            CHECK(op.power_factor <= ranges.pf_max);
        }
    }
}

TEST_CASE("agent tick is deterministic and the pipeline is transparent") {
    const auto model = tiny_model();
    const spectra::VscParams params;
    const auto grid = tiny_grid();
    const spectra::OperatingPoint op{1.0, 0.97, 1.0};

    const auto a = farmlink::agent_tick(model, params, grid, 2, op, 500);
    const auto b = farmlink::agent_tick(model, params, grid, 2, op, 500);
    CHECK(a.frame == b.frame);

    // the frame latent equals quantize32(encode(normalize(flatten(curve))))
    const auto curve = spectra::synth_vsc_admittance(params, op, grid);
    const auto norm =
        tensorize::normalize(tensorize::flatten(curve), model.norm);
    const auto latent = autonet::encode(model, norm, true);
    REQUIRE(a.frame.latent.size() == latent.size());
    for (std::size_t i = 0; i < latent.size(); ++i) {
        CHECK(a.frame.latent[i] == static_cast<float>(latent[i]));
    }
    CHECK(a.normalized_reference == norm);
}

TEST_CASE("in-process pipeline assembles one model per complete tick") {
    const auto model = tiny_model();
    const auto topo = two_node_topology();
    auto cfg = tiny_pipeline_config(
        topo, 4, farmlink::PipelineConfig::TransportKind::InProcess);

    const auto report = farmlink::run_pipeline(model, cfg);
    CHECK(report.frames_received == 8);
    CHECK(report.frames_rejected == 0);
    REQUIRE(report.ticks.size() == 4);
    CHECK(report.assembled_models == 4);
    CHECK(report.has_model);
    CHECK(report.last_model.y_node[0].rows() == 4);

    std::uint64_t prev = 0;
    for (std::size_t t = 0; t < report.ticks.size(); ++t) {
        const auto& tick = report.ticks[t];
        CHECK(tick.complete);
        if (t > 0) CHECK(tick.timestamp_ms > prev);
        prev = tick.timestamp_ms;
        REQUIRE(tick.recon_errors.size() == 2);

        // farm-side reconstruction equals the transport-free computation
        for (std::size_t wt = 0; wt < 2; ++wt) {
            const auto op = cfg.schedule.op_at(wt, t);
            const auto direct = farmlink::agent_tick(
                model, cfg.params, cfg.grid, static_cast<std::uint16_t>(wt), op,
                tick.timestamp_ms);
            autonet::LatentVector h(direct.frame.latent.begin(),
                                    direct.frame.latent.end());
            const double expected = autonet::recon_loss(
                autonet::decode(model, h), direct.normalized_reference);
            CHECK(tick.recon_errors[wt] == expected);
        }
    }
}

TEST_CASE("socket and in-process transports produce identical latents") {
    const auto model = tiny_model();
    const auto topo = two_node_topology();

    auto c1 = tiny_pipeline_config(
        topo, 3, farmlink::PipelineConfig::TransportKind::InProcess);
    auto c2 = tiny_pipeline_config(
        topo, 3, farmlink::PipelineConfig::TransportKind::Socket);

    const auto r1 = farmlink::run_pipeline(model, c1);
    const auto r2 = farmlink::run_pipeline(model, c2);
    REQUIRE(r1.ticks.size() == r2.ticks.size());
    for (std::size_t t = 0; t < r1.ticks.size(); ++t) {
        CHECK(r1.ticks[t].complete == r2.ticks[t].complete);
        CHECK(r1.ticks[t].latents == r2.ticks[t].latents);
        CHECK(r1.ticks[t].recon_errors == r2.ticks[t].recon_errors);
    }
}

TEST_CASE("a failing turbine marks only its tick incomplete") {
    const auto model = tiny_model();
    const auto topo = two_node_topology();
    auto cfg = tiny_pipeline_config(
        topo, 6, farmlink::PipelineConfig::TransportKind::InProcess);
    // turbine 1's power factor leaves the valid range around tick 2, so
    // synthesis throws and the agent skips that tick
    cfg.schedule.turbines[1].power_factor.knots = {
        {0.0, 0.95}, {150.0, 0.95}, {200.0, 1.4}, {250.0, 0.95}, {500.0, 0.95}};

    const auto report = farmlink::run_pipeline(model, cfg);
    CHECK(report.frames_received == 11);
    std::size_t complete = 0;
    for (const auto& tick : report.ticks) complete += tick.complete ? 1 : 0;
    CHECK(complete == 5);
    CHECK(report.assembled_models == 5);
    CHECK_FALSE(report.errors.empty());

    // completed ticks stay monotone in timestamp
    std::uint64_t prev = 0;
    bool first = true;
    for (const auto& tick : report.ticks) {
        if (!tick.complete) continue;
        if (!first) CHECK(tick.timestamp_ms > prev);
        prev = tick.timestamp_ms;
        first = false;
    }
}

TEST_CASE("zero-tick schedule exits cleanly with an empty report") {
    const auto model = tiny_model();
    const auto topo = two_node_topology();
    auto cfg = tiny_pipeline_config(
        topo, 0, farmlink::PipelineConfig::TransportKind::InProcess);
    const auto report = farmlink::run_pipeline(model, cfg);
    CHECK(report.ticks.empty());
    CHECK(report.frames_received == 0);
    CHECK_FALSE(report.has_model);
}

TEST_CASE("byte ratio of a latent frame vs the raw curve") {
    // 289 frame bytes against 20000 doubles; 312.5x by value count
    const std::size_t frame_bytes = farmlink::frame_wire_size(64);
    const std::size_t raw_bytes = 20000 * sizeof(double);
    CHECK(frame_bytes == 289);
    CHECK(raw_bytes / frame_bytes == 553);
    CHECK(20000.0 / 64.0 == doctest::Approx(312.5));
}
