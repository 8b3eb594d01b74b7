#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "impnet/autonet.hpp"
#include "impnet/gridnet.hpp"

namespace impnet::farmlink {

// CRC-32, IEEE 802.3 polynomial, reflected, init 0xFFFFFFFF, final xor
// 0xFFFFFFFF. crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

// One latent upload. latent values travel as 32-bit floats.
struct LatentFrame {
    std::uint16_t turbine_id = 0;
    std::uint64_t timestamp_ms = 0;
    float p_active_mw = 0.0f;
    float power_factor = 1.0f;
    float u_pcc = 1.0f;
    std::vector<float> latent;
    bool operator==(const LatentFrame&) const = default;
};

// Wire size for a given latent length: fixed header + 4 bytes per value.
constexpr std::size_t frame_wire_size(std::size_t latent_len) {
    return 4 + 1 + 2 + 8 + 4 * 3 + 2 + 4 * latent_len + 4;
}
static_assert(frame_wire_size(64) == 289);

// "IENC" frame, big-endian (network order):
//   magic "IENC" | version u8=1 | turbine_id u16 | timestamp_ms u64 |
//   P f32 | cosphi f32 | u_pcc f32 | latent_len u16 | latent f32[] | crc u32
// The CRC covers every preceding byte.
std::vector<std::uint8_t> encode_frame(const LatentFrame& frame);

// Returns the frame, or nullopt with a reason; rejections are non-fatal.
std::optional<LatentFrame> decode_frame(const std::uint8_t* data,
                                        std::size_t len, std::string* error);

// Piecewise-linear trajectory over tick time; clamped at the ends.
struct Trajectory {
    std::vector<std::pair<double, double>> knots;  // (time_ms, value)
    double at(double time_ms) const;
};

struct TurbineSchedule {
    Trajectory p_active_mw;
    Trajectory power_factor;
    Trajectory u_pcc;
};

struct SimSchedule {
    double tick_period_ms = 100.0;
    std::size_t tick_count = 10;
    std::vector<TurbineSchedule> turbines;

    spectra::OperatingPoint op_at(std::size_t turbine, std::size_t tick) const;
};

// Deterministic default schedule: per-turbine ramps/sine shapes inside the
// generator's documented operating ranges.
SimSchedule default_schedule(std::size_t turbine_count, std::size_t ticks,
                             double period_ms, std::uint64_t seed);

// ---- transport -------------------------------------------------------------

// Byte-frame sink/source pair. Implementations: in-process queue and
// localhost TCP stream.
class FrameSink {
public:
    virtual ~FrameSink() = default;
    virtual void send(const std::vector<std::uint8_t>& frame_bytes) = 0;
    virtual void close() = 0;
};

class FrameSource {
public:
    virtual ~FrameSource() = default;
    // Blocks; empty optional means all producers closed.
    virtual std::optional<std::vector<std::uint8_t>> receive() = 0;
};

struct Transport {
    // shutdown declared first: it owns transport internals (reader threads)
    // and must outlive sinks/source so teardown cannot deadlock.
    std::function<void()> shutdown;
    std::vector<std::unique_ptr<FrameSink>> sinks;  // one per turbine
    std::unique_ptr<FrameSource> source;
};

Transport make_inprocess_transport(std::size_t producer_count);
Transport make_socket_transport(std::size_t producer_count);

// ---- agents and aggregator ----------------------------------------------------

// Per-tick work of one turbine-side agent: synthesize the curve at the tick's
// operating point, flatten + normalize with the model's stats, encode,
// downcast to f32, frame. Returns the frame and the normalized reference
// vector (simulation-side ground truth).
struct AgentTickOutput {
    LatentFrame frame;
    tensorize::FlatSample normalized_reference;
};

AgentTickOutput agent_tick(const autonet::AutoencoderModel& model,
                           const spectra::VscParams& params,
                           const spectra::FrequencyGrid& grid,
                           std::uint16_t turbine_id,
                           const spectra::OperatingPoint& op,
                           std::uint64_t timestamp_ms);

struct TickReport {
    std::uint64_t timestamp_ms = 0;
    bool complete = false;
    std::vector<double> recon_errors;  // per turbine, normalized space
    std::vector<std::vector<float>> latents;  // per turbine
};

struct RunReport {
    std::vector<TickReport> ticks;
    std::size_t frames_received = 0;
    std::size_t frames_rejected = 0;
    std::size_t assembled_models = 0;
    gridnet::InModel last_model;  // model of the last complete tick
    bool has_model = false;
    std::vector<std::string> errors;
};

struct PipelineConfig {
    SimSchedule schedule;
    spectra::VscParams params;
    spectra::FrequencyGrid grid;
    gridnet::Topology topology;
    enum class TransportKind { InProcess, Socket } transport =
        TransportKind::InProcess;
    double straggler_wait_ticks = 3.0;  // skip a tick after this many periods
    std::string out_dir;  // empty: no CSV logs
    bool export_all_inmodels = false;
};

// Spawns one thread per agent plus the aggregator over the chosen
// transport; assembles Y_node per complete tick.
RunReport run_pipeline(const autonet::AutoencoderModel& model,
                       const PipelineConfig& config);

}  // namespace impnet::farmlink
