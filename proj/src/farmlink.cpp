#include "impnet/farmlink.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "impnet/linalg.hpp"
#include "impnet/rng.hpp"
#include "impnet/tensorize.hpp"

namespace impnet::farmlink {

// ---- CRC-32 -----------------------------------------------------------------

namespace {

const std::uint32_t* crc_table() {
    static const auto table = [] {
        static std::uint32_t t[256];
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
            }
            t[i] = c;
        }
        return t;
    }();
    return table;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    const std::uint32_t* t = crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        c = t[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

// ---- frame codec (big-endian) --------------------------------------------------

namespace {

void put_u16be(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void put_u32be(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void put_u64be(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) {
        b.push_back(static_cast<std::uint8_t>(v >> s));
    }
}

void put_f32be(std::vector<std::uint8_t>& b, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32be(b, bits);
}

std::uint16_t get_u16be(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t get_u32be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) |
           static_cast<std::uint32_t>(p[3]);
}

std::uint64_t get_u64be(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

float get_f32be(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32be(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr std::size_t kHeaderSize = 4 + 1 + 2 + 8 + 12 + 2;  // through latent_len

}  // namespace

std::vector<std::uint8_t> encode_frame(const LatentFrame& frame) {
    if (frame.latent.size() > 0xFFFF) {
        throw std::invalid_argument("farmlink: latent too long for a frame");
    }
    std::vector<std::uint8_t> b;
    b.reserve(frame_wire_size(frame.latent.size()));
    const char magic[4] = {'I', 'E', 'N', 'C'};
    b.insert(b.end(), magic, magic + 4);
    b.push_back(1);  // version
    put_u16be(b, frame.turbine_id);
    put_u64be(b, frame.timestamp_ms);
    put_f32be(b, frame.p_active_mw);
    put_f32be(b, frame.power_factor);
    put_f32be(b, frame.u_pcc);
    put_u16be(b, static_cast<std::uint16_t>(frame.latent.size()));
    for (float v : frame.latent) put_f32be(b, v);
    put_u32be(b, crc32(b.data(), b.size()));
    return b;
}

std::optional<LatentFrame> decode_frame(const std::uint8_t* data,
                                        std::size_t len, std::string* error) {
    auto reject = [&](const std::string& why) -> std::optional<LatentFrame> {
        if (error) *error = why;
        return std::nullopt;
    };
    if (len < 13) return reject("frame shorter than minimal header (13 bytes)");
    if (std::memcmp(data, "IENC", 4) != 0) return reject("bad magic");
    if (data[4] != 1) {
        return reject("unsupported version " + std::to_string(data[4]));
    }
    if (len < kHeaderSize) {
        return reject("truncated header: have " + std::to_string(len) +
                      ", need " + std::to_string(kHeaderSize));
    }
    const std::uint16_t latent_len = get_u16be(data + kHeaderSize - 2);
    const std::size_t expect = frame_wire_size(latent_len);
    if (len != expect) {
        return reject("length mismatch: have " + std::to_string(len) +
                      ", expected " + std::to_string(expect) + " for latent_len " +
                      std::to_string(latent_len));
    }
    const std::uint32_t stored = get_u32be(data + len - 4);
    const std::uint32_t computed = crc32(data, len - 4);
    if (stored != computed) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "crc mismatch: computed %08X, stored %08X",
                      computed, stored);
        return reject(buf);
    }
    LatentFrame f;
    f.turbine_id = get_u16be(data + 5);
    f.timestamp_ms = get_u64be(data + 7);
    f.p_active_mw = get_f32be(data + 15);
    f.power_factor = get_f32be(data + 19);
    f.u_pcc = get_f32be(data + 23);
    f.latent.resize(latent_len);
    for (std::size_t i = 0; i < latent_len; ++i) {
        f.latent[i] = get_f32be(data + kHeaderSize + 4 * i);
    }
    return f;
}

// ---- schedule -------------------------------------------------------------------

double Trajectory::at(double time_ms) const {
    if (knots.empty()) throw std::logic_error("farmlink: empty trajectory");
    if (time_ms <= knots.front().first) return knots.front().second;
    if (time_ms >= knots.back().first) return knots.back().second;
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (time_ms <= knots[k].first) {
            const auto [t0, v0] = knots[k - 1];
            const auto [t1, v1] = knots[k];
            const double w = (time_ms - t0) / (t1 - t0);
            return v0 + w * (v1 - v0);
        }
    }
    return knots.back().second;
}

spectra::OperatingPoint SimSchedule::op_at(std::size_t turbine,
                                           std::size_t tick) const {
    const double t = static_cast<double>(tick) * tick_period_ms;
    const TurbineSchedule& s = turbines.at(turbine);
    return {s.p_active_mw.at(t), s.power_factor.at(t), s.u_pcc.at(t)};
}

SimSchedule default_schedule(std::size_t turbine_count, std::size_t ticks,
                             double period_ms, std::uint64_t seed) {
    SimSchedule sched;
    sched.tick_period_ms = period_ms;
    sched.tick_count = ticks;
    const double horizon = period_ms * static_cast<double>(std::max<std::size_t>(ticks, 1));
    const spectra::OpRanges ranges;
    for (std::size_t i = 0; i < turbine_count; ++i) {
        Rng rng(mix_seed(seed, i + 101));
        TurbineSchedule ts;
        auto ramp = [&](double lo, double hi) {
            // 4-knot piecewise-linear profile inside [lo, hi]
            Trajectory tr;
            for (int k = 0; k < 4; ++k) {
                tr.knots.emplace_back(horizon * k / 3.0, rng.uniform(lo, hi));
            }
            return tr;
        };
        ts.p_active_mw = ramp(ranges.p_min, ranges.p_max);
        ts.power_factor = ramp(ranges.pf_min, ranges.pf_max);
        ts.u_pcc = ramp(ranges.u_min, ranges.u_max);
        sched.turbines.push_back(std::move(ts));
    }
    return sched;
}

// ---- transports ------------------------------------------------------------------

namespace {

// Multi-producer single-consumer byte-frame queue.
class ByteQueue {
public:
    explicit ByteQueue(std::size_t producers) : open_(producers) {}

    void push(std::vector<std::uint8_t> frame) {
        {
            std::lock_guard lock(mu_);
            q_.push_back(std::move(frame));
        }
        cv_.notify_one();
    }

    void producer_done() {
        {
            std::lock_guard lock(mu_);
            --open_;
        }
        cv_.notify_all();
    }

    std::optional<std::vector<std::uint8_t>> pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !q_.empty() || open_ == 0; });
        if (q_.empty()) return std::nullopt;
        auto f = std::move(q_.front());
        q_.pop_front();
        return f;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::vector<std::uint8_t>> q_;
    std::size_t open_;
};

class QueueSink final : public FrameSink {
public:
    explicit QueueSink(std::shared_ptr<ByteQueue> q) : q_(std::move(q)) {}
    void send(const std::vector<std::uint8_t>& frame) override { q_->push(frame); }
    void close() override {
        if (!closed_.exchange(true)) q_->producer_done();
    }
    ~QueueSink() override { close(); }

private:
    std::shared_ptr<ByteQueue> q_;
    std::atomic<bool> closed_{false};
};

class QueueSource final : public FrameSource {
public:
    explicit QueueSource(std::shared_ptr<ByteQueue> q) : q_(std::move(q)) {}
    std::optional<std::vector<std::uint8_t>> receive() override { return q_->pop(); }

private:
    std::shared_ptr<ByteQueue> q_;
};

[[noreturn]] void throw_errno(const std::string& what) {
    throw std::runtime_error("farmlink: " + what + ": " +
                             std::string(std::strerror(errno)));
}

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r <= 0) return false;
        got += static_cast<std::size_t>(r);
    }
    return true;
}

void write_all(int fd, const std::uint8_t* buf, std::size_t n) {
    std::size_t sent = 0;
    int retries = 0;
    while (sent < n) {
        const ssize_t r = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if ((errno == EINTR || errno == EAGAIN) && retries++ < 64) continue;
            throw_errno("send");
        }
        sent += static_cast<std::size_t>(r);
    }
}

class SocketSink final : public FrameSink {
public:
    explicit SocketSink(int fd) : fd_(fd) {}
    void send(const std::vector<std::uint8_t>& frame) override {
        write_all(fd_, frame.data(), frame.size());
    }
    void close() override {
        int fd = fd_.exchange(-1);
        if (fd >= 0) ::close(fd);
    }
    ~SocketSink() override { close(); }

private:
    std::atomic<int> fd_;
};

// Owns the listener, the per-connection reader threads and the queue they
// feed; stream framing uses the declared latent_len (frames are
// length-delimited by construction).
struct SocketHub {
    std::shared_ptr<ByteQueue> queue;
    std::vector<std::thread> readers;
    int listen_fd = -1;

    ~SocketHub() {
        for (auto& t : readers) {
            if (t.joinable()) t.join();
        }
        if (listen_fd >= 0) ::close(listen_fd);
    }
};

void reader_loop(int fd, ByteQueue& q) {
    for (;;) {
        std::vector<std::uint8_t> frame(kHeaderSize);
        if (!read_exact(fd, frame.data(), kHeaderSize)) break;
        const std::uint16_t latent_len = get_u16be(frame.data() + kHeaderSize - 2);
        const std::size_t rest = 4 * static_cast<std::size_t>(latent_len) + 4;
        frame.resize(kHeaderSize + rest);
        if (!read_exact(fd, frame.data() + kHeaderSize, rest)) break;
        q.push(std::move(frame));
    }
    ::close(fd);
    q.producer_done();
}

}  // namespace

Transport make_inprocess_transport(std::size_t producer_count) {
    auto q = std::make_shared<ByteQueue>(producer_count);
    Transport t;
    for (std::size_t i = 0; i < producer_count; ++i) {
        t.sinks.push_back(std::make_unique<QueueSink>(q));
    }
    t.source = std::make_unique<QueueSource>(q);
    t.shutdown = [] {};
    return t;
}

Transport make_socket_transport(std::size_t producer_count) {
    auto hub = std::make_shared<SocketHub>();
    hub->queue = std::make_shared<ByteQueue>(producer_count);

    hub->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (hub->listen_fd < 0) throw_errno("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(hub->listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        throw_errno("bind");
    }
    if (::listen(hub->listen_fd, static_cast<int>(producer_count) + 1) < 0) {
        throw_errno("listen");
    }
    socklen_t alen = sizeof(addr);
    if (::getsockname(hub->listen_fd, reinterpret_cast<sockaddr*>(&addr), &alen) < 0) {
        throw_errno("getsockname");
    }

    Transport t;
    for (std::size_t i = 0; i < producer_count; ++i) {
        const int cfd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (cfd < 0) throw_errno("socket");
        if (::connect(cfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
            ::close(cfd);
            throw_errno("connect");
        }
        const int afd = ::accept(hub->listen_fd, nullptr, nullptr);
        if (afd < 0) {
            ::close(cfd);
            throw_errno("accept");
        }
        hub->readers.emplace_back(reader_loop, afd, std::ref(*hub->queue));
        t.sinks.push_back(std::make_unique<SocketSink>(cfd));
    }
    t.source = std::make_unique<QueueSource>(hub->queue);
    t.shutdown = [hub] {};  // hub destructor joins readers
    return t;
}

// ---- agent and aggregator ------------------------------------------------------

AgentTickOutput agent_tick(const autonet::AutoencoderModel& model,
                           const spectra::VscParams& params,
                           const spectra::FrequencyGrid& grid,
                           std::uint16_t turbine_id,
                           const spectra::OperatingPoint& op,
                           std::uint64_t timestamp_ms) {
    const auto curve = spectra::synth_vsc_admittance(params, op, grid);
    const auto flat = tensorize::flatten(curve);
    const auto normalized = tensorize::normalize(flat, model.norm);
    const auto latent = autonet::encode(model, normalized, true);

    AgentTickOutput out;
    out.frame.turbine_id = turbine_id;
    out.frame.timestamp_ms = timestamp_ms;
    out.frame.p_active_mw = static_cast<float>(op.p_active_mw);
    out.frame.power_factor = static_cast<float>(op.power_factor);
    out.frame.u_pcc = static_cast<float>(op.u_pcc);
    out.frame.latent.assign(latent.begin(), latent.end());  // f32 downcast
    out.normalized_reference = normalized;
    return out;
}

namespace {

struct TickAccum {
    std::vector<std::optional<LatentFrame>> frames;  // indexed by turbine
    std::size_t present = 0;
};

void write_run_csvs(const RunReport& report, const SimSchedule& schedule,
                    const PipelineConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    std::ofstream ops(dir / "operating_points.csv");
    ops.precision(17);
    ops << "tick,turbine,p_active_mw,power_factor,u_pcc\n";
    for (std::size_t tick = 0; tick < schedule.tick_count; ++tick) {
        for (std::size_t wt = 0; wt < schedule.turbines.size(); ++wt) {
            const auto op = schedule.op_at(wt, tick);
            ops << tick << ',' << wt << ',' << op.p_active_mw << ','
                << op.power_factor << ',' << op.u_pcc << '\n';
        }
    }

    std::ofstream lat(dir / "latents.csv");
    lat.precision(9);
    lat << "tick,turbine,dim,value\n";
    std::ofstream rec(dir / "recon_errors.csv");
    rec.precision(17);
    rec << "tick,turbine,relative_error\n";
    for (std::size_t tick = 0; tick < report.ticks.size(); ++tick) {
        const TickReport& tr = report.ticks[tick];
        if (!tr.complete) continue;
        for (std::size_t wt = 0; wt < tr.latents.size(); ++wt) {
            for (std::size_t d = 0; d < tr.latents[wt].size(); ++d) {
                lat << tick << ',' << wt << ',' << d << ','
                    << tr.latents[wt][d] << '\n';
            }
            rec << tick << ',' << wt << ',' << tr.recon_errors[wt] << '\n';
        }
    }
}

}  // namespace

RunReport run_pipeline(const autonet::AutoencoderModel& model,
                       const PipelineConfig& config) {
    const std::size_t m = config.topology.node_count;
    if (config.schedule.turbines.size() != m) {
        throw std::invalid_argument(
            "farmlink: schedule has " +
            std::to_string(config.schedule.turbines.size()) + " turbines, topology has " +
            std::to_string(m) + " nodes");
    }
    if (config.grid.count * 8 != model.arch.input_dim) {
        throw std::invalid_argument("farmlink: model input_dim mismatch with grid");
    }

    Transport transport = config.transport == PipelineConfig::TransportKind::Socket
                              ? make_socket_transport(m)
                              : make_inprocess_transport(m);

    // Simulation-side ground truth, written by the agents and read by the
    // aggregator after tick completion. Keyed by (timestamp, turbine).
    std::mutex ref_mu;
    std::map<std::pair<std::uint64_t, std::uint16_t>, tensorize::FlatSample> refs;

    RunReport report;
    std::mutex err_mu;

    std::vector<std::thread> agents;
    agents.reserve(m);
    for (std::size_t wt = 0; wt < m; ++wt) {
        agents.emplace_back([&, wt] {
            FrameSink& sink = *transport.sinks[wt];
            for (std::size_t tick = 0; tick < config.schedule.tick_count; ++tick) {
                const std::uint64_t ts = static_cast<std::uint64_t>(
                    std::llround(config.schedule.tick_period_ms *
                                 static_cast<double>(tick)));
                try {
                    const auto op = config.schedule.op_at(wt, tick);
                    auto out = agent_tick(model, config.params, config.grid,
                                          static_cast<std::uint16_t>(wt), op, ts);
                    {
                        std::lock_guard lock(ref_mu);
                        refs[{ts, static_cast<std::uint16_t>(wt)}] =
                            std::move(out.normalized_reference);
                    }
                    sink.send(encode_frame(out.frame));
                } catch (const std::exception& e) {
                    std::lock_guard lock(err_mu);
                    report.errors.push_back("turbine " + std::to_string(wt) +
                                            " tick " + std::to_string(tick) + ": " +
                                            e.what());
                }
            }
            sink.close();
        });
    }

    // Frequency-independent of the tick, so assemble the network once.
    const auto ynet = gridnet::assemble_ynet(config.topology, config.grid);

    const std::uint64_t wait_ms = static_cast<std::uint64_t>(
        config.straggler_wait_ticks * config.schedule.tick_period_ms);

    std::map<std::uint64_t, TickAccum> pending;
    // Per-turbine high watermarks; a tick can only expire once every
    // producer's (ordered) stream has advanced past its wait window, so a
    // straggler frame for it can no longer exist and completeness does not
    // depend on arrival interleaving.
    std::vector<std::uint64_t> last_seen(m, 0);
    std::vector<bool> has_seen(m, false);
    std::uint64_t max_finalized = 0;
    bool any_finalized = false;

    auto finalize_tick = [&](std::uint64_t ts, TickAccum& acc) {
        TickReport tr;
        tr.timestamp_ms = ts;
        tr.complete = acc.present == m;
        try {
        if (tr.complete) {
            std::vector<gridnet::TurbineBlock> turbines;
            tr.latents.resize(m);
            tr.recon_errors.resize(m);
            for (std::size_t wt = 0; wt < m; ++wt) {
                const LatentFrame& frame = *acc.frames[wt];
                tr.latents[wt] = frame.latent;
                autonet::LatentVector h(frame.latent.begin(), frame.latent.end());
                const auto xhat_norm = autonet::decode(model, h);
                // reconstruction error vs. the agent's normalized reference
                {
                    std::lock_guard lock(ref_mu);
                    auto it = refs.find({ts, static_cast<std::uint16_t>(wt)});
                    if (it != refs.end()) {
                        tr.recon_errors[wt] =
                            autonet::recon_loss(xhat_norm, it->second);
                        refs.erase(it);
                    } else {
                        tr.recon_errors[wt] = -1.0;  // no reference available
                    }
                }
                const auto xhat = tensorize::denormalize(xhat_norm, model.norm);
                turbines.push_back(
                    {wt, tensorize::unflatten(xhat, config.grid)});
            }
            auto ywt = gridnet::assemble_ywt(turbines, m, config.grid);
            auto in_model =
                gridnet::assemble_ynode(std::move(ywt), ynet, config.grid, m);
            report.assembled_models += 1;
            if (config.export_all_inmodels && !config.out_dir.empty()) {
                const auto dir = std::filesystem::path(config.out_dir);
                std::filesystem::create_directories(dir);
                gridnet::write_matrix_csv(
                    in_model.y_node, config.grid,
                    (dir / ("ynode_tick_" + std::to_string(ts) + ".csv")).string());
            }
            report.last_model = std::move(in_model);
            report.has_model = true;
        }
        } catch (const std::exception& e) {
            tr.complete = false;
            report.errors.push_back("tick " + std::to_string(ts) +
                                    " assembly failed: " + e.what());
        }
        report.ticks.push_back(std::move(tr));
    };

    // Aggregator: single consumer; ticks finalize in timestamp order, and an
    // incomplete tick is skipped once the stream has advanced past its wait
    // window.
    for (;;) {
        auto bytes = transport.source->receive();
        if (!bytes) break;
        std::string why;
        auto frame = decode_frame(bytes->data(), bytes->size(), &why);
        if (!frame) {
            report.frames_rejected += 1;
            report.errors.push_back("rejected frame: " + why);
            continue;
        }
        report.frames_received += 1;
        if (frame->turbine_id >= m) {
            report.frames_rejected += 1;
            report.errors.push_back("unknown turbine id " +
                                    std::to_string(frame->turbine_id));
            continue;
        }
        if (any_finalized && frame->timestamp_ms <= max_finalized) {
            report.frames_rejected += 1;
            report.errors.push_back(
                "stale frame for already-finalized tick t=" +
                std::to_string(frame->timestamp_ms) + " from turbine " +
                std::to_string(frame->turbine_id));
            continue;
        }
        auto& acc = pending[frame->timestamp_ms];
        if (acc.frames.empty()) acc.frames.resize(m);
        if (acc.frames[frame->turbine_id].has_value()) {
            report.errors.push_back("duplicate frame for turbine " +
                                    std::to_string(frame->turbine_id) + " at t=" +
                                    std::to_string(frame->timestamp_ms) +
                                    " (last writer wins)");
        } else {
            acc.present += 1;
        }
        last_seen[frame->turbine_id] =
            std::max(last_seen[frame->turbine_id], frame->timestamp_ms);
        has_seen[frame->turbine_id] = true;
        acc.frames[frame->turbine_id] = std::move(*frame);

        std::uint64_t low_watermark = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t wt = 0; wt < m; ++wt) {
            low_watermark = std::min(low_watermark,
                                     has_seen[wt] ? last_seen[wt] : 0);
        }

        while (!pending.empty()) {
            auto it = pending.begin();
            const bool complete = it->second.present == m;
            const bool expired = low_watermark > it->first + wait_ms;
            if (!complete && !expired) break;
            max_finalized = it->first;
            any_finalized = true;
            finalize_tick(it->first, it->second);
            pending.erase(it);
        }
    }
    // Stream ended: everything left finalizes in order.
    for (auto& [ts, acc] : pending) finalize_tick(ts, acc);
    pending.clear();

    for (auto& t : agents) t.join();
    for (auto& sink : transport.sinks) sink->close();
    if (transport.shutdown) transport.shutdown();

    if (!config.out_dir.empty()) {
        write_run_csvs(report, config.schedule, config);
        if (report.has_model) {
            const auto dir = std::filesystem::path(config.out_dir);
            gridnet::write_matrix_csv(report.last_model.y_node, config.grid,
                                      (dir / "ynode_last_tick.csv").string());
        }
    }
    return report;
}

}  // namespace impnet::farmlink
