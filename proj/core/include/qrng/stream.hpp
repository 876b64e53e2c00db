#pragma once

#include "qrng/config.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrng {

// Framed TCP transport for extracted random bytes.
//
//   offset  size  field
//   0       4     magic "QRNG"
//   4       8     sequence, u64 LE, starts at 0 and increments by 1
//   12      4     payload_len, u32 LE (0 marks end of stream)
//   16      len   payload
//   16+len  4     crc32 (IEEE) over bytes 4 .. 16+len, u32 LE

inline constexpr char frame_magic[4] = {'Q', 'R', 'N', 'G'};
inline constexpr std::size_t frame_header_size = 16;
inline constexpr std::size_t frame_trailer_size = 4;
inline constexpr std::uint32_t max_frame_payload = 64u << 20;

struct StreamFrame {
    std::uint64_t sequence = 0;
    std::vector<std::uint8_t> payload;

    bool end_of_stream() const noexcept { return payload.empty(); }
};

std::uint32_t frame_crc(std::uint64_t sequence, std::span<const std::uint8_t> payload) noexcept;

std::vector<std::uint8_t> encode_frame(const StreamFrame& frame);

/// Sink-side integrity failure: bad magic, CRC mismatch or sequence gap.
class StreamError : public std::runtime_error {
public:
    StreamError(const std::string& what, std::uint64_t sequence) : std::runtime_error(what), sequence_(sequence) {}
    std::uint64_t sequence() const noexcept { return sequence_; }

private:
    std::uint64_t sequence_;
};

/// Decodes one complete encoded frame (header + payload + crc). Throws StreamError.
StreamFrame decode_frame(std::span<const std::uint8_t> bytes);

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

/// "host:port" or ":port" / "port" (host defaults to 127.0.0.1).
Endpoint parse_endpoint(const std::string& text);

struct ServeOptions {
    Endpoint listen;
    std::size_t payload_bytes = 64 * 1024;
    /// Stop after this many payload frames (0 = no limit).
    std::uint64_t max_frames = 0;
    /// Stop after this long (<= 0 = no limit).
    double duration_s = 0.0;
    /// Called with the bound port once listening (useful with port 0).
    std::function<void(std::uint16_t)> on_listening;
    /// Fault injection: flip one payload bit of this frame after its CRC is computed.
    std::optional<std::uint64_t> corrupt_sequence;
    /// Replay one pre-extracted buffer instead of running the pipeline, to measure transport alone.
    bool repeat_buffer = false;
};

struct ServeReport {
    std::uint64_t frames = 0;
    std::uint64_t payload_bytes = 0;
    double wall_seconds = 0.0;
    double mbps = 0.0;
};

/// Accepts one client and sends extracted random bytes (produced by the pipeline with
/// `config`'s geometry and seeds) in frames, then an end-of-stream frame.
ServeReport serve_stream(const PipelineConfig& config, const ServeOptions& options);

struct SinkOptions {
    Endpoint connect;
    /// Sustained-rate floor in Mbps over 1 s windows; 0 disables the check.
    double expected_rate_mbps = 0.0;
    double connect_timeout_s = 10.0;
    /// Receives each verified payload in order.
    std::function<void(std::span<const std::uint8_t>)> on_payload;
};

struct SinkReport {
    std::uint64_t frames = 0;
    std::uint64_t payload_bytes = 0;
    std::uint64_t crc_errors = 0;
    std::uint64_t sequence_gaps = 0;
    double wall_seconds = 0.0;
    double mean_mbps = 0.0;
    /// Rates over sliding 1 s windows; equal to mean_mbps for runs shorter than 1 s.
    double min_window_mbps = 0.0;
    double max_window_mbps = 0.0;
    bool clean_end = false;
    bool rate_ok = true;

    bool ok() const noexcept { return crc_errors == 0 && sequence_gaps == 0 && clean_end && rate_ok; }
};

/// Connects, verifies every frame and reports the received rate. Throws StreamError on
/// a CRC mismatch or sequence gap (naming the sequence number) and std::runtime_error
/// when the connection drops before the end-of-stream frame.
SinkReport sink_stream(const SinkOptions& options);

}  // namespace qrng
