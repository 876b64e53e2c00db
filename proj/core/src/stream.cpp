#include "qrng/stream.hpp"

#include "qrng/entropy.hpp"
#include "qrng/pipeline.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <deque>
#include <thread>

namespace qrng {

namespace {

using Clock = std::chrono::steady_clock;

void put_le(std::uint8_t* out, std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out[i] = static_cast<std::uint8_t>(value >> (8 * i));
    }
}

std::uint64_t get_le(const std::uint8_t* in, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    }
    return v;
}

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { reset(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void reset() noexcept {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    void send_all(std::span<const std::uint8_t> data) const {
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw std::runtime_error(std::string("send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    /// False on orderly EOF before any byte arrived; throws on EOF mid-buffer.
    bool recv_all(std::span<std::uint8_t> data) const {
        std::size_t got = 0;
        while (got < data.size()) {
            const ssize_t n = ::recv(fd_, data.data() + got, data.size() - got, 0);
            if (n == 0) {
                if (got == 0) {
                    return false;
                }
                throw std::runtime_error("connection closed mid-frame");
            }
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw std::runtime_error(std::string("recv failed: ") + std::strerror(errno));
            }
            got += static_cast<std::size_t>(n);
        }
        return true;
    }

private:
    int fd_ = -1;
};

addrinfo* resolve(const Endpoint& ep, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = passive ? AI_PASSIVE : 0;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) {
        throw std::runtime_error("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
    }
    return res;
}

Socket listen_on(const Endpoint& ep, std::uint16_t& bound_port) {
    addrinfo* res = resolve(ep, true);
    Socket sock;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.valid()) {
            continue;
        }
        const int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), 1) == 0) {
            sock = std::move(s);
            break;
        }
    }
    ::freeaddrinfo(res);
    if (!sock.valid()) {
        throw std::runtime_error("cannot listen on " + ep.host + ":" + std::to_string(ep.port) + ": " +
                                 std::strerror(errno));
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                            : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    return sock;
}

Socket connect_to(const Endpoint& ep, double timeout_s) {
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
    for (;;) {
        addrinfo* res = resolve(ep, false);
        for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
            Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (s.valid() && ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
                ::freeaddrinfo(res);
                return s;
            }
        }
        ::freeaddrinfo(res);
        if (Clock::now() >= deadline) {
            throw std::runtime_error("cannot connect to " + ep.host + ":" + std::to_string(ep.port));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

}  // namespace

std::uint32_t frame_crc(std::uint64_t sequence, std::span<const std::uint8_t> payload) noexcept {
    std::uint8_t head[12];
    put_le(head, sequence, 8);
    put_le(head + 8, payload.size(), 4);
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, head, sizeof(head));
    // zlib takes uInt lengths; payloads are capped well below that. A null buffer would
    // reset the crc, and an empty vector's data() may be null.
    if (!payload.empty()) {
        crc = ::crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_frame(const StreamFrame& frame) {
    if (frame.payload.size() > max_frame_payload) {
        throw std::invalid_argument("encode_frame: payload too large");
    }
    std::vector<std::uint8_t> out(frame_header_size + frame.payload.size() + frame_trailer_size);
    std::memcpy(out.data(), frame_magic, 4);
    put_le(out.data() + 4, frame.sequence, 8);
    put_le(out.data() + 12, frame.payload.size(), 4);
    std::copy(frame.payload.begin(), frame.payload.end(), out.begin() + frame_header_size);
    put_le(out.data() + frame_header_size + frame.payload.size(), frame_crc(frame.sequence, frame.payload), 4);
    return out;
}

StreamFrame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < frame_header_size + frame_trailer_size) {
        throw StreamError("frame too short", 0);
    }
    const std::uint64_t sequence = get_le(bytes.data() + 4, 8);
    if (std::memcmp(bytes.data(), frame_magic, 4) != 0) {
        throw StreamError("bad frame magic at sequence " + std::to_string(sequence), sequence);
    }
    const auto len = static_cast<std::size_t>(get_le(bytes.data() + 12, 4));
    if (bytes.size() != frame_header_size + len + frame_trailer_size) {
        throw StreamError("frame length mismatch at sequence " + std::to_string(sequence), sequence);
    }
    StreamFrame frame{sequence, {bytes.begin() + frame_header_size, bytes.begin() + frame_header_size + len}};
    const auto crc = static_cast<std::uint32_t>(get_le(bytes.data() + frame_header_size + len, 4));
    if (crc != frame_crc(sequence, frame.payload)) {
        throw StreamError("CRC mismatch at sequence " + std::to_string(sequence), sequence);
    }
    return frame;
}

Endpoint parse_endpoint(const std::string& text) {
    Endpoint ep;
    const auto colon = text.rfind(':');
    std::string port_text = text;
    if (colon != std::string::npos) {
        if (colon > 0) {
            ep.host = text.substr(0, colon);
        }
        port_text = text.substr(colon + 1);
    }
    if (ep.host.size() >= 2 && ep.host.front() == '[' && ep.host.back() == ']') {
        ep.host = ep.host.substr(1, ep.host.size() - 2);
    }
    try {
        std::size_t used = 0;
        const unsigned long port = std::stoul(port_text, &used);
        if (used != port_text.size() || port > 65535) {
            throw std::invalid_argument("range");
        }
        ep.port = static_cast<std::uint16_t>(port);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad endpoint '" + text + "', expected host:port");
    }
    return ep;
}

ServeReport serve_stream(const PipelineConfig& config, const ServeOptions& options) {
    config.validate();
    if (options.payload_bytes == 0 || options.payload_bytes > max_frame_payload) {
        throw std::invalid_argument("serve_stream: payload_bytes must be in [1, 64 MiB]");
    }
    const double h_inf =
        min_entropy_gaussian(std::sqrt(config.noise.quantum_variance()), config.adc, config.noise.mean_code)
            .min_entropy_bits_per_sample;
    const ExtractorConfig geo = resolve_extractor(config, h_inf);
    const ToeplitzSeed seed = seed_from_entropy(config.toeplitz_seed, geo.m, geo.n);

    std::uint16_t port = 0;
    Socket listener = listen_on(options.listen, port);
    if (options.on_listening) {
        options.on_listening(port);
    }
    Socket client(::accept(listener.fd(), nullptr, nullptr));
    if (!client.valid()) {
        throw std::runtime_error(std::string("accept failed: ") + std::strerror(errno));
    }
    listener.reset();

    ServeReport report;
    const auto start = Clock::now();
    auto time_up = [&] {
        return options.duration_s > 0.0 &&
               std::chrono::duration<double>(Clock::now() - start).count() >= options.duration_s;
    };
    auto frames_done = [&] { return options.max_frames != 0 && report.frames >= options.max_frames; };

    std::vector<std::uint8_t> pending;
    auto send_payload = [&](std::span<const std::uint8_t> bytes) {
        StreamFrame frame{report.frames, {bytes.begin(), bytes.end()}};
        auto wire = encode_frame(frame);
        if (options.corrupt_sequence && *options.corrupt_sequence == frame.sequence) {
            wire[frame_header_size] ^= 0x01;
        }
        client.send_all(wire);
        ++report.frames;
        report.payload_bytes += bytes.size();
    };
    // Sends every full payload in `pending`; false once a stop condition is hit.
    auto drain = [&] {
        std::size_t offset = 0;
        bool keep_going = true;
        while (pending.size() - offset >= options.payload_bytes) {
            send_payload(std::span<const std::uint8_t>(pending).subspan(offset, options.payload_bytes));
            offset += options.payload_bytes;
            if (frames_done() || time_up()) {
                keep_going = false;
                break;
            }
        }
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(offset));
        return keep_going;
    };

    if (options.repeat_buffer) {
        PipelineConfig bounded = config;
        // Enough extracted bytes for a few frames.
        bounded.raw_bits = static_cast<std::uint64_t>(
            std::ceil(4.0 * static_cast<double>(options.payload_bytes) * 8.0 / geo.ratio())) + geo.n;
        std::vector<std::uint8_t> buffer;
        run_extraction_stages(bounded, geo, seed,
                              plan_chunks(config.adc, geo, config.chunk_blocks, bounded.raw_bits / config.adc.bits),
                              [&](BitStream&& chunk) {
                                  const auto bytes = chunk.to_bytes();
                                  buffer.insert(buffer.end(), bytes.begin(), bytes.end());
                                  return true;
                              });
        buffer.resize(buffer.size() / options.payload_bytes * options.payload_bytes);
        std::size_t offset = 0;
        while (!frames_done() && !time_up()) {
            send_payload(std::span<const std::uint8_t>(buffer).subspan(offset, options.payload_bytes));
            offset = (offset + options.payload_bytes) % buffer.size();
        }
    } else {
        run_extraction_stages(config, geo, seed, plan_chunks(config.adc, geo, config.chunk_blocks, 0),
                              [&](BitStream&& chunk) {
                                  const auto bytes = chunk.to_bytes();
                                  pending.insert(pending.end(), bytes.begin(), bytes.end());
                                  return drain();
                              });
    }

    client.send_all(encode_frame(StreamFrame{report.frames, {}}));
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report.mbps = report.wall_seconds > 0.0
                      ? static_cast<double>(report.payload_bytes) * 8.0 / report.wall_seconds / 1e6
                      : 0.0;
    return report;
}

SinkReport sink_stream(const SinkOptions& options) {
    Socket sock = connect_to(options.connect, options.connect_timeout_s);
    SinkReport report;
    const auto start = Clock::now();
    std::deque<std::pair<double, std::uint64_t>> window;  // (seconds since start, cumulative bytes)
    window.emplace_back(0.0, 0);
    bool have_window = false;

    std::uint8_t header[frame_header_size];
    std::vector<std::uint8_t> body;
    for (std::uint64_t expected = 0;; ++expected) {
        if (!sock.recv_all(header)) {
            throw std::runtime_error("connection lost after " + std::to_string(report.frames) +
                                     " frames, before the end-of-stream frame");
        }
        const std::uint64_t sequence = get_le(header + 4, 8);
        if (std::memcmp(header, frame_magic, 4) != 0) {
            throw StreamError("bad frame magic at sequence " + std::to_string(sequence), sequence);
        }
        if (sequence != expected) {
            ++report.sequence_gaps;
            throw StreamError("sequence gap: expected " + std::to_string(expected) + ", got " +
                                  std::to_string(sequence),
                              sequence);
        }
        const auto len = static_cast<std::size_t>(get_le(header + 12, 4));
        if (len > max_frame_payload) {
            throw StreamError("payload length " + std::to_string(len) + " too large at sequence " +
                                  std::to_string(sequence),
                              sequence);
        }
        body.resize(len + frame_trailer_size);
        if (!sock.recv_all(body)) {
            throw std::runtime_error("connection closed mid-frame at sequence " + std::to_string(sequence));
        }
        const std::span<const std::uint8_t> payload(body.data(), len);
        const auto crc = static_cast<std::uint32_t>(get_le(body.data() + len, 4));
        if (crc != frame_crc(sequence, payload)) {
            ++report.crc_errors;
            throw StreamError("CRC mismatch at sequence " + std::to_string(sequence), sequence);
        }
        if (len == 0) {
            report.clean_end = true;
            break;
        }
        if (options.on_payload) {
            options.on_payload(payload);
        }
        ++report.frames;
        report.payload_bytes += len;

        const double now = std::chrono::duration<double>(Clock::now() - start).count();
        window.emplace_back(now, report.payload_bytes);
        while (window.size() > 2 && window[1].first <= now - 1.0) {
            window.pop_front();
        }
        const double span = now - window.front().first;
        if (span >= 1.0) {
            const double rate = static_cast<double>(report.payload_bytes - window.front().second) * 8.0 / span / 1e6;
            report.min_window_mbps = have_window ? std::min(report.min_window_mbps, rate) : rate;
            report.max_window_mbps = have_window ? std::max(report.max_window_mbps, rate) : rate;
            have_window = true;
        }
    }

    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report.mean_mbps = report.wall_seconds > 0.0
                           ? static_cast<double>(report.payload_bytes) * 8.0 / report.wall_seconds / 1e6
                           : 0.0;
    if (!have_window) {
        report.min_window_mbps = report.max_window_mbps = report.mean_mbps;
    }
    report.rate_ok = options.expected_rate_mbps <= 0.0 || report.min_window_mbps >= options.expected_rate_mbps;
    return report;
}

}  // namespace qrng
