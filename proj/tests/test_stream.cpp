#include "qrng/pipeline.hpp"
#include "qrng/stream.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <future>
#include <thread>

using namespace qrng;

namespace {

PipelineConfig stream_config() {
    return parse_config("noise_seed = 21\ntoeplitz_seed = 22\n");
}

// Starts serve_stream on an ephemeral port and returns the port once it is listening.
struct Server {
    std::promise<std::uint16_t> port;
    std::future<ServeReport> done;

    Server(const PipelineConfig& config, ServeOptions opts) {
        auto ready = port.get_future();
        opts.listen = Endpoint{"127.0.0.1", 0};
        opts.on_listening = [this](std::uint16_t p) { port.set_value(p); };
        done = std::async(std::launch::async, [config, opts] { return serve_stream(config, opts); });
        bound = ready.get();
    }
    std::uint16_t bound = 0;
};

}  // namespace

TEST(Frame, ExactLayout) {
    const StreamFrame f{0x0102030405060708ULL, {0xAA, 0xBB}};
    const auto bytes = encode_frame(f);
    ASSERT_EQ(bytes.size(), 16u + 2u + 4u);
    const std::vector<std::uint8_t> head{'Q', 'R', 'N', 'G', 8, 7, 6, 5, 4, 3, 2, 1, 2, 0, 0, 0, 0xAA, 0xBB};
    EXPECT_TRUE(std::equal(head.begin(), head.end(), bytes.begin()));
    const auto crc = static_cast<std::uint32_t>(::crc32(0L, bytes.data() + 4, 14));
    EXPECT_EQ(crc, frame_crc(f.sequence, f.payload));
    const std::uint32_t stored = bytes[18] | (bytes[19] << 8) | (bytes[20] << 16) | (static_cast<std::uint32_t>(bytes[21]) << 24);
    EXPECT_EQ(stored, crc);

    const auto back = decode_frame(bytes);
    EXPECT_EQ(back.sequence, f.sequence);
    EXPECT_EQ(back.payload, f.payload);
    EXPECT_TRUE(decode_frame(encode_frame(StreamFrame{9, {}})).end_of_stream());
}

TEST(Frame, CorruptionNamesTheSequence) {
    auto bytes = encode_frame(StreamFrame{77, std::vector<std::uint8_t>(100, 5)});
    bytes[40] ^= 0x10;
    try {
        decode_frame(bytes);
        FAIL() << "corrupted frame decoded";
    } catch (const StreamError& e) {
        EXPECT_EQ(e.sequence(), 77u);
        EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
    }
    auto bad_magic = encode_frame(StreamFrame{1, {1}});
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_frame(bad_magic), StreamError);
    auto short_frame = encode_frame(StreamFrame{1, {1, 2}});
    short_frame.pop_back();
    EXPECT_THROW(decode_frame(short_frame), StreamError);
}

TEST(Endpoint, Parsing) {
    auto e = parse_endpoint("example.org:9000");
    EXPECT_EQ(e.host, "example.org");
    EXPECT_EQ(e.port, 9000);
    e = parse_endpoint(":123");
    EXPECT_EQ(e.host, "127.0.0.1");
    EXPECT_EQ(e.port, 123);
    e = parse_endpoint("[::1]:80");
    EXPECT_EQ(e.host, "::1");
    EXPECT_EQ(e.port, 80);
    EXPECT_THROW(parse_endpoint("host:99999"), std::invalid_argument);
    EXPECT_THROW(parse_endpoint("host:abc"), std::invalid_argument);
}

TEST(Loopback, TenThousandFramesWithoutErrors) {
    ServeOptions opts;
    opts.max_frames = 10'000;
    opts.repeat_buffer = true;
    Server server(stream_config(), opts);

    SinkOptions sink;
    sink.connect = Endpoint{"127.0.0.1", server.bound};
    const auto report = sink_stream(sink);
    const auto sent = server.done.get();
    EXPECT_EQ(report.frames, 10'000u);
    EXPECT_EQ(report.payload_bytes, 10'000u * 64u * 1024u);
    EXPECT_EQ(report.crc_errors, 0u);
    EXPECT_EQ(report.sequence_gaps, 0u);
    EXPECT_TRUE(report.clean_end);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(sent.frames, report.frames);
}

TEST(Loopback, PayloadMatchesPipelineOutput) {
    const auto config = stream_config();
    ServeOptions opts;
    opts.max_frames = 40;
    opts.payload_bytes = 4096;
    Server server(config, opts);

    std::vector<std::uint8_t> received;
    SinkOptions sink;
    sink.connect = Endpoint{"127.0.0.1", server.bound};
    sink.on_payload = [&](std::span<const std::uint8_t> p) { received.insert(received.end(), p.begin(), p.end()); };
    ASSERT_TRUE(sink_stream(sink).ok());
    server.done.get();
    ASSERT_EQ(received.size(), 40u * 4096u);

    auto c = config;
    c.raw_bits = 3'000'000;
    RunOptions ro;
    ro.write_files = false;
    ro.keep_output = true;
    ro.analyze = false;
    const auto bytes = run_pipeline(c, ro).output->to_bytes();
    ASSERT_GE(bytes.size(), received.size());
    EXPECT_TRUE(std::equal(received.begin(), received.end(), bytes.begin()));
}

TEST(Loopback, InjectedCorruptionIsReported) {
    ServeOptions opts;
    opts.max_frames = 50;
    opts.payload_bytes = 1024;
    opts.corrupt_sequence = 17;
    opts.repeat_buffer = true;
    Server server(stream_config(), opts);

    SinkOptions sink;
    sink.connect = Endpoint{"127.0.0.1", server.bound};
    try {
        sink_stream(sink);
        FAIL() << "corruption not detected";
    } catch (const StreamError& e) {
        EXPECT_EQ(e.sequence(), 17u);
        EXPECT_NE(std::string(e.what()).find("CRC"), std::string::npos);
    }
    try {
        server.done.get();
    } catch (const std::exception&) {
        // the server may see the peer close early
    }
}
