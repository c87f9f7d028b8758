#include "atloss/data/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "atloss/error.hpp"
#include "atloss/format.hpp"

namespace atloss::data {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'T', 'G', 'S'};
constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_grid_sequence(std::span<const GridField> frames) {
    if (frames.empty()) throw InvalidInput("cannot encode an empty grid sequence");
    const std::size_t h = frames.front().height();
    const std::size_t w = frames.front().width();
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + frames.size() * h * w * 4);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_u32(out, kGridFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(h));
    put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, static_cast<std::uint32_t>(frames.size()));
    for (const GridField& f : frames) {
        if (f.height() != h || f.width() != w) throw DimensionError("grid sequence frames differ in shape");
        for (double v : f.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

std::vector<GridField> decode_grid_sequence(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw IoError("not a grid sequence file (bad magic)");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kGridFormatVersion) throw IoError("unsupported grid sequence version " + std::to_string(version));
    const std::size_t h = get_u32(bytes, 8);
    const std::size_t w = get_u32(bytes, 12);
    const std::size_t steps = get_u32(bytes, 16);
    if (h == 0 || w == 0) throw IoError("grid sequence has an empty frame shape");
    if (bytes.size() != kHeaderBytes + steps * h * w * 4) throw IoError("grid sequence payload size mismatch");

    std::vector<GridField> frames;
    frames.reserve(steps);
    std::size_t off = kHeaderBytes;
    for (std::size_t s = 0; s < steps; ++s) {
        std::vector<double> v(h * w);
        for (double& x : v) {
            x = std::bit_cast<float>(get_u32(bytes, off));
            off += 4;
        }
        try {
            frames.emplace_back(h, w, std::move(v));
        } catch (const InvalidInput& e) {
            throw IoError(std::string("grid sequence frame ") + std::to_string(s) + ": " + e.what());
        }
    }
    return frames;
}

void write_grid_sequence(const std::filesystem::path& path, std::span<const GridField> frames) {
    const auto bytes = encode_grid_sequence(frames);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<GridField> read_grid_sequence(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_grid_sequence(bytes);
}

std::string export_csv(std::span<const GridField> frames) {
    std::string s = "step,row,col,value\n";
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const GridField& f = frames[t];
        for (std::size_t r = 0; r < f.height(); ++r) {
            for (std::size_t c = 0; c < f.width(); ++c) {
                s += std::to_string(t);
                s += ',';
                s += std::to_string(r);
                s += ',';
                s += std::to_string(c);
                s += ',';
                s += format_double(f.at(r, c));
                s += '\n';
            }
        }
    }
    return s;
}

} // namespace atloss::data
