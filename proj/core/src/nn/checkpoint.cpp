#include "atloss/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "atloss/error.hpp"
#include "atloss/format.hpp"

namespace atloss::nn {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'T', 'C', 'K'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        const auto b = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(b >> (8 * i)));
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    [[nodiscard]] bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const CnnModel<float>& model) {
    Writer w;
    for (std::uint8_t b : kMagic) w.bytes.push_back(b);
    w.u32(kCheckpointVersion);
    const CnnConfig& c = model.config();
    w.u32(static_cast<std::uint32_t>(c.in_channels));
    w.u32(static_cast<std::uint32_t>(c.hidden_channels));
    w.u32(static_cast<std::uint32_t>(c.kernel));
    w.u32(c.use_norm ? 1u : 0u);
    w.u32(c.activation == Activation::swish ? 0u : 1u);
    w.f64(c.norm_eps);
    w.u32(static_cast<std::uint32_t>(kParamCount));
    for (const auto& p : model.params()) {
        w.u32(static_cast<std::uint32_t>(p.size()));
        for (float v : p) w.u32(std::bit_cast<std::uint32_t>(v));
    }
    return std::move(w.bytes);
}

CnnModel<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("not a checkpoint (bad magic)");
    Reader r(bytes.subspan(4));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
    CnnConfig c;
    c.in_channels = r.u32();
    c.hidden_channels = r.u32();
    c.kernel = r.u32();
    c.use_norm = r.u32() != 0;
    const std::uint32_t act = r.u32();
    if (act > 1) throw IoError("checkpoint has an unknown activation id");
    c.activation = act == 0 ? Activation::swish : Activation::identity;
    c.norm_eps = r.f64();
    CnnModel<float> model(c);
    if (r.u32() != kParamCount) throw IoError("checkpoint tensor count mismatch");
    for (auto& p : model.params()) {
        if (r.u32() != p.size()) throw IoError("checkpoint tensor shape mismatch");
        for (float& v : p) v = std::bit_cast<float>(r.u32());
    }
    if (!r.done()) throw IoError("checkpoint has trailing bytes");
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const CnnModel<float>& model) {
    const auto bytes = encode_checkpoint(model);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

CnnModel<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace atloss::nn
