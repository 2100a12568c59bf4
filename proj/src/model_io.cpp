#include "asbci/model_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace asbci {

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'S', 'M', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_bytes(std::ostream& out, const void* data, std::size_t count) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(count));
    if (!out) throw std::runtime_error("model write failed");
}

void read_bytes(std::istream& in, void* data, std::size_t count) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(count));
    if (in.gcount() != static_cast<std::streamsize>(count)) {
        throw std::runtime_error("model read failed: truncated stream");
    }
}

void write_u32(std::ostream& out, std::uint32_t value) {
    std::array<unsigned char, 4> buf;
    for (int i = 0; i < 4; ++i) buf[static_cast<std::size_t>(i)] = static_cast<unsigned char>(value >> (8 * i));
    write_bytes(out, buf.data(), buf.size());
}

std::uint32_t read_u32(std::istream& in) {
    std::array<unsigned char, 4> buf;
    read_bytes(in, buf.data(), buf.size());
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(buf[static_cast<std::size_t>(i)]) << (8 * i);
    return value;
}

void write_u64(std::ostream& out, std::uint64_t value) {
    std::array<unsigned char, 8> buf;
    for (int i = 0; i < 8; ++i) buf[static_cast<std::size_t>(i)] = static_cast<unsigned char>(value >> (8 * i));
    write_bytes(out, buf.data(), buf.size());
}

std::uint64_t read_u64(std::istream& in) {
    std::array<unsigned char, 8> buf;
    read_bytes(in, buf.data(), buf.size());
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(buf[static_cast<std::size_t>(i)]) << (8 * i);
    return value;
}

void write_f64(std::ostream& out, double value) {
    write_u64(out, std::bit_cast<std::uint64_t>(value));
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void write_tensor(std::ostream& out, std::uint32_t block_index, const Tensor& t) {
    write_u32(out, block_index);
    write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::size_t d : t.dims) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values) write_f64(out, v);
}

Tensor read_tensor(std::istream& in, std::uint32_t expected_block) {
    const std::uint32_t block = read_u32(in);
    if (block != expected_block) {
        throw std::runtime_error("model read failed: tensor record out of order");
    }
    const std::uint32_t rank = read_u32(in);
    if (rank > 8) throw std::runtime_error("model read failed: implausible tensor rank");
    std::vector<std::size_t> dims(rank);
    std::size_t total = 1;
    for (auto& d : dims) {
        d = read_u32(in);
        total *= d;
    }
    Tensor t;
    t.dims = std::move(dims);
    if (t.dims.empty()) total = 0;
    t.values.resize(total);
    for (auto& v : t.values) v = read_f64(in);
    return t;
}

}  // namespace

void save_model(std::ostream& out, const ModelState& state) {
    write_bytes(out, kMagic.data(), kMagic.size());
    write_u32(out, kFormatVersion);

    const auto& spec = state.spec;
    write_u32(out, static_cast<std::uint32_t>(spec.blocks.size()));
    for (const auto& b : spec.blocks) {
        write_u32(out, static_cast<std::uint32_t>(b.kind));
        write_u32(out, static_cast<std::uint32_t>(b.units));
        write_u32(out, static_cast<std::uint32_t>(b.kernel_length));
        write_u32(out, static_cast<std::uint32_t>(b.activation));
        write_f64(out, b.dropout_rate);
        write_u32(out, b.batch_norm ? 1 : 0);
    }
    write_u32(out, static_cast<std::uint32_t>(spec.channels));
    write_u32(out, static_cast<std::uint32_t>(spec.time_samples));
    write_u32(out, static_cast<std::uint32_t>(spec.class_count));

    for (std::size_t i = 0; i < state.frozen.size(); ++i) {
        write_u32(out, state.frozen[i] ? 1 : 0);
    }
    write_u64(out, state.seed);

    for (std::size_t i = 0; i < state.blocks.size(); ++i) {
        const auto bi = static_cast<std::uint32_t>(i);
        const auto& p = state.blocks[i];
        write_tensor(out, bi, p.weights);
        write_tensor(out, bi, p.bias);
        write_tensor(out, bi, p.bn_gamma);
        write_tensor(out, bi, p.bn_beta);
        write_tensor(out, bi, p.bn_mean);
        write_tensor(out, bi, p.bn_var);
    }
    out.flush();
}

ModelState load_model(std::istream& in) {
    std::array<char, 4> magic;
    read_bytes(in, magic.data(), magic.size());
    if (magic != kMagic) throw std::runtime_error("model read failed: bad magic bytes");
    const std::uint32_t version = read_u32(in);
    if (version != kFormatVersion) {
        throw std::runtime_error("model read failed: unsupported format version " +
                                 std::to_string(version));
    }

    ModelState state;
    const std::uint32_t block_count = read_u32(in);
    if (block_count > 1024) throw std::runtime_error("model read failed: implausible block count");
    state.spec.blocks.resize(block_count);
    for (auto& b : state.spec.blocks) {
        const std::uint32_t kind = read_u32(in);
        if (kind > static_cast<std::uint32_t>(BlockKind::Dense)) {
            throw std::runtime_error("model read failed: unknown block kind");
        }
        b.kind = static_cast<BlockKind>(kind);
        b.units = read_u32(in);
        b.kernel_length = read_u32(in);
        const std::uint32_t act = read_u32(in);
        if (act > static_cast<std::uint32_t>(Activation::Softmax)) {
            throw std::runtime_error("model read failed: unknown activation");
        }
        b.activation = static_cast<Activation>(act);
        b.dropout_rate = read_f64(in);
        b.batch_norm = read_u32(in) != 0;
    }
    state.spec.channels = read_u32(in);
    state.spec.time_samples = read_u32(in);
    state.spec.class_count = read_u32(in);

    state.frozen.resize(block_count);
    for (std::size_t i = 0; i < block_count; ++i) state.frozen[i] = read_u32(in) != 0;
    state.seed = read_u64(in);

    state.blocks.resize(block_count);
    for (std::size_t i = 0; i < block_count; ++i) {
        const auto bi = static_cast<std::uint32_t>(i);
        auto& p = state.blocks[i];
        p.weights = read_tensor(in, bi);
        p.bias = read_tensor(in, bi);
        p.bn_gamma = read_tensor(in, bi);
        p.bn_beta = read_tensor(in, bi);
        p.bn_mean = read_tensor(in, bi);
        p.bn_var = read_tensor(in, bi);
    }
    return state;
}

void save_model_file(const std::string& path, const ModelState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
    save_model(out, state);
}

ModelState load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    return load_model(in);
}

}  // namespace asbci
