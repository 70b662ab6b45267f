#include "ascl/checkpoint.hpp"

#include <fstream>

#include "ascl/binio.hpp"

namespace ascl {

namespace {

constexpr std::string_view kMagic = "ASCLCKPT";
constexpr std::uint32_t kVersion = 1;

void write_network(std::ostream& os, const Network& net) {
    binio::write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
    binio::write_u32(os, net.relu_on_output ? 1 : 0);
    for (const DenseLayer& l : net.layers) {
        binio::write_u32(os, static_cast<std::uint32_t>(l.weight.rows));
        binio::write_u32(os, static_cast<std::uint32_t>(l.weight.cols));
        binio::write_f64s(os, l.weight.values);
        binio::write_f64s(os, l.bias);
    }
}

Network read_network(std::istream& is) {
    Network net;
    const std::uint32_t layers = binio::read_u32(is);
    if (layers > 1024) {
        fail(ErrorCode::Format, "checkpoint: implausible layer count");
    }
    net.relu_on_output = binio::read_u32(is) != 0;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = binio::read_u32(is);
        const std::uint32_t cols = binio::read_u32(is);
        if (std::uint64_t{rows} * cols > (std::uint64_t{1} << 28)) {
            fail(ErrorCode::Format, "checkpoint: layer too large");
        }
        DenseLayer layer{Mat(rows, cols), {}};
        layer.weight.values = binio::read_f64s(is, std::size_t{rows} * cols);
        layer.bias = binio::read_f64s(is, rows);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    binio::write_magic(os, kMagic);
    binio::write_u32(os, kVersion);
    binio::write_string(os, to_json(ckpt.config).dump());
    binio::write_string(os, to_json(ckpt.params.spec).dump());
    write_network(os, ckpt.params.online.encoder);
    write_network(os, ckpt.params.online.projector);
    write_network(os, ckpt.params.online.predictor);
    write_network(os, ckpt.params.momentum_encoder);
    write_network(os, ckpt.params.momentum_projector);
    binio::write_u64(os, ckpt.params.version);

    binio::write_u64(os, ckpt.optimizer.step);
    binio::write_u64(os, ckpt.optimizer.velocity.size());
    for (const Vec& v : ckpt.optimizer.velocity) {
        binio::write_u64(os, v.size());
        binio::write_f64s(os, v);
    }

    binio::write_u64(os, ckpt.rng.key);
    binio::write_u64(os, ckpt.rng.counter);
    binio::write_u64(os, ckpt.step);
    binio::write_u64(os, ckpt.epochs_done);

    binio::write_u64(os, ckpt.bank_capacity);
    binio::write_u64(os, ckpt.bank_entries.rows);
    binio::write_u64(os, ckpt.bank_entries.cols);
    binio::write_f64s(os, ckpt.bank_entries.values);
}

Checkpoint read_checkpoint(std::istream& is) {
    binio::expect_magic(is, kMagic);
    const std::uint32_t version = binio::read_u32(is);
    if (version != kVersion) {
        fail(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    try {
        c.config = config_from_json(nlohmann::json::parse(binio::read_string(is)));
        c.params.spec = mlp_spec_from_json(nlohmann::json::parse(binio::read_string(is)));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, std::string("checkpoint: bad embedded JSON: ") + e.what());
    }
    c.params.online.encoder = read_network(is);
    c.params.online.projector = read_network(is);
    c.params.online.predictor = read_network(is);
    c.params.momentum_encoder = read_network(is);
    c.params.momentum_projector = read_network(is);
    c.params.version = binio::read_u64(is);

    c.optimizer.step = binio::read_u64(is);
    const std::uint64_t buffers = binio::read_u64(is);
    if (buffers > 4096) {
        fail(ErrorCode::Format, "checkpoint: implausible optimizer buffer count");
    }
    for (std::uint64_t i = 0; i < buffers; ++i) {
        const std::uint64_t n = binio::read_u64(is);
        if (n > (std::uint64_t{1} << 28)) {
            fail(ErrorCode::Format, "checkpoint: optimizer buffer too large");
        }
        c.optimizer.velocity.push_back(binio::read_f64s(is, n));
    }

    c.rng.key = binio::read_u64(is);
    c.rng.counter = binio::read_u64(is);
    c.step = binio::read_u64(is);
    c.epochs_done = binio::read_u64(is);

    c.bank_capacity = binio::read_u64(is);
    const std::uint64_t rows = binio::read_u64(is);
    const std::uint64_t cols = binio::read_u64(is);
    if (rows > c.bank_capacity || rows * cols > (std::uint64_t{1} << 28)) {
        fail(ErrorCode::Format, "checkpoint: bank section out of range");
    }
    c.bank_entries = Mat(rows, cols);
    c.bank_entries.values = binio::read_f64s(is, rows * cols);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    }
    write_checkpoint(os, ckpt);
    if (!os.flush()) {
        fail(ErrorCode::Io, "write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(ErrorCode::Io, "cannot open " + path.string());
    }
    return read_checkpoint(is);
}

}  // namespace ascl
