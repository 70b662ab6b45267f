#pragma once

#include <cstdint>
#include <filesystem>

#include "ascl/config.hpp"
#include "ascl/model.hpp"
#include "ascl/numerics.hpp"
#include "ascl/optim.hpp"

namespace ascl {

/// Everything needed to resume a run exactly.
struct Checkpoint {
    RunConfig config;
    ModelParams params;
    OptimizerState optimizer;
    Rng::State rng;
    std::uint64_t step = 0;
    std::uint64_t epochs_done = 0;
    std::uint64_t bank_capacity = 0;
    Mat bank_entries;  // oldest first

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Binary container: "ASCLCKPT", format version, then the config as JSON
/// text followed by raw little-endian doubles for every buffer.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

}  // namespace ascl
