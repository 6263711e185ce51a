#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>

namespace sievelab {

/// Engine for one random stream. Each stream is keyed by (master seed,
/// label, index) so that replications can be generated in any order, on any
/// thread, and still reproduce bit for bit.
using StreamEngine = std::mt19937_64;

std::uint64_t stream_label_hash(std::string_view label) noexcept;

StreamEngine make_stream(std::uint64_t master_seed, std::string_view label, std::uint64_t index = 0);

/// Derives a child master seed, used when one seeded job spawns nested seeded jobs.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

/// Fills `out` with i.i.d. N(0,1) draws from the given stream.
void fill_standard_normal(StreamEngine& engine, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace sievelab
