#include "sievelab/rng.hpp"

#include <cstdlib>
#include <string>
#include <thread>

#include "sievelab/parallel.hpp"

namespace sievelab {

namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t stream_label_hash(std::string_view label) noexcept {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

StreamEngine make_stream(std::uint64_t master_seed, std::string_view label, std::uint64_t index) {
  const std::uint64_t label_hash = stream_label_hash(label);
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(label_hash ^ a);
  const std::uint64_t c = splitmix64(index ^ b);
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(label_hash), static_cast<std::uint32_t>(label_hash >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return StreamEngine(seq);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed ^ stream_label_hash(label)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

void fill_standard_normal(StreamEngine& engine, Eigen::Ref<Eigen::VectorXd> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal(engine);
}

int default_thread_count() {
  if (const char* env = std::getenv("SIEVE_LAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace sievelab
