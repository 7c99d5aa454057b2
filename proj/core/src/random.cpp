#include "gsax/random.hpp"

namespace gsax {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_a,
                          std::uint64_t stream_b) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ splitmix64(stream_a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(stream_b + 0x85157af5ULL));
  return h;
}

}  // namespace gsax
