#include "ctxsearch/random.hpp"

#include <cmath>
#include <numbers>

namespace ctxsearch {

double Rng::normal() {
  // 1 - u keeps the argument of log in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::size_t Rng::index(std::size_t n) {
  const u128 wide = static_cast<u128>(engine_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ splitmix64(b ^ 0x5851f42d4c957f2dULL));
}

}  // namespace ctxsearch
