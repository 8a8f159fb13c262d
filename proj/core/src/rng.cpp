#include "svshrink/rng.hpp"

namespace svshrink {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return mix64(mix64(root) ^ (index * 0xd1b54a32d192ed03ull + 0x8cb92ba72f3d8dd7ull));
}

double uniform01(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix rademacher(Index rows, Index cols, Rng &rng) {
  Matrix d(rows, cols);
  std::uint64_t bits = 0;
  int left = 0;
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      if (left == 0) {
        bits = rng();
        left = 64;
      }
      d(i, j) = (bits & 1u) ? 1.0 : -1.0;
      bits >>= 1;
      --left;
    }
  return d;
}

} // namespace svshrink
