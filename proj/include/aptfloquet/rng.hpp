#pragma once

#include <array>
#include <cstdint>

namespace apt {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11), bit
/// compatible with Random123 and numpy.random.Philox.
///
/// Stream layout: key = {seed, stream_id}; counter = {block, 0, substream, 0}.
/// Block b yields four 64-bit words consumed in order. A uniform double is
/// (word >> 11) * 2^-53. Any (seed, stream_id, substream) triple is an
/// independent, reproducible sequence.
class Philox4x64 {
 public:
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Block generate(Block counter, Key key);
};

class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream);

  std::uint64_t next_u64();
  double next_uniform();

 private:
  Philox4x64::Key key_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  Philox4x64::Block buffer_{};
  unsigned used_ = 4;
};

}  // namespace apt
