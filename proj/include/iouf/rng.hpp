#pragma once

#include <array>
#include <cstdint>

namespace iouf {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A stream is identified by (seed, stream id).  The 64-bit seed is the
// Philox key; the stream id occupies the upper two counter words and the
// lower two words count blocks.  Every block yields four 32-bit words, i.e.
// two 53-bit uniforms or two standard normals (Box-Muller).  Streams with
// distinct ids never overlap, so replicas can run on any thread in any order
// and still reproduce bit-for-bit on a fixed platform.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block encrypt(Block counter, Key key);
};

// Channel tags mixed into stream ids so that independent random inputs of the
// same replica (field noise, initial points, shell rotations, ...) never share
// a stream.
enum class StreamChannel : std::uint32_t {
  Field = 0,
  InitialPoints = 1,
  Rotation = 2,
  Radial = 3,
  Auxiliary = 4,
};

// Stream id rule: (replica_index << 8) | channel.
std::uint64_t stream_id(std::uint64_t replica_index, StreamChannel channel);

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream);
  RngStream(std::uint64_t seed, std::uint64_t replica_index, StreamChannel channel)
      : RngStream(seed, stream_id(replica_index, channel)) {}

  // Uniform on (0, 1); never returns exactly 0 or 1.
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t blocks_consumed() const { return block_; }

 private:
  Philox4x32::Block next_block();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  double spare_uniform_ = 0.0;
  double spare_normal_ = 0.0;
  bool has_spare_uniform_ = false;
  bool has_spare_normal_ = false;
};

}  // namespace iouf
