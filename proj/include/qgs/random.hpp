#ifndef QGS_RANDOM_HPP
#define QGS_RANDOM_HPP

#include <array>
#include <cstdint>

namespace qgs {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream id).
///
/// The i-th 64-bit draw of a stream is a pure function of
/// (seed, stream_id, i), so a path produces the same numbers regardless of
/// which worker runs it or in what order. Uniform doubles are built from the
/// top 53 bits, independent of any std:: distribution implementation.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Exp(1) as -log(U), U drawn from (0, 1).
  double exponential();

  std::uint64_t draws() const { return draw_index_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t draw_index_ = 0;
  std::array<std::uint32_t, 4> block_{};
};

}  // namespace qgs

#endif  // QGS_RANDOM_HPP
