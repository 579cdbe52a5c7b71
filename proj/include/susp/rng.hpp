#pragma once

#include <array>
#include <cstdint>

namespace susp {

// Philox4x32-10 counter-based generator. A stream is addressed by (seed, stream);
// draws are a pure function of (seed, stream, block index), so ensemble members get
// independent, replayable streams (stream = configuration index) and parallel
// generation is reproducible by construction.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    double next_double();  // uniform in [0, 1), 53-bit
    double next_exp();     // unit-rate exponential

    // Exact Poisson sampling: product-of-uniforms inversion for small means, the
    // PTRS transformed-rejection sampler for large means.
    std::uint64_t next_poisson(double mean);

  private:
    std::array<std::uint32_t, 4> block(std::uint64_t index) const;
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t index_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

}  // namespace susp
