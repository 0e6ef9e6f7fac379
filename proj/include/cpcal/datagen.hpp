#pragma once

#include "cpcal/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace cpcal {

enum class ObjectLaw {
    iid_uniform,          // x_i ~ U[-1, 1] independently
    deterministic_drift,  // x_i = sin(i / 50), i = 1..n
};

struct ToyConfig {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double slope = 2.0;
    ObjectLaw drift = ObjectLaw::iid_uniform;
};

/// Independent random streams derived from one experiment seed. Adding draws to
/// one stream never shifts another.
enum class Stream : std::uint64_t {
    objects = 1,
    noise = 2,
    tau = 3,
    test_object = 4,
};

/// SplitMix64 finalizer.
std::uint64_t mix_seed(std::uint64_t value) noexcept;

/// Seed of substream `stream` of experiment `seed`; `replication` separates
/// repeated runs that share a seed.
std::uint64_t substream_seed(std::uint64_t seed, Stream stream, std::uint64_t replication = 0) noexcept;

/// 64-bit Mersenne twister on a substream, with portable uniform and normal draws.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, Stream stream, std::uint64_t replication = 0);

    /// Uniform on [0, 1), 53 random bits.
    double uniform();
    /// Uniform on the open interval (0, 1).
    double open_uniform();
    /// Standard normal by inversion.
    double normal();

private:
    std::mt19937_64 engine_;
};

/// y_i = slope * x_i + eps_i with eps_i ~ N(0, (|x_i|/2)^2). Objects come from the
/// `objects` stream (iid mode only), noise from the `noise` stream.
LabeledSequence gen_toy(const ToyConfig& config);

/// `count` independent uniform randomization variables from the tau stream.
std::vector<double> uniform_taus(std::uint64_t seed, std::size_t count, std::uint64_t replication = 0);

std::string format_double(double v);

/// CSV with header `x,y`, LF line endings, 17 significant digits.
void write_dataset_csv(std::ostream& out, ObservationSpan data);
LabeledSequence read_dataset_csv(std::istream& in);

}  // namespace cpcal
