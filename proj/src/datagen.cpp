#include "cpcal/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace cpcal {

std::uint64_t mix_seed(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, Stream stream, std::uint64_t replication) noexcept {
    return mix_seed(mix_seed(mix_seed(seed) ^ static_cast<std::uint64_t>(stream)) ^ replication);
}

RandomStream::RandomStream(std::uint64_t seed, Stream stream, std::uint64_t replication)
    : engine_(substream_seed(seed, stream, replication)) {}

double RandomStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::open_uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
    return normal_quantile(open_uniform());
}

LabeledSequence gen_toy(const ToyConfig& config) {
    RandomStream objects(config.seed, Stream::objects);
    RandomStream noise(config.seed, Stream::noise);
    LabeledSequence out(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        const double x = config.drift == ObjectLaw::iid_uniform ? 2.0 * objects.uniform() - 1.0
                                                                : std::sin(static_cast<double>(i + 1) / 50.0);
        const double eps = 0.5 * std::abs(x) * noise.normal();
        out[i] = {x, config.slope * x + eps};
    }
    return out;
}

std::vector<double> uniform_taus(std::uint64_t seed, std::size_t count, std::uint64_t replication) {
    RandomStream stream(seed, Stream::tau, replication);
    std::vector<double> taus(count);
    for (auto& t : taus) t = stream.uniform();
    return taus;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_dataset_csv(std::ostream& out, ObservationSpan data) {
    out << "x,y\n";
    for (const auto& z : data) out << format_double(z.x) << ',' << format_double(z.y) << '\n';
}

LabeledSequence read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ArgumentError("dataset csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y") throw ArgumentError("dataset csv: header must be 'x,y'");

    LabeledSequence data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ArgumentError("dataset csv: line " + std::to_string(line_no) + " has no comma");
        }
        try {
            std::size_t used_x = 0;
            std::size_t used_y = 0;
            const std::string xs = line.substr(0, comma);
            const std::string ys = line.substr(comma + 1);
            const double x = std::stod(xs, &used_x);
            const double y = std::stod(ys, &used_y);
            if (used_x != xs.size() || used_y != ys.size() || !std::isfinite(x) || !std::isfinite(y)) {
                throw std::invalid_argument("trailing characters");
            }
            data.push_back({x, y});
        } catch (const std::exception&) {
            throw ArgumentError("dataset csv: cannot parse line " + std::to_string(line_no));
        }
    }
    return data;
}

}  // namespace cpcal
