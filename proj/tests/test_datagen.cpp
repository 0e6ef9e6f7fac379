#include "cpcal/base_predictors.hpp"
#include "cpcal/datagen.hpp"
#include "cpcal/evaluation.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace cpcal;

TEST_CASE("gen_toy examples") {
    CHECK(gen_toy({0, 5}).empty());

    for (std::uint64_t seed : {0, 1, 2, 99}) {
        const auto data = gen_toy({2000, seed});
        REQUIRE(data.size() == 2000);
        std::size_t inside = 0;
        for (const auto& z : data) {
            CHECK(std::abs(z.x) <= 1.0);
            inside += std::abs(z.y - 2.0 * z.x) <= 5.0 * (std::abs(z.x) / 2.0);
        }
        CHECK(static_cast<double>(inside) >= 0.999 * 2000.0);
    }

    const auto a = gen_toy({300, 17});
    const auto b = gen_toy({300, 17});
    CHECK(a == b);
    CHECK(gen_toy({300, 18}) != a);
}

TEST_CASE("gen_toy streams are independent of the sample size") {
    const auto shorter = gen_toy({50, 8});
    const auto longer = gen_toy({80, 8});
    for (std::size_t i = 0; i < shorter.size(); ++i) CHECK(shorter[i] == longer[i]);
}

TEST_CASE("deterministic drift objects") {
    const auto data = gen_toy({200, 3, 2.0, ObjectLaw::deterministic_drift});
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(data[i].x == std::sin(static_cast<double>(i + 1) / 50.0));
    // Noise draws do not depend on the object law.
    const auto iid = gen_toy({200, 3});
    const auto z_drift = (data[10].y - 2.0 * data[10].x) / (0.5 * std::abs(data[10].x));
    const auto z_iid = (iid[10].y - 2.0 * iid[10].x) / (0.5 * std::abs(iid[10].x));
    CHECK(z_drift == doctest::Approx(z_iid).epsilon(1e-9));
}

TEST_CASE("iid-uniform objects have the moments of U[-1,1]") {
    const auto data = gen_toy({100000, 2024});
    double sum = 0.0;
    for (const auto& z : data) sum += z.x;
    const double mean = sum / 1e5;
    double var = 0.0;
    for (const auto& z : data) var += (z.x - mean) * (z.x - mean);
    var /= 1e5 - 1.0;
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("oracle PITs of generated data are uniform") {
    for (auto law : {ObjectLaw::iid_uniform, ObjectLaw::deterministic_drift}) {
        const auto data = gen_toy({100000, 77, 2.0, law});
        PitSample pits;
        for (const auto& z : data) pits.values.push_back(oracle_cdf(z.x, z.y));
        CHECK(ks_statistic(pits) < 0.01);
    }
}

TEST_CASE("random streams") {
    CHECK(substream_seed(1, Stream::objects) != substream_seed(1, Stream::noise));
    CHECK(substream_seed(1, Stream::tau, 0) != substream_seed(1, Stream::tau, 1));
    RandomStream s(5, Stream::tau);
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = s.open_uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        CHECK(std::isfinite(s.normal()));
    }
    const auto taus = uniform_taus(9, 5);
    CHECK(taus == uniform_taus(9, 5));
    CHECK(taus != uniform_taus(9, 5, 1));
}

TEST_CASE("CSV round trip is lossless") {
    const auto data = gen_toy({257, 4, 2.0, ObjectLaw::iid_uniform});
    std::stringstream csv;
    write_dataset_csv(csv, data);
    const std::string text = csv.str();
    CHECK(text.rfind("x,y\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(read_dataset_csv(csv) == data);

    std::stringstream empty;
    write_dataset_csv(empty, LabeledSequence{});
    CHECK(empty.str() == "x,y\n");
    CHECK(read_dataset_csv(empty).empty());
}

TEST_CASE("CSV parse errors") {
    std::stringstream no_header("1,2\n");
    CHECK_THROWS_AS(read_dataset_csv(no_header), ArgumentError);
    std::stringstream junk("x,y\n1,abc\n");
    CHECK_THROWS_AS(read_dataset_csv(junk), ArgumentError);
    std::stringstream trailing("x,y\n1,2z\n");
    CHECK_THROWS_AS(read_dataset_csv(trailing), ArgumentError);
    std::stringstream missing("x,y\n12\n");
    CHECK_THROWS_AS(read_dataset_csv(missing), ArgumentError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_dataset_csv(empty), ArgumentError);
}
