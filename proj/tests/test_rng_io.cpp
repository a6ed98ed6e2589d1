#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "kpo/io.hpp"
#include "kpo/rng.hpp"

using namespace kpo;
namespace fs = std::filesystem;

TEST_CASE("splitmix64 reference stream") {
    Splitmix64 gen(0);
    CHECK(gen.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(gen.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(gen.next_u64() == 0x06C45D188009454FULL);

    Splitmix64 seeded(1234567);
    CHECK(seeded.next_u64() == 0x599ED017FB08FC85ULL);
    CHECK(seeded.next_u64() == 0x2C73F08458540FA5ULL);
}

TEST_CASE("unit draws are in (0, 1]") {
    Splitmix64 gen(99);
    for (int k = 0; k < 10000; ++k) {
        const double u = gen.next_unit();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("substreams are deterministic and decorrelated") {
    Splitmix64 a = substream(42, 0);
    Splitmix64 a2 = substream(42, 0);
    Splitmix64 b = substream(42, 1);
    const std::uint64_t va = a.next_u64();
    CHECK(va == a2.next_u64());
    CHECK(va != b.next_u64());
}

TEST_CASE("box-muller moments") {
    GaussianDraw gauss(Splitmix64(7));
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const double z = gauss.next();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("format_double round-trips bit-exactly") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> samples{0.0, 1.0, -1.0, 1e-300, -1e300, M_PI, 0.1};
    for (int k = 0; k < 200; ++k) samples.push_back(std::ldexp(u(gen), (k % 120) - 60));
    for (double x : samples) {
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("csv writer emits header and 17-digit rows") {
    const fs::path path = fs::temp_directory_path() / "kpo_test_csv.csv";
    {
        CsvWriter csv(path);
        csv.header({"a", "b"});
        csv.row({1.0 / 3.0, 2.0});
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,b");
    std::getline(in, line);
    CHECK(line.substr(0, 20) == "0.33333333333333331,");
    fs::remove(path);
}

TEST_CASE("fnv1a64 digest of a known payload") {
    const fs::path path = fs::temp_directory_path() / "kpo_test_digest.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "hello";
    }
    CHECK(fnv1a64_hex(path) == "a430d84680aabd0b");
    fs::remove(path);
}
