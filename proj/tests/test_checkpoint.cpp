#include "doctest.h"
#include "idx_fixtures.hpp"
#include "support.hpp"

#include "warlab/checkpoint.hpp"
#include "warlab/errors.hpp"

#include <fstream>
#include <iterator>

using namespace warlab;

namespace {

std::vector<char> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
    testing::TempDir dir("ckpt");
    NetworkConfig cfg{5, 7, 3, InitScheme::NtkGaussian, 123};
    auto net = init_network(cfg, 4);
    net.layers[1](2, 3) += 0.125;
    net.output(0, 0) = -0.0;
    WarState war = WarState::with_target(12.5, 0.2, 3.25);

    const auto path = dir.path() / "ck.bin";
    save_checkpoint(path, net, war);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.net.config() == cfg);
    CHECK(loaded.net.num_classes() == 4);
    for (std::size_t h = 0; h < 3; ++h) {
        CHECK(loaded.net.layers[h] == net.layers[h]);
        CHECK(loaded.net.initial_layers()[h] == net.initial_layers()[h]);
    }
    CHECK(loaded.net.output == net.output);
    CHECK(std::signbit(loaded.net.output(0, 0)));
    REQUIRE(loaded.war.has_value());
    CHECK(loaded.war->lambda == 3.25);
    CHECK(loaded.war->zeta == 12.5);

    save_checkpoint(dir.path() / "again.bin", loaded.net, loaded.war);
    CHECK(read_all(path) == read_all(dir.path() / "again.bin"));
}

TEST_CASE("checkpoint without WAR state") {
    testing::TempDir dir("ckpt2");
    auto net = init_network({2, 3, 1, InitScheme::HeGaussian, 0}, 2);
    save_checkpoint(dir.path() / "ck.bin", net);
    CHECK_FALSE(load_checkpoint(dir.path() / "ck.bin").war.has_value());
}

TEST_CASE("corrupt checkpoints are rejected") {
    testing::TempDir dir("ckpt3");
    auto net = init_network({2, 3, 1, InitScheme::HeGaussian, 0}, 2);
    const auto path = dir.path() / "ck.bin";
    save_checkpoint(path, net);
    auto bytes = read_all(path);

    auto truncated = std::vector<unsigned char>(bytes.begin(), bytes.begin() + 40);
    testing::write_bytes(dir.path() / "short.bin", truncated);
    CHECK_THROWS_AS(load_checkpoint(dir.path() / "short.bin"), TruncatedFileError);

    auto bad = std::vector<unsigned char>(bytes.begin(), bytes.end());
    bad[0] = 'X';
    testing::write_bytes(dir.path() / "magic.bin", bad);
    CHECK_THROWS_AS(load_checkpoint(dir.path() / "magic.bin"), BadMagicError);

    auto version = std::vector<unsigned char>(bytes.begin(), bytes.end());
    version[8] = 99;
    testing::write_bytes(dir.path() / "version.bin", version);
    CHECK_THROWS_AS(load_checkpoint(dir.path() / "version.bin"), FormatError);

    CHECK_THROWS_AS(load_checkpoint(dir.path() / "missing.bin"), IoError);
}
