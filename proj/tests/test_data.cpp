#include "doctest.h"
#include "idx_fixtures.hpp"
#include "support.hpp"

#include "warlab/data.hpp"
#include "warlab/errors.hpp"

using namespace warlab;

TEST_CASE("reference IDX fixture parses byte-exactly") {
    testing::TempDir dir("idx");
    const auto images = dir.path() / "images";
    const auto labels = dir.path() / "labels";
    testing::write_reference_idx(images, labels);
    const Dataset data = load_idx(images, labels);
    REQUIRE(data.size() == 2);
    REQUIRE(data.input_dim() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(data.inputs(i, 0) == static_cast<double>(i) / 255.0);
        CHECK(data.inputs(i, 1) == static_cast<double>(i + 4) / 255.0);
    }
    CHECK(data.labels == std::vector<std::size_t>{0, 1});
    CHECK(data.num_classes == 2);
    CHECK(data.lo == 0.0);
    CHECK(data.hi == 1.0);
    CHECK_NOTHROW(data.validate());

    const Dataset first = load_idx(images, labels, 1);
    CHECK(first.size() == 1);
    CHECK(first.inputs.col(0) == data.inputs.col(0));
}

TEST_CASE("IDX errors are distinguished") {
    testing::TempDir dir("idx-bad");
    const auto images = dir.path() / "images";
    const auto labels = dir.path() / "labels";

    SUBCASE("count mismatch") {
        testing::write_bytes(images, testing::idx_images(3, 1, 1, {1, 2, 3}));
        testing::write_bytes(labels, testing::idx_labels(2, {0, 1}));
        CHECK_THROWS_AS(load_idx(images, labels), CountMismatchError);
    }
    SUBCASE("bad image magic") {
        testing::write_bytes(images, testing::idx_images(2, 1, 1, {1, 2}, 0x00000801));
        testing::write_bytes(labels, testing::idx_labels(2, {0, 1}));
        CHECK_THROWS_AS(load_idx(images, labels), BadMagicError);
    }
    SUBCASE("bad label magic") {
        testing::write_bytes(images, testing::idx_images(2, 1, 1, {1, 2}));
        testing::write_bytes(labels, testing::idx_labels(2, {0, 1}, 0x00000803));
        CHECK_THROWS_AS(load_idx(images, labels), BadMagicError);
    }
    SUBCASE("truncated pixels") {
        testing::write_bytes(images, testing::idx_images(2, 2, 2, {1, 2, 3}));
        testing::write_bytes(labels, testing::idx_labels(2, {0, 1}));
        CHECK_THROWS_AS(load_idx(images, labels), TruncatedFileError);
    }
    SUBCASE("truncated header") {
        testing::write_bytes(images, {0, 0, 8});
        testing::write_bytes(labels, testing::idx_labels(2, {0, 1}));
        CHECK_THROWS_AS(load_idx(images, labels), TruncatedFileError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_idx(dir.path() / "nope", labels), IoError);
    }
}

TEST_CASE("make_gaussians without noise places samples on class means") {
    const Dataset data = make_gaussians({3, 4, 2, 1.5, 0.0, 0});
    REQUIRE(data.size() == 12);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t c = data.labels[i];
        Vector mean = Vector::Zero(2);
        mean(static_cast<Eigen::Index>(c % 2)) = (c / 2) % 2 == 0 ? 1.5 : -1.5;
        CHECK(data.inputs.col(static_cast<Eigen::Index>(i)) == mean);
    }
    CHECK_NOTHROW(data.validate());
}

TEST_CASE("make_gaussians is deterministic and validates arguments") {
    const GaussianSpec spec{10, 3, 5, 1.0, 0.2, 42};
    const Dataset a = make_gaussians(spec);
    const Dataset b = make_gaussians(spec);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    CHECK(a.inputs.minCoeff() >= a.lo);
    CHECK(a.inputs.maxCoeff() <= a.hi);
    CHECK_THROWS_AS(make_gaussians({10, 7, 3, 1.0, 0.1, 0}), InvalidArgument);
    CHECK_THROWS_AS(make_gaussians({0, 2, 3, 1.0, 0.1, 0}), InvalidArgument);
}

TEST_CASE("dataset cache round-trips bit-exactly") {
    testing::TempDir dir("cache");
    const GaussianSpec spec{7, 3, 4, 0.8, 0.3, 5};
    const Dataset data = make_gaussians(spec);
    save_dataset_cache(dir.path() / "c.bin", data, spec);
    const auto cached = load_dataset_cache(dir.path() / "c.bin");
    CHECK(cached.spec == spec);
    CHECK(cached.data.inputs == data.inputs);
    CHECK(cached.data.labels == data.labels);
    CHECK(cached.data.lo == data.lo);
    CHECK(cached.data.hi == data.hi);

    testing::write_bytes(dir.path() / "bad.bin", {'n', 'o', 'p', 'e', 0, 0, 0, 0, 1, 0, 0, 0});
    CHECK_THROWS_AS(load_dataset_cache(dir.path() / "bad.bin"), BadMagicError);
}

TEST_CASE("gather and head") {
    const Dataset data = make_gaussians({4, 2, 3, 1.0, 0.1, 3});
    const Matrix g = data.gather({5, 1});
    CHECK(g.col(0) == data.inputs.col(5));
    CHECK(g.col(1) == data.inputs.col(1));
    CHECK(data.gather_labels({5, 1}) == std::vector<std::size_t>{data.labels[5], data.labels[1]});
    CHECK(data.head(3).size() == 3);
    CHECK(data.head(100).size() == data.size());
}
