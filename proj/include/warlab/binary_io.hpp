#pragma once

#include "warlab/errors.hpp"
#include "warlab/matrix.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

namespace warlab::binary {

// Little-endian host layout is assumed for every multi-byte field.
static_assert(sizeof(double) == 8);

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }

    void bytes(const void* data, std::size_t size) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out_) throw IoError("write failed for '" + path_ + "'");
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void value(T v) {
        bytes(&v, sizeof(T));
    }

    /// rows, cols, then row-major payload.
    void matrix(const Matrix& m) {
        value<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
        value<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) value<double>(m(r, c));
        }
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("failed to finish writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path + "' for reading");
    }

    void bytes(void* data, std::size_t size) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (static_cast<std::size_t>(in_.gcount()) != size) {
            throw TruncatedFileError("'" + path_ + "' ended unexpectedly");
        }
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T value() {
        T v{};
        bytes(&v, sizeof(T));
        return v;
    }

    Matrix matrix(std::uint64_t max_entries = (1ull << 32)) {
        const auto rows = value<std::uint64_t>();
        const auto cols = value<std::uint64_t>();
        if (rows != 0 && cols > max_entries / rows) {
            throw FormatError("'" + path_ + "' declares an implausible matrix size");
        }
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = value<double>();
        }
        return m;
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace warlab::binary
