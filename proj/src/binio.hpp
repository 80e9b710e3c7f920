#pragma once

// Little-endian binary file helpers shared by the dataset and checkpoint
// formats. Internal to the library.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "cbs/errors.hpp"

namespace cbs::binio {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<unsigned char>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t crc_of(const std::vector<unsigned char>& buf) {
    return static_cast<std::uint32_t>(::crc32(0UL, buf.data(), static_cast<uInt>(buf.size())));
}

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot open " + path);
    }

    void read(unsigned char* dst, std::size_t n) {
        in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated file: " + path_);
    }

    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

private:
    std::ifstream in_;
    std::string path_;
};

class Writer {
public:
    explicit Writer(const std::string& path)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }

    void write(const std::vector<unsigned char>& buf) {
        out_.write(reinterpret_cast<const char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size()));
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failure: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace cbs::binio
