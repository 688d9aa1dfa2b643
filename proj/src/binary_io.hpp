#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace owl::detail {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

template <typename T>
void put_le(std::ostream& os, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
    char buf[sizeof(T)];
    if (!is.read(buf, sizeof(T))) {
        throw std::invalid_argument(std::string("truncated file reading ") + what);
    }
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
    char buf[8];
    if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
        throw std::invalid_argument(std::string("bad magic, expected ") + magic);
    }
}

}  // namespace owl::detail
