#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace impnet::binio {

static_assert(std::endian::native == std::endian::little,
              "file/wire codecs assume a little-endian host");

// ---- little-endian buffer writer/reader (file formats) ----

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(v); }
    void f32(float v) { put(v); }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void magic(const char tag[4]) { bytes(tag, 4); }

    const std::vector<std::uint8_t>& data() const { return buf_; }

private:
    template <typename T>
    void put(T v) {
        std::uint8_t tmp[sizeof(T)];
        std::memcpy(tmp, &v, sizeof(T));
        buf_.insert(buf_.end(), tmp, tmp + sizeof(T));
    }
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size, std::string context)
        : data_(data), size_(size), context_(std::move(context)) {}

    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint16_t u16() { return get<std::uint16_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return get<double>(); }
    float f32() { return get<float>(); }

    void expect_magic(const char tag[4]) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, tag, 4) != 0) {
            fail("bad magic, expected '" + std::string(tag, 4) + "'", pos_ - 4);
        }
    }

    void raw(void* out, std::size_t n) {
        if (pos_ + n > size_) {
            fail("truncated, need " + std::to_string(n) + " more bytes", pos_);
        }
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw std::runtime_error(context_ + ": " + what + " (byte offset " +
                                 std::to_string(at) + ")");
    }

private:
    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string context_;
};

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace impnet::binio
