#pragma once

#include <milwsi/error.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace milwsi::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Little-endian append-only byte sink.
class ByteWriter {
public:
    void bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    template <typename T>
    void put(T value)
    {
        bytes(&value, sizeof(T));
    }
    void text(std::string_view s) { bytes(s.data(), s.size()); }

    std::vector<std::uint8_t>& buffer() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

    template <typename T>
    T get()
    {
        T value;
        need(sizeof(T));
        std::memcpy(&value, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string text(std::size_t n)
    {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (buf_.size() - pos_ < n)
            throw FormatError(what_ + ": truncated file");
    }

    const std::vector<std::uint8_t>& buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace milwsi::detail
