// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace oan::io {

// Little-endian byte encoding shared by the dataset and checkpoint formats.

class ByteWriter {
public:
    void bytes(std::string_view raw);
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    /// u32 length prefix followed by the raw bytes.
    void str(std::string_view s);

    const std::vector<char>& buffer() const noexcept { return buf_; }

private:
    std::vector<char> buf_;
};

/// Cursor over a byte buffer. Reads past the end throw FormatError carrying
/// the offset of the failed read.
class ByteReader {
public:
    explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

    std::string bytes(std::size_t n);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str();

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const;

    std::vector<char> data_;
    std::size_t pos_ = 0;
};

/// Reads a whole file; throws IoError naming the path.
std::vector<char> read_file(const std::filesystem::path& path);
/// Writes a whole file; throws IoError naming the path.
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

} // namespace oan::io
