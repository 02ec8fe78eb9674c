#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace transgram {

/// Raised for any file-level failure; the message always names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool is_gzip_path(const std::filesystem::path& path);

/// Line reader over plain or gzip-compressed text (chosen by ".gz" extension).
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);
    ~LineReader();
    LineReader(LineReader&&) noexcept;
    LineReader& operator=(LineReader&&) noexcept;
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    /// Reads the next line without its terminator ("\n" or "\r\n").
    bool next(std::string& line);
    std::size_t line_number() const noexcept { return line_number_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::filesystem::path path_;
    std::size_t line_number_ = 0;
};

/// Writes to `<path>.tmp` and renames onto `path` in commit(). If commit() is
/// never reached the temporary file is removed, so a failed write never leaves
/// a partial file at the final path.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path path);
    ~AtomicFileWriter();
    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

    void write(std::string_view data);
    void commit();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::filesystem::path path_;
    std::filesystem::path tmp_path_;
    bool committed_ = false;
};

}  // namespace transgram
