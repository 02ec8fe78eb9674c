#include "transgram/io.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace transgram {

namespace fs = std::filesystem;

bool is_gzip_path(const fs::path& path) { return path.extension() == ".gz"; }

namespace {

std::string describe(const fs::path& path, std::string_view what) {
    std::string msg(what);
    msg += ": ";
    msg += path.string();
    if (errno != 0) {
        msg += " (";
        msg += std::strerror(errno);
        msg += ')';
    }
    return msg;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

struct LineReader::Impl {
    std::ifstream plain;
    gzFile gz = nullptr;

    ~Impl() {
        if (gz != nullptr) gzclose(gz);
    }
};

LineReader::LineReader(const fs::path& path) : impl_(std::make_unique<Impl>()), path_(path) {
    errno = 0;
    if (is_gzip_path(path)) {
        impl_->gz = gzopen(path.c_str(), "rb");
        if (impl_->gz == nullptr) throw IoError(describe(path, "cannot open for reading"));
        gzbuffer(impl_->gz, 1 << 17);
    } else {
        impl_->plain.open(path, std::ios::binary);
        if (!impl_->plain) throw IoError(describe(path, "cannot open for reading"));
    }
}

LineReader::~LineReader() = default;
LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
    line.clear();
    if (impl_->gz == nullptr) {
        if (!std::getline(impl_->plain, line)) {
            if (impl_->plain.bad()) throw IoError(describe(path_, "read error"));
            return false;
        }
        strip_cr(line);
        ++line_number_;
        return true;
    }

    char buf[8192];
    bool got_any = false;
    while (gzgets(impl_->gz, buf, sizeof buf) != nullptr) {
        got_any = true;
        const std::size_t len = std::strlen(buf);
        if (len > 0 && buf[len - 1] == '\n') {
            line.append(buf, len - 1);
            strip_cr(line);
            ++line_number_;
            return true;
        }
        line.append(buf, len);
    }
    int errnum = 0;
    gzerror(impl_->gz, &errnum);
    if (errnum != Z_OK && errnum != Z_STREAM_END) throw IoError(describe(path_, "gzip read error"));
    if (!got_any) return false;
    strip_cr(line);
    ++line_number_;
    return true;
}

struct AtomicFileWriter::Impl {
    std::FILE* plain = nullptr;
    gzFile gz = nullptr;

    void close() {
        if (plain != nullptr) {
            std::fclose(plain);
            plain = nullptr;
        }
        if (gz != nullptr) {
            gzclose(gz);
            gz = nullptr;
        }
    }
    ~Impl() { close(); }
};

AtomicFileWriter::AtomicFileWriter(fs::path path)
    : impl_(std::make_unique<Impl>()), path_(std::move(path)), tmp_path_(path_.string() + ".tmp") {
    errno = 0;
    if (is_gzip_path(path_)) {
        impl_->gz = gzopen(tmp_path_.c_str(), "wb6");
        if (impl_->gz == nullptr) throw IoError(describe(path_, "cannot open for writing"));
    } else {
        impl_->plain = std::fopen(tmp_path_.c_str(), "wb");
        if (impl_->plain == nullptr) throw IoError(describe(path_, "cannot open for writing"));
    }
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        impl_->close();
        std::error_code ec;
        fs::remove(tmp_path_, ec);
    }
}

void AtomicFileWriter::write(std::string_view data) {
    if (data.empty()) return;
    errno = 0;
    if (impl_->gz != nullptr) {
        if (gzwrite(impl_->gz, data.data(), static_cast<unsigned>(data.size())) != static_cast<int>(data.size())) {
            throw IoError(describe(path_, "write error"));
        }
    } else if (std::fwrite(data.data(), 1, data.size(), impl_->plain) != data.size()) {
        throw IoError(describe(path_, "write error"));
    }
}

void AtomicFileWriter::commit() {
    errno = 0;
    bool ok = true;
    if (impl_->gz != nullptr) {
        ok = gzclose(impl_->gz) == Z_OK;
        impl_->gz = nullptr;
    } else if (impl_->plain != nullptr) {
        ok = std::fflush(impl_->plain) == 0;
        ok = std::fclose(impl_->plain) == 0 && ok;
        impl_->plain = nullptr;
    }
    if (!ok) throw IoError(describe(path_, "error closing"));
    std::error_code ec;
    fs::rename(tmp_path_, path_, ec);
    if (ec) throw IoError("cannot rename " + tmp_path_.string() + " to " + path_.string() + ": " + ec.message());
    committed_ = true;
}

}  // namespace transgram
