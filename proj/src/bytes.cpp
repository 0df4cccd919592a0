#include "vmslim/bytes.hpp"

#include "vmslim/error.hpp"

#include <cerrno>
#include <cstdio>
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace vmslim {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::bad_signature: return "bad_signature";
    case Errc::unsupported_version: return "unsupported_version";
    case Errc::corrupt_header: return "corrupt_header";
    case Errc::truncated_file: return "truncated_file";
    case Errc::out_of_range: return "out_of_range";
    case Errc::io_failure: return "io_failure";
    case Errc::corrupt_block_map: return "corrupt_block_map";
    case Errc::too_short: return "too_short";
    case Errc::gpt_unsupported: return "gpt_unsupported";
    case Errc::no_linux_partition: return "no_linux_partition";
    case Errc::offset_out_of_range: return "offset_out_of_range";
    case Errc::bad_magic: return "bad_magic";
    case Errc::unsupported_feature: return "unsupported_feature";
    case Errc::corrupt: return "corrupt";
    case Errc::not_found: return "not_found";
    case Errc::symlink_loop: return "symlink_loop";
    case Errc::not_a_directory: return "not_a_directory";
    case Errc::non_absolute_path: return "non_absolute_path";
    case Errc::bad_encoding: return "bad_encoding";
    case Errc::bad_package_magic: return "bad_package_magic";
    case Errc::hash_mismatch: return "hash_mismatch";
    case Errc::truncated_package: return "truncated_package";
    }
    return "unknown";
}

std::vector<uint8_t> read_bytes(const ByteSource& src, uint64_t off, size_t n) {
    std::vector<uint8_t> buf(n);
    if (n > 0)
        src.read_at(off, buf.data(), n);
    return buf;
}

void MemorySource::read_at(uint64_t off, void* dst, size_t n) const {
    if (off > data_.size() || n > data_.size() - off)
        fail(Errc::out_of_range, "read past end of memory source");
    std::memcpy(dst, data_.data() + off, n);
}

FileSource::FileSource(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0)
        fail(Errc::io_failure, "cannot open " + path + ": " + std::strerror(errno));
    struct stat st{};
    if (::fstat(fd_, &st) != 0) {
        int e = errno;
        ::close(fd_);
        fd_ = -1;
        fail(Errc::io_failure, "cannot stat " + path + ": " + std::strerror(e));
    }
    size_ = static_cast<uint64_t>(st.st_size);
}

FileSource::~FileSource() {
    if (fd_ >= 0)
        ::close(fd_);
}

void FileSource::read_at(uint64_t off, void* dst, size_t n) const {
    if (off > size_ || n > size_ - off)
        fail(Errc::out_of_range, "read past end of " + path_);
    auto* p = static_cast<uint8_t*>(dst);
    size_t done = 0;
    while (done < n) {
        ssize_t r = ::pread(fd_, p + done, n - done, static_cast<off_t>(off + done));
        if (r < 0) {
            if (errno == EINTR)
                continue;
            fail(Errc::io_failure, "read error on " + path_ + ": " + std::strerror(errno));
        }
        if (r == 0)
            fail(Errc::io_failure, "unexpected end of " + path_);
        done += static_cast<size_t>(r);
    }
}

std::shared_ptr<const ByteSource> open_source(const std::string& path) {
    return std::make_shared<FileSource>(path);
}

FileSink::FileSink(const std::string& path) : path_(path), tmp_path_(path + ".tmp") {
    fd_ = ::open(tmp_path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd_ < 0)
        fail(Errc::io_failure, "cannot create " + tmp_path_ + ": " + std::strerror(errno));
}

FileSink::~FileSink() {
    if (fd_ >= 0)
        ::close(fd_);
    if (!committed_)
        ::unlink(tmp_path_.c_str());
}

void FileSink::write(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    size_t done = 0;
    while (done < n) {
        ssize_t w = ::write(fd_, p + done, n - done);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            fail(Errc::io_failure, "write error on " + tmp_path_ + ": " + std::strerror(errno));
        }
        done += static_cast<size_t>(w);
    }
}

void FileSink::commit() {
    if (::fsync(fd_) != 0 || ::close(fd_) != 0) {
        fd_ = -1;
        fail(Errc::io_failure, "flush error on " + tmp_path_ + ": " + std::strerror(errno));
    }
    fd_ = -1;
    if (::rename(tmp_path_.c_str(), path_.c_str()) != 0)
        fail(Errc::io_failure, "cannot rename " + tmp_path_ + " to " + path_ + ": " +
                                   std::strerror(errno));
    committed_ = true;
}

} // namespace vmslim
