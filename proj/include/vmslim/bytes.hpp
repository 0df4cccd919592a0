#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace vmslim {

// Random-access read-only byte container. Implementations must be safe for
// concurrent read_at calls from multiple threads.
class ByteSource {
public:
    virtual ~ByteSource() = default;

    virtual uint64_t size() const = 0;

    // Reads exactly n bytes at off into dst; throws Error(io_failure) on a
    // short or failed read, Error(out_of_range) if [off, off+n) exceeds size.
    virtual void read_at(uint64_t off, void* dst, size_t n) const = 0;
};

std::vector<uint8_t> read_bytes(const ByteSource& src, uint64_t off, size_t n);

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(std::vector<uint8_t> data) : data_(std::move(data)) {}

    uint64_t size() const override { return data_.size(); }
    void read_at(uint64_t off, void* dst, size_t n) const override;

    const std::vector<uint8_t>& data() const { return data_; }

private:
    std::vector<uint8_t> data_;
};

// pread-backed file source; the descriptor is shared by all readers.
class FileSource final : public ByteSource {
public:
    explicit FileSource(const std::string& path);
    ~FileSource() override;

    FileSource(const FileSource&) = delete;
    FileSource& operator=(const FileSource&) = delete;

    uint64_t size() const override { return size_; }
    void read_at(uint64_t off, void* dst, size_t n) const override;

    const std::string& path() const { return path_; }

private:
    std::string path_;
    int fd_ = -1;
    uint64_t size_ = 0;
};

std::shared_ptr<const ByteSource> open_source(const std::string& path);

// Sequential write target.
class ByteSink {
public:
    virtual ~ByteSink() = default;
    virtual void write(const void* data, size_t n) = 0;
};

class MemorySink final : public ByteSink {
public:
    void write(const void* data, size_t n) override {
        const auto* p = static_cast<const uint8_t*>(data);
        data_.insert(data_.end(), p, p + n);
    }

    std::vector<uint8_t>& data() { return data_; }
    const std::vector<uint8_t>& data() const { return data_; }

private:
    std::vector<uint8_t> data_;
};

class CountingSink final : public ByteSink {
public:
    void write(const void*, size_t n) override { count_ += n; }
    uint64_t count() const { return count_; }

private:
    uint64_t count_ = 0;
};

// Writes to <path>.tmp and renames on commit(), so a failed run never leaves
// a partial output file behind.
class FileSink final : public ByteSink {
public:
    explicit FileSink(const std::string& path);
    ~FileSink() override;

    FileSink(const FileSink&) = delete;
    FileSink& operator=(const FileSink&) = delete;

    void write(const void* data, size_t n) override;
    void commit();

private:
    std::string path_;
    std::string tmp_path_;
    int fd_ = -1;
    bool committed_ = false;
};

// Little-endian field accessors (all on-disk formats here are LE).
inline uint16_t get_u16le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint64_t get_u64le(const uint8_t* p) {
    return static_cast<uint64_t>(get_u32le(p)) |
           (static_cast<uint64_t>(get_u32le(p + 4)) << 32);
}

inline void put_u16le(uint8_t* p, uint16_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
}

inline void put_u32le(uint8_t* p, uint32_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
    p[2] = static_cast<uint8_t>(v >> 16);
    p[3] = static_cast<uint8_t>(v >> 24);
}

inline void put_u64le(uint8_t* p, uint64_t v) {
    put_u32le(p, static_cast<uint32_t>(v));
    put_u32le(p + 4, static_cast<uint32_t>(v >> 32));
}

} // namespace vmslim
