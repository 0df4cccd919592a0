#pragma once

#include <stdexcept>
#include <string>

namespace vmslim {

// Every failure the library can report. The CLI maps all of these to the
// "data error" exit code; tests match on the specific value.
enum class Errc {
    // vdi container
    bad_signature,
    unsupported_version,
    corrupt_header,
    truncated_file,
    out_of_range,
    io_failure,
    corrupt_block_map,
    // volume / partition table
    too_short,
    gpt_unsupported,
    no_linux_partition,
    offset_out_of_range,
    // ext2
    bad_magic,
    unsupported_feature,
    corrupt,
    not_found,
    symlink_loop,
    not_a_directory,
    // catalog
    non_absolute_path,
    bad_encoding,
    // instance package
    bad_package_magic,
    hash_mismatch,
    truncated_package,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace vmslim
