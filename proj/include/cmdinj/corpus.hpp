#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmdinj/json_io.hpp"

namespace cmdinj {

inline constexpr std::string_view kSourceExtension = ".py";

struct SourceFileRecord {
    std::string relative_path;   // generic ('/'-separated) form, relative to the manifest root
    std::uint64_t loc = 0;       // raw newline count
    std::string content_digest;  // sha256 of the file bytes

    bool operator==(const SourceFileRecord&) const = default;
};

struct SkippedFile {
    std::string relative_path;
    std::string reason;

    bool operator==(const SkippedFile&) const = default;
};

/// Result of walking a checked-out repository. Immutable once built.
struct FileManifest {
    std::filesystem::path root;
    std::vector<SourceFileRecord> files;  // source files only, sorted by relative_path
    std::vector<SkippedFile> skipped;
    std::uint64_t total_files = 0;        // every regular file under root
    std::uint64_t python_files = 0;
    std::uint64_t python_loc = 0;

    bool operator==(const FileManifest&) const = default;
};

/// Walks `root` without following symlinks. Files whose relative path or file
/// name matches any of `ignore_patterns` (fnmatch syntax) are not counted as
/// source files. Unreadable or non-UTF-8 source files land in `skipped`.
FileManifest scan_repo(const std::filesystem::path& root,
                       const std::vector<std::string>& ignore_patterns = {});

bool is_valid_utf8(std::string_view bytes);
std::uint64_t count_newlines(std::string_view bytes);

Json manifest_to_json(const FileManifest& manifest);
FileManifest manifest_from_json(const Json& doc);

}  // namespace cmdinj
