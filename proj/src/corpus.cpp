#include "cmdinj/corpus.hpp"

#include <algorithm>
#include <fnmatch.h>

#include "cmdinj/digest.hpp"
#include "cmdinj/error.hpp"

namespace cmdinj {

namespace fs = std::filesystem;

namespace {

bool matches_any(const std::vector<std::string>& patterns, const std::string& rel_path) {
    const auto slash = rel_path.find_last_of('/');
    const std::string name = slash == std::string::npos ? rel_path : rel_path.substr(slash + 1);
    return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
        return ::fnmatch(p.c_str(), rel_path.c_str(), 0) == 0 ||
               ::fnmatch(p.c_str(), name.c_str(), 0) == 0;
    });
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

std::uint64_t count_newlines(std::string_view bytes) {
    return static_cast<std::uint64_t>(std::count(bytes.begin(), bytes.end(), '\n'));
}

FileManifest scan_repo(const fs::path& root, const std::vector<std::string>& ignore_patterns) {
    std::error_code ec;
    const auto status = fs::status(root, ec);
    if (ec || !fs::exists(status)) throw Error(ErrorCode::RootNotFound, root.string());
    if (!fs::is_directory(status)) throw Error(ErrorCode::RootNotFound, root.string() + " is not a directory");

    FileManifest manifest;
    manifest.root = root;

    fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
    if (ec) throw Error(ErrorCode::PermissionDenied, root.string() + ": " + ec.message());

    std::vector<std::string> source_paths;
    for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
        if (ec) {
            // unreadable subdirectory: record it and keep walking
            manifest.skipped.push_back({fs::relative(it->path(), root).generic_string(), ec.message()});
            ec.clear();
            continue;
        }
        const auto& entry = *it;
        if (entry.is_symlink(ec)) {
            it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec)) continue;
        ++manifest.total_files;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (entry.path().extension() != kSourceExtension) continue;
        if (matches_any(ignore_patterns, rel)) continue;
        source_paths.push_back(rel);
    }

    std::sort(source_paths.begin(), source_paths.end());
    for (const auto& rel : source_paths) {
        std::string bytes;
        try {
            bytes = read_file(root / rel);
        } catch (const Error&) {
            manifest.skipped.push_back({rel, "permission denied"});
            continue;
        }
        if (!is_valid_utf8(bytes)) {
            manifest.skipped.push_back({rel, "not valid UTF-8"});
            continue;
        }
        SourceFileRecord rec{rel, count_newlines(bytes), sha256_hex(bytes)};
        manifest.python_loc += rec.loc;
        manifest.files.push_back(std::move(rec));
    }
    manifest.python_files = manifest.files.size();
    std::sort(manifest.skipped.begin(), manifest.skipped.end(),
              [](const SkippedFile& a, const SkippedFile& b) { return a.relative_path < b.relative_path; });
    return manifest;
}

Json manifest_to_json(const FileManifest& m) {
    Json files = Json::array();
    for (const auto& f : m.files) {
        files.push_back({{"path", f.relative_path}, {"loc", f.loc}, {"digest", f.content_digest}});
    }
    Json skipped = Json::array();
    for (const auto& s : m.skipped) skipped.push_back({{"path", s.relative_path}, {"reason", s.reason}});
    return Json{{"root", m.root.string()},
                {"files", std::move(files)},
                {"skipped", std::move(skipped)},
                {"totals",
                 {{"total_files", m.total_files}, {"python_files", m.python_files}, {"python_loc", m.python_loc}}}};
}

FileManifest manifest_from_json(const Json& doc) {
    try {
        FileManifest m;
        m.root = doc.at("root").get<std::string>();
        for (const auto& f : doc.at("files")) {
            m.files.push_back({f.at("path").get<std::string>(), f.at("loc").get<std::uint64_t>(),
                               f.at("digest").get<std::string>()});
        }
        if (doc.contains("skipped")) {
            for (const auto& s : doc.at("skipped")) {
                m.skipped.push_back({s.at("path").get<std::string>(), s.at("reason").get<std::string>()});
            }
        }
        const auto& totals = doc.at("totals");
        m.total_files = totals.at("total_files").get<std::uint64_t>();
        m.python_files = totals.at("python_files").get<std::uint64_t>();
        m.python_loc = totals.at("python_loc").get<std::uint64_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("manifest: ") + e.what());
    }
}

}  // namespace cmdinj
