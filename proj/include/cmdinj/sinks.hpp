#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cmdinj {

enum class SinkGroup { Builtin, Subprocess, Os };

std::string_view to_string(SinkGroup group);
std::optional<SinkGroup> sink_group_from_string(std::string_view s);

struct SinkEntry {
    SinkGroup group;
    std::string qualified_name;  // "eval", "subprocess.run", "os.system", ...

    bool operator==(const SinkEntry&) const = default;
};

/// The set of dangerous call targets the extractor looks for.
class SinkCatalog {
public:
    /// Throws Error{EmptyCatalog} or Error{DuplicateEntry}.
    explicit SinkCatalog(std::vector<SinkEntry> entries);

    /// The 26 builtin/subprocess/os command-execution methods.
    static SinkCatalog builtin_default();

    const std::vector<SinkEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const SinkEntry* find(std::string_view qualified_name) const;
    bool contains(std::string_view qualified_name) const { return find(qualified_name) != nullptr; }
    std::size_t count(SinkGroup group) const;

private:
    std::vector<SinkEntry> entries_;
};

/// Loads a catalog from a JSON file of the form
///   {"sinks": [{"group": "os", "qualified_name": "os.system"}, ...]}
/// or returns the built-in catalog when `source` is empty.
/// Throws Error{CatalogParseError}, Error{EmptyCatalog} or Error{DuplicateEntry}.
SinkCatalog load_sink_catalog(const std::optional<std::filesystem::path>& source = std::nullopt);

/// True for os.exec* / os.spawn* / os.posix_spawn*: entries taking an argv vector.
bool is_argv_family(std::string_view qualified_name);

}  // namespace cmdinj
