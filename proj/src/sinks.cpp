#include "cmdinj/sinks.hpp"

#include <algorithm>
#include <set>

#include "cmdinj/error.hpp"
#include "cmdinj/json_io.hpp"

namespace cmdinj {

std::string_view to_string(SinkGroup group) {
    switch (group) {
        case SinkGroup::Builtin: return "builtin";
        case SinkGroup::Subprocess: return "subprocess";
        case SinkGroup::Os: return "os";
    }
    return "builtin";
}

std::optional<SinkGroup> sink_group_from_string(std::string_view s) {
    for (auto g : {SinkGroup::Builtin, SinkGroup::Subprocess, SinkGroup::Os}) {
        if (to_string(g) == s) return g;
    }
    return std::nullopt;
}

SinkCatalog::SinkCatalog(std::vector<SinkEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw Error(ErrorCode::EmptyCatalog, "sink catalog has no entries");
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.qualified_name.empty()) throw Error(ErrorCode::CatalogParseError, "sink with empty name");
        if (!seen.insert(e.qualified_name).second) throw Error(ErrorCode::DuplicateEntry, e.qualified_name);
    }
}

SinkCatalog SinkCatalog::builtin_default() {
    std::vector<SinkEntry> entries;
    for (const char* name : {"exec", "eval"}) entries.push_back({SinkGroup::Builtin, name});
    for (const char* name : {"call", "run", "Popen", "check_output"}) {
        entries.push_back({SinkGroup::Subprocess, std::string("subprocess.") + name});
    }
    for (const char* name : {"popen", "system", "spawnl", "spawnle", "spawnlp", "spawnlpe", "spawnv", "spawnve",
                             "spawnvp", "spawnvpe", "posix_spawn", "posix_spawnp", "execl", "execle", "execlp",
                             "execlpe", "execv", "execve", "execvp", "execvpe"}) {
        entries.push_back({SinkGroup::Os, std::string("os.") + name});
    }
    return SinkCatalog(std::move(entries));
}

const SinkEntry* SinkCatalog::find(std::string_view qualified_name) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const SinkEntry& e) { return e.qualified_name == qualified_name; });
    return it == entries_.end() ? nullptr : &*it;
}

std::size_t SinkCatalog::count(SinkGroup group) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [&](const SinkEntry& e) { return e.group == group; }));
}

SinkCatalog load_sink_catalog(const std::optional<std::filesystem::path>& source) {
    if (!source) return SinkCatalog::builtin_default();
    Json doc;
    try {
        doc = Json::parse(read_file(*source));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CatalogParseError, source->string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("sinks") || !doc["sinks"].is_array()) {
        throw Error(ErrorCode::CatalogParseError, source->string() + ": expected {\"sinks\": [...]}");
    }
    std::vector<SinkEntry> entries;
    for (const auto& item : doc["sinks"]) {
        if (!item.is_object() || !item.contains("group") || !item.contains("qualified_name") ||
            !item["group"].is_string() || !item["qualified_name"].is_string()) {
            throw Error(ErrorCode::CatalogParseError, source->string() + ": malformed sink entry");
        }
        const auto group = sink_group_from_string(item["group"].get<std::string>());
        if (!group) throw Error(ErrorCode::CatalogParseError, "unknown sink group " + item["group"].dump());
        entries.push_back({*group, item["qualified_name"].get<std::string>()});
    }
    return SinkCatalog(std::move(entries));
}

bool is_argv_family(std::string_view name) {
    return name.starts_with("os.exec") || name.starts_with("os.spawn") || name.starts_with("os.posix_spawn");
}

}  // namespace cmdinj
