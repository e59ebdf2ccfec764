#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmdinj {

// ordered_json keeps insertion order, which gives every document a stable key order.
using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

std::vector<Json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<Json>& rows);

}  // namespace cmdinj
