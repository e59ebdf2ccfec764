#include "cmdinj/json_io.hpp"

#include <fstream>
#include <sstream>

#include "cmdinj/error.hpp"

namespace cmdinj {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
    write_file(path, doc.dump(2) + "\n");
}

std::vector<Json> read_jsonl_file(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<Json> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(Json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::FormatError,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<Json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    write_file(path, out);
}

}  // namespace cmdinj
