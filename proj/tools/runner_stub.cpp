// Stand-in for runner_shim.py that never runs Python. It picks the first
// canned record whose "contains" snippets all occur in the test file and
// whose "absent" snippets do not, optionally deletes the sentinel, and prints
// the record as the shim would.
//
//   runner_stub <records.json> <test_file>
//
// records.json: {"records": [{"contains": [...], "absent": [...],
//                             "delete_sentinel": false, "record": {...}}],
//                "default": {...}}
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool matches(const json& rule, const std::string& code) {
    for (const auto& s : rule.value("contains", json::array())) {
        if (code.find(s.get<std::string>()) == std::string::npos) return false;
    }
    for (const auto& s : rule.value("absent", json::array())) {
        if (code.find(s.get<std::string>()) != std::string::npos) return false;
    }
    return true;
}

json complete(json record) {
    if (!record.contains("error_kind")) record["error_kind"] = nullptr;
    if (!record.contains("duration_ms")) record["duration_ms"] = 0;
    if (!record.contains("stdout")) record["stdout"] = "";
    if (!record.contains("stderr")) record["stderr"] = "";
    return record;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: runner_stub <records.json> <test_file>\n";
        return 2;
    }
    try {
        const auto doc = json::parse(slurp(argv[1]));
        const fs::path test = argv[2];
        const auto code = slurp(test);
        json chosen = doc.value("default", json{{"status", "error"}, {"error_kind", "NoCannedRecord"}});
        for (const auto& rule : doc.value("records", json::array())) {
            if (!matches(rule, code)) continue;
            if (rule.value("delete_sentinel", false)) fs::remove(test.parent_path() / "sentinel.txt");
            chosen = rule.at("record");
            break;
        }
        std::cout << complete(chosen).dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runner_stub: " << e.what() << "\n";
        return 1;
    }
}
