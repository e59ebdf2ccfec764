// make_fixture_cassette <fixtures-dir> <out.json>
//   writes the cassette
// make_fixture_cassette --check <fixtures-dir> <cassette.json>
//   exits 1 when the checked-in cassette is stale
#include <iostream>
#include <string>

#include "support/fixture_cassette.hpp"

int main(int argc, char** argv) {
    const bool check = argc == 4 && std::string(argv[1]) == "--check";
    if (argc != 3 && !check) {
        std::cerr << "usage: make_fixture_cassette [--check] <fixtures-dir> <cassette.json>\n";
        return 2;
    }
    const std::filesystem::path fixtures = argv[check ? 2 : 1];
    const std::filesystem::path target = argv[check ? 3 : 2];
    try {
        const auto built = fixture::build_cassette(fixtures);
        if (!check) {
            built.save(target);
            std::cout << built.entries().size() << " entries written to " << target.string() << "\n";
            return 0;
        }
        const auto stored = cmdinj::Cassette::load(target);
        if (stored.to_json() != built.to_json()) {
            std::cerr << "cassette is stale; regenerate with make_fixture_cassette\n";
            return 1;
        }
        std::cout << "cassette up to date (" << built.entries().size() << " entries)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
