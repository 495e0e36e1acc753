// Writes the toy reference assets, a catalog over them and two ready-to-run
// configs into a directory.

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/retrieval/catalog.hpp"
#include "mt3d/scene/toy_assets.hpp"

namespace fs = std::filesystem;
using namespace mt3d;

namespace {

void write_config(const fs::path& path, const std::string& prompt, int geometry, int texture, int size) {
    std::ofstream out(path);
    out << "{\n"
        << "  \"prompt\": \"" << prompt << "\",\n"
        << "  \"catalog\": \"catalog.jsonl\",\n"
        << "  \"output\": \"runs/" << path.stem().string() << "\",\n"
        << "  \"seed\": 0,\n"
        << "  \"stage\": {\"geometry_steps\": " << geometry << ", \"texture_steps\": " << texture << "},\n"
        << "  \"guidance\": {\"width\": " << size << ", \"height\": " << size << "}\n"
        << "}\n";
    if (!out) throw ConfigError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Write toy assets, a catalog and sample configs"};
    fs::path dir;
    int geometry = 2000, texture = 2000, size = 64;
    app.add_option("dir", dir, "Output directory")->required();
    app.add_option("--geometry-steps", geometry);
    app.add_option("--texture-steps", texture);
    app.add_option("--size", size, "Render width and height");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(dir);
        const std::vector<std::pair<std::string, std::string>> items = {
            {"sphere.ply", "a smooth round sphere"},
            {"cube.ply", "a cube with flat square faces"},
            {"snout.ply", "an animal head with a long snout"},
            {"snout_two_faced.ply", "a two faced animal head with two snouts"},
        };
        save_reference_asset(dir / "sphere.ply", make_sphere_asset());
        save_reference_asset(dir / "cube.ply", make_cube_asset());
        save_reference_asset(dir / "snout.ply", make_snout_asset(false));
        save_reference_asset(dir / "snout_two_faced.ply", make_snout_asset(true));
        std::vector<std::pair<fs::path, std::string>> entries;
        for (const auto& [file, caption] : items) entries.emplace_back(file, caption);
        save_catalog(dir / "catalog.jsonl", make_catalog(entries));
        write_config(dir / "sphere.json", "a round sphere", geometry, texture, size);
        write_config(dir / "cube.json", "a cube", geometry, texture, size);
        std::printf("wrote toys to %s\n", dir.string().c_str());
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
