#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adx::cli {

std::string sha256_hex(std::string_view bytes);

// Whole file as bytes; IoError when unreadable.
std::string read_file(const std::string& path);

// Output directory contents, written together with one manifest.txt. Every
// file is assembled in memory first so the manifest can hash it.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::string seed; // empty when the command draws nothing
    std::string out_dir;
    std::vector<std::pair<std::string, std::string>> inputs; // role, bytes
    std::vector<std::pair<std::string, std::string>> params; // key, value

    // sha256 over "role=<sha256>\n" lines of every input in order.
    std::string input_hash() const;
    std::string render(const std::map<std::string, std::string>& outputs) const;
};

// Creates the directory, writes each output and then manifest.txt.
void write_outputs(const RunManifest& manifest, const std::map<std::string, std::string>& outputs);

} // namespace adx::cli
