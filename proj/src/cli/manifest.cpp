#include "adx/cli/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include <fmt/format.h>

#include "adx/errors.hpp"

#ifndef ADX_VERSION
#define ADX_VERSION "0.0.0"
#endif

namespace adx::cli {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path);
    return bytes;
}

std::string RunManifest::input_hash() const {
    std::string lines;
    for (const auto& [role, bytes] : inputs) lines += role + "=" + sha256_hex(bytes) + "\n";
    return sha256_hex(lines);
}

std::string RunManifest::render(const std::map<std::string, std::string>& outputs) const {
    std::ostringstream out;
    out << "command=" << command << '\n'
        << "config=" << config_path << '\n'
        << "seed=" << seed << '\n'
        << "out=" << out_dir << '\n'
        << "version=" << ADX_VERSION << '\n';
    for (const auto& [key, value] : params) out << "param." << key << '=' << value << '\n';
    for (const auto& [role, bytes] : inputs) out << "input." << role << ".sha256=" << sha256_hex(bytes) << '\n';
    out << "input_hash=" << input_hash() << '\n';
    for (const auto& [name, bytes] : outputs) out << "output." << name << ".sha256=" << sha256_hex(bytes) << '\n';
    return out.str();
}

void write_outputs(const RunManifest& manifest, const std::map<std::string, std::string>& outputs) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(manifest.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + manifest.out_dir + ": " + ec.message());
    const auto write = [&](const std::string& name, const std::string& bytes) {
        const auto path = (fs::path(manifest.out_dir) / name).string();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path);
        out << bytes;
        out.close();
        if (!out) throw IoError("write failed for " + path);
    };
    for (const auto& [name, bytes] : outputs) write(name, bytes);
    write("manifest.txt", manifest.render(outputs));
}

} // namespace adx::cli
