#include "pair/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pair::io {

namespace {

constexpr char kMagic[6] = {'P', 'M', 'A', 'T', '1', '\0'};

void write_le64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 8);
}

std::uint64_t read_le64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_pmat(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pmat: cannot write " + path);
    out.write(kMagic, 6);
    write_le64(out, static_cast<std::uint64_t>(m.rows()));
    write_le64(out, static_cast<std::uint64_t>(m.cols()));
    // Eigen matrices are column-major; doubles on every supported target are
    // little-endian IEEE-754
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!out) throw std::runtime_error("pmat: short write to " + path);
}

Matrix read_pmat(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pmat: cannot open " + path);
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0)
        throw std::runtime_error("pmat: bad magic in " + path);
    std::uint64_t rows = read_le64(in), cols = read_le64(in);
    if (!in || rows == 0 || cols == 0 || rows * cols > (1ull << 32))
        throw std::runtime_error("pmat: implausible dimensions in " + path);
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (static_cast<std::uint64_t>(in.gcount()) != sizeof(double) * rows * cols)
        throw std::runtime_error("pmat: truncated payload in " + path);
    return m;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("sha256: cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    hex << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
    return hex.str();
}

void write_manifest(const std::string& dir, const std::string& kind,
                    const std::vector<std::string>& files, const nlohmann::json& config) {
    nlohmann::json manifest;
    manifest["schema_version"] = kManifestSchemaVersion;
    manifest["library_version"] = kLibraryVersion;
    manifest["kind"] = kind;
    manifest["config"] = config;
    nlohmann::json flist = nlohmann::json::array();
    for (const auto& f : files)
        flist.push_back({{"name", f}, {"sha256", sha256_file(dir + "/" + f)}});
    manifest["files"] = flist;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

nlohmann::json load_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(in);
    int version = manifest.at("schema_version").get<int>();
    if (version != kManifestSchemaVersion) {
        std::ostringstream msg;
        msg << "manifest schema version " << version << " not supported (expected "
            << kManifestSchemaVersion << ")";
        throw std::runtime_error(msg.str());
    }
    for (const auto& f : manifest.at("files")) {
        std::string name = f.at("name").get<std::string>();
        std::string expected = f.at("sha256").get<std::string>();
        std::string actual = sha256_file(dir + "/" + name);
        if (actual != expected)
            throw std::runtime_error("hash mismatch for " + name + " (expected " + expected +
                                     ", got " + actual + ")");
    }
    return manifest;
}

} // namespace pair::io
