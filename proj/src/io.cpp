#include "fracldp/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace fracldp {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, path);
}

std::string to_ndjson(const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump(-1, ' ', false, Json::error_handler_t::strict);
        out += '\n';
    }
    return out;
}

namespace {

std::string csv_cell(const Json& v) {
    if (v.is_null()) return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

std::string to_csv(const std::vector<Json>& records) {
    std::vector<std::string> header;
    for (const auto& r : records)
        for (auto it = r.begin(); it != r.end(); ++it)
            if (std::find(header.begin(), header.end(), it.key()) == header.end()) header.push_back(it.key());
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + csv_cell(Json(header[i]));
    out += '\n';
    for (const auto& r : records) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            auto it = r.find(header[i]);
            if (it != r.end()) out += csv_cell(*it);
        }
        out += '\n';
    }
    return out;
}

Json RunManifest::to_json() const {
    Json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["exit_code"] = exit_code;
    j["blow_ups"] = blow_ups;
    Json files = Json::array();
    for (const auto& f : outputs) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["outputs"] = files;
    j["tolerances"] = tolerances;
    j["config"] = config;
    return j;
}

}  // namespace fracldp
