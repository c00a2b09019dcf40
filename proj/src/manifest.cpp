#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "unitok/error.h"
#include "unitok/manifest.h"
#include "unitok/wavio.h"

namespace fs = std::filesystem;

namespace unitok {

std::vector<const ManifestRecord*> Manifest::split_records(const std::string& split) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
        if (split.empty() || r.split == split) out.push_back(&r);
    return out;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError(path + ": cannot open manifest");
    Manifest m;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        ManifestRecord rec;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            if (key == "path") rec.path = val;
            else if (key == "duration") rec.duration_s = std::stod(val);
            else if (key == "sample_rate") rec.sample_rate = std::stoi(val);
            else if (key == "label") rec.label = val;
            else if (key == "split") rec.split = val;
        }
        if (rec.path.empty()) throw DataError(path + ": manifest line without path: " + line);
        if (rec.duration_s <= 0) throw DataError(path + ": non-positive duration for " + rec.path);
        if (!rec.split.empty() && rec.split != "train" && rec.split != "val" && rec.split != "test")
            throw DataError(path + ": bad split '" + rec.split + "'");
        m.records.push_back(std::move(rec));
    }
    return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open manifest for write");
    for (const auto& r : m.records) {
        f << "path=" << r.path << "\tduration=" << r.duration_s
          << "\tsample_rate=" << r.sample_rate;
        if (!r.label.empty()) f << "\tlabel=" << r.label;
        if (!r.split.empty()) f << "\tsplit=" << r.split;
        f << "\n";
    }
}

IngestResult ingest(const std::string& dir_or_listing) {
    IngestResult out;
    std::vector<std::string> paths;
    if (fs::is_directory(dir_or_listing)) {
        for (const auto& e : fs::directory_iterator(dir_or_listing))
            if (e.is_regular_file() && e.path().extension() == ".wav")
                paths.push_back(e.path().string());
        std::sort(paths.begin(), paths.end());
    } else if (fs::is_regular_file(dir_or_listing)) {
        std::ifstream f(dir_or_listing);
        std::string line;
        while (std::getline(f, line))
            if (!line.empty()) paths.push_back(line);
    } else {
        throw DataError(dir_or_listing + ": not a directory or listing file");
    }
    for (const auto& p : paths) {
        try {
            const WavInfo info = read_wav_info(p);
            ManifestRecord rec;
            rec.path = p;
            rec.duration_s = info.duration_s();
            rec.sample_rate = info.sample_rate;
            out.manifest.records.push_back(std::move(rec));
        } catch (const Error& e) {
            out.errors.push_back(e.what());
        }
    }
    return out;
}

std::map<std::string, std::string> parse_label(const std::string& label) {
    std::map<std::string, std::string> out;
    std::stringstream ss(label);
    std::string part;
    while (std::getline(ss, part, '|')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) continue;
        out[part.substr(0, colon)] = part.substr(colon + 1);
    }
    return out;
}

int label_class(const std::string& label, const std::string& task) {
    auto kv = parse_label(label);
    auto it = kv.find(task);
    if (it == kv.end()) throw DataError("label '" + label + "' has no task '" + task + "'");
    return std::stoi(it->second);
}

}  // namespace unitok
