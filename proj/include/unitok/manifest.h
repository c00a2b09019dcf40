#pragma once

#include <map>
#include <string>
#include <vector>

namespace unitok {

struct ManifestRecord {
    std::string path;
    double duration_s = 0.0;
    int sample_rate = 0;
    std::string label;  // e.g. "pitch:3|env:1|color:2|count:4" or "class:2"
    std::string split;  // train | val | test (may be empty)
};

struct Manifest {
    std::vector<ManifestRecord> records;

    std::vector<const ManifestRecord*> split_records(const std::string& split) const;
};

// Tab-separated key=value lines; one record per line.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

// Scans a directory (or reads a listing file of paths) and validates WAV
// headers. Unreadable files yield error entries instead of aborting.
struct IngestResult {
    Manifest manifest;
    std::vector<std::string> errors;  // "path: reason"
};
IngestResult ingest(const std::string& dir_or_listing);

// "pitch:3|env:1" -> {{"pitch","3"},{"env","1"}}
std::map<std::string, std::string> parse_label(const std::string& label);
// Task value as class index; throws DataError when the task key is missing.
int label_class(const std::string& label, const std::string& task);

}  // namespace unitok
