#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/smallmat.hpp"

namespace pathlab {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

/// Buffered CSV table, written to disk by `close` or the destructor.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
    ~CsvWriter();

    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(const char* v) { return cell(std::string(v)); }
    void end_row();
    void close();

private:
    std::filesystem::path path_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::string buffer_;
    bool closed_ = false;
};

/// Overwrites `path` with one JSON record per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const Vector& v);

} // namespace pathlab
