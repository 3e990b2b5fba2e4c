#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace merge::io {

// Write-temp-then-rename so interrupted runs never leave truncated files.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);  // throws ConfigError

// Plain comma-separated table; no quoting, cells must not contain commas.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const;  // throws ConfigError when absent
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace merge::io
