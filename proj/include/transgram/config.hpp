#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace transgram {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every training hyperparameter. Only `dim` has a value fixed by the method
/// (40); the rest are the usual skip-gram conventions.
struct TrainingConfig {
    std::size_t dim = 40;
    std::size_t window = 5;
    std::size_t negatives = 5;
    double lr_start = 0.025;
    double lr_min = 1e-4;
    double subsample_t = 1e-4;
    double alpha = 0.75;
    std::size_t epochs = 5;
    std::uint64_t min_count = 5;
    std::size_t threads = 1;
    std::uint64_t seed = 1;
    std::size_t max_sentence_len = 1000;
    bool lowercase = true;

    /// Throws ConfigError naming the first offending field.
    void validate() const;

    /// Keys match the CLI long flags without dashes, e.g. "lr-min".
    std::map<std::string, std::string> to_key_values() const;
    /// Applies one `key=value` setting; unknown keys and bad values throw.
    void set(const std::string& key, const std::string& value);

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Reads `key=value` lines. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
void write_key_value_file(const std::filesystem::path& path, const std::map<std::string, std::string>& values);

}  // namespace transgram
