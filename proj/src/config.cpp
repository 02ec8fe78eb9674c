#include "transgram/config.hpp"

#include <charconv>
#include <cmath>

#include "transgram/io.hpp"

namespace transgram {

namespace {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("invalid value for " + key + ": '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

}  // namespace

void TrainingConfig::validate() const {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (!std::isfinite(lr_start) || !std::isfinite(lr_min) || lr_min < 0.0) {
        throw ConfigError("lr-min must be finite and >= 0");
    }
    if (!(lr_start > lr_min)) throw ConfigError("lr must be greater than lr-min");
    if (!(subsample_t > 0.0) || !std::isfinite(subsample_t)) throw ConfigError("sample must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
    if (min_count < 1) throw ConfigError("min-count must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (max_sentence_len < 1) throw ConfigError("max-sentence-len must be >= 1");
}

std::map<std::string, std::string> TrainingConfig::to_key_values() const {
    return {
        {"dim", std::to_string(dim)},
        {"window", std::to_string(window)},
        {"negatives", std::to_string(negatives)},
        {"lr", format_double(lr_start)},
        {"lr-min", format_double(lr_min)},
        {"sample", format_double(subsample_t)},
        {"alpha", format_double(alpha)},
        {"epochs", std::to_string(epochs)},
        {"min-count", std::to_string(min_count)},
        {"threads", std::to_string(threads)},
        {"seed", std::to_string(seed)},
        {"max-sentence-len", std::to_string(max_sentence_len)},
        {"lowercase", lowercase ? "true" : "false"},
    };
}

void TrainingConfig::set(const std::string& key, const std::string& value) {
    if (key == "dim") {
        dim = parse_number<std::size_t>(key, value);
    } else if (key == "window") {
        window = parse_number<std::size_t>(key, value);
    } else if (key == "negatives") {
        negatives = parse_number<std::size_t>(key, value);
    } else if (key == "lr") {
        lr_start = parse_number<double>(key, value);
    } else if (key == "lr-min") {
        lr_min = parse_number<double>(key, value);
    } else if (key == "sample") {
        subsample_t = parse_number<double>(key, value);
    } else if (key == "alpha") {
        alpha = parse_number<double>(key, value);
    } else if (key == "epochs") {
        epochs = parse_number<std::size_t>(key, value);
    } else if (key == "min-count") {
        min_count = parse_number<std::uint64_t>(key, value);
    } else if (key == "threads") {
        threads = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "max-sentence-len") {
        max_sentence_len = parse_number<std::size_t>(key, value);
    } else if (key == "lowercase") {
        lowercase = parse_bool(key, value);
    } else {
        throw ConfigError("unknown configuration key: " + key);
    }
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
    std::map<std::string, std::string> values;
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(reader.line_number()) + ": expected key=value");
        }
        values[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
    }
    return values;
}

void write_key_value_file(const std::filesystem::path& path, const std::map<std::string, std::string>& values) {
    AtomicFileWriter out(path);
    for (const auto& [key, value] : values) out.write(key + "=" + value + "\n");
    out.commit();
}

}  // namespace transgram
