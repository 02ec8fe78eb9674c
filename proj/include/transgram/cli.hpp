#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "transgram/config.hpp"
#include "transgram/language.hpp"
#include "transgram/model.hpp"

namespace transgram::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MonoSpec {
    LanguageId language;
    std::filesystem::path file;
};

struct BitextSpec {
    LanguageId language;
    std::filesystem::path pivot_file;
    std::filesystem::path language_file;
};

struct TrainCommand {
    LanguageId pivot;
    std::vector<MonoSpec> monos;
    std::vector<BitextSpec> bitexts;
    TrainingConfig config;
    std::filesystem::path output;
    std::optional<std::filesystem::path> vocab_dir;
    bool quiet = false;
};

struct QueryCommand {
    std::filesystem::path model;
    std::optional<TaggedWord> word;
    std::vector<TaggedWord> plus;
    std::vector<TaggedWord> minus;
    std::vector<LanguageId> targets;  // empty means every language in the model
    std::vector<TaggedWord> exclude;
    std::size_t k = 10;
};

struct TranslateEvalCommand {
    std::filesystem::path model;
    std::filesystem::path testset;
    LanguageId source;
    LanguageId target;
};

struct ClassifyEvalCommand {
    std::filesystem::path model;
    std::filesystem::path train_file;
    LanguageId train_lang;
    std::filesystem::path test_file;
    LanguageId test_lang;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
};

struct ExportCommand {
    std::filesystem::path model;
    std::filesystem::path output;
    VectorKind which = VectorKind::target;
    bool prefixed = true;
};

struct HelpRequest {
    std::string text;
};

using Command = std::variant<TrainCommand, QueryCommand, TranslateEvalCommand, ClassifyEvalCommand, ExportCommand,
                             HelpRequest>;

/// `args` excludes the program name. Throws UsageError naming the offending
/// flag; `--help` yields a HelpRequest.
Command parse_args(const std::vector<std::string>& args);

/// Dispatches a parsed command. Returns kExitOk, or kExitRuntime after writing
/// a diagnostic to `err`.
int run(const Command& command, std::ostream& out, std::ostream& err);

/// parse_args + run with the exit-code convention (0 ok, 1 usage, 2 runtime).
int main(int argc, const char* const* argv);

/// Companion files written next to a trained model.
std::filesystem::path context_path(const std::filesystem::path& model);
std::filesystem::path config_path(const std::filesystem::path& model);

}  // namespace transgram::cli
