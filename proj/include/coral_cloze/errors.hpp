#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coral_cloze {

// Error taxonomy. The CLI maps ValidationError/ConfigError/UsageError to exit
// code 2 and NumericError to exit code 3.

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One addressed problem in an input file. `line` is 1-based (the header is line 1);
/// zero means the issue is not tied to a line.
struct ValidationIssue {
    std::size_t line = 0;
    std::string field;
    std::string message;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}

    ValidationError(const std::string& source, std::vector<ValidationIssue> issues)
        : std::runtime_error(render(source, issues)), issues_(std::move(issues)) {}

    const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

private:
    static std::string render(const std::string& source, const std::vector<ValidationIssue>& issues) {
        constexpr std::size_t kShown = 10;
        std::string out = source + ": " + std::to_string(issues.size()) + " validation error(s)";
        for (std::size_t i = 0; i < issues.size() && i < kShown; ++i) {
            const auto& is = issues[i];
            out += "\n  ";
            if (is.line != 0) out += "line " + std::to_string(is.line) + ": ";
            if (!is.field.empty()) out += "field '" + is.field + "': ";
            out += is.message;
        }
        if (issues.size() > kShown) out += "\n  ... (" + std::to_string(issues.size() - kShown) + " more)";
        return out;
    }

    std::vector<ValidationIssue> issues_;
};

}  // namespace coral_cloze
