#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace slisemap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error categories map onto the CLI exit codes (usage 2, data 3, numeric 4).
enum class ErrorKind { Usage, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void data_error(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void numeric_error(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

const char* error_kind_name(ErrorKind kind) noexcept;
int exit_code(ErrorKind kind) noexcept;

// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace slisemap
