#pragma once

// Command-line front end. Exit codes: 0 success, 1 data error (reported with
// file and line), 2 argument error (reported with usage text).

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmtkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Bad input data; `line` is 1-based, 0 when the error is not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& file, std::size_t line, const std::string& message);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

const char* version();

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wmtkit::cli
