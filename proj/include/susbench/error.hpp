#pragma once

#include <stdexcept>
#include <string>

namespace susbench {

enum class Errc {
  invalid_argument,
  domain,
  config,
  unknown_lsf,
  degenerate,
  insufficient_data,
  runtime,
};

// All library failures are reported through this one exception type; the
// C layer translates the code into a status value.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace susbench
