#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qvf {

// Natural parameter or model input outside the family's domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// |beta0 + beta1 * mean| fell below the degeneracy threshold; omega undefined.
struct DegenerateOmega : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Family supports omega/scoring only, not ancestral sampling.
struct UnsupportedSampling : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every conditioning cell fell below the retention threshold.
struct NoCellsRetained : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsvParseError : std::runtime_error {
  std::size_t line;  // 1-based physical line in the file, header included
  CsvParseError(std::size_t line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

}  // namespace qvf
