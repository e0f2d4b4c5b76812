#pragma once

#include <stdexcept>
#include <string>

namespace jicd {

/// A caller broke a documented precondition (wrong shapes, padding not done,
/// scale below the floor, acausal access). Indicates a programming error.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Entropy-coded data could not be decoded (truncated or corrupted substream).
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Container or checkpoint framing is invalid (bad magic, unsupported version,
/// missing substream, model mismatch).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jicd
