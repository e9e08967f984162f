#pragma once

#include <cstdint>
#include <stdexcept>

#include "topkmon/trace.hpp"

namespace topkmon {

/// Order-preserving map from (value, id) pairs to single integers, used by
/// the exact-tracking code paths. Higher value wins; on equal values the
/// smaller id wins, so distinct nodes never collide:
///   code(v, i) = v * (n + 1) + (n - i)
struct Embedding {
  explicit Embedding(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("Embedding: need at least one node");
  }

  int n() const { return n_; }

  std::int64_t code(Value v, NodeId id) const {
    if (id < 1 || id > n_) throw std::out_of_range("Embedding: bad node id");
    if (v > max_value()) throw std::overflow_error("Embedding: value too large to embed");
    return static_cast<std::int64_t>(v) * (n_ + 1) + (n_ - id);
  }

  Value value_of(std::int64_t code) const {
    return static_cast<Value>(code / (n_ + 1));
  }

  NodeId id_of(std::int64_t code) const {
    return n_ - static_cast<int>(code % (n_ + 1));
  }

  /// Largest stream value the code space can hold without overflow.
  Value max_value() const {
    return (static_cast<Value>(INT64_MAX) - n_) / (n_ + 1);
  }

 private:
  int n_;
};

}  // namespace topkmon
