/*
 * Copyright (c) 2026, the mvp authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MVP_CONFIG_HPP_
#define MVP_CONFIG_HPP_

#include <string>

#include "mvp/error.hpp"

namespace mvp {

/// How view slots are realized in the prompt: dedicated reserved tokens
/// (default), or reuse of the first m prompt positions with no reserved ids.
enum class ViewTokenMode { kDedicated, kFirstK };

inline std::string to_string(ViewTokenMode m) {
  return m == ViewTokenMode::kDedicated ? "dedicated" : "first-k";
}

inline ViewTokenMode view_token_mode_from_string(const std::string& s) {
  if (s == "dedicated") return ViewTokenMode::kDedicated;
  if (s == "first-k") return ViewTokenMode::kFirstK;
  throw ConfigError("unknown view_token_mode: " + s);
}

/// Model dimensions. The defaults are the smallest size that trains to high
/// nDCG on the synthetic task.
struct ModelConfig {
  int d = 32;             // hidden width
  int encoder_layers = 2;
  int decoder_layers = 1;
  int heads = 4;
  int ff = 64;            // MLP hidden width
  int max_len = 64;       // L
  int views = 4;          // m
  int vocab_size = 64;
  ViewTokenMode view_token_mode = ViewTokenMode::kDedicated;

  void validate() const {
    if (d < 1 || encoder_layers < 1 || decoder_layers < 1 || heads < 1 || ff < 1 ||
        max_len < 1 || views < 1 || vocab_size < 1) {
      throw ConfigError("model dimensions must be positive");
    }
    if (d % heads != 0) {
      throw ConfigError("width " + std::to_string(d) + " not divisible by heads " +
                        std::to_string(heads));
    }
    if (max_len < views + 2) {
      throw ConfigError("max_len must be at least views + 2");
    }
  }
};

/// View-wise score aggregation: Mean (default), Max, or a single view.
struct AggregationStrategy {
  enum class Kind { kMean, kMax, kSingleView };
  Kind kind = Kind::kMean;
  int view = 0;  // 1-based, SingleView only

  static AggregationStrategy Mean() { return {Kind::kMean, 0}; }
  static AggregationStrategy Max() { return {Kind::kMax, 0}; }
  static AggregationStrategy SingleView(int k) {
    if (k < 1) throw ParameterError("SingleView index must be at least 1");
    return {Kind::kSingleView, k};
  }

  std::string name() const {
    switch (kind) {
      case Kind::kMean: return "mean";
      case Kind::kMax: return "max";
      default: return "view:" + std::to_string(view);
    }
  }

  static AggregationStrategy parse(const std::string& s) {
    if (s == "mean") return Mean();
    if (s == "max") return Max();
    if (s.rfind("view:", 0) == 0) {
      try {
        return SingleView(std::stoi(s.substr(5)));
      } catch (const std::exception&) {
        throw ParameterError("bad aggregation spec: " + s);
      }
    }
    throw ParameterError("unknown aggregation strategy: " + s);
  }
};

}  // namespace mvp

#endif  // MVP_CONFIG_HPP_
