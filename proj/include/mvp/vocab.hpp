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
#ifndef MVP_VOCAB_HPP_
#define MVP_VOCAB_HPP_

#include <sstream>
#include <string>
#include <vector>

#include "mvp/error.hpp"

namespace mvp {

/// Closed synthetic vocabulary with a fixed reserved-id layout:
///   0 <pad>, 1 <bos>, 2 <q> query marker, 3 <p> passage marker,
///   4..11 view tokens <v1>..<v8>, 12.. content words "w12", "w13", ...
/// Reserved ids never appear in generated query or passage text; content
/// tokens never appear at view positions.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kQueryMark = 2;
  static constexpr int kPassageMark = 3;
  static constexpr int kViewBase = 4;
  static constexpr int kMaxViews = 8;
  static constexpr int kContentBase = kViewBase + kMaxViews;  // 12

  int size = 64;

  explicit Vocab(int vocab_size = 64) : size(vocab_size) {
    if (size <= kContentBase) {
      throw VocabError("vocab size " + std::to_string(size) + " leaves no content tokens (need > " +
                       std::to_string(kContentBase) + ")");
    }
  }

  int view_id(int k) const {  // k is 0-based
    if (k < 0 || k >= kMaxViews) throw VocabError("view index out of reserved range");
    return kViewBase + k;
  }

  int content_count() const { return size - kContentBase; }

  bool is_reserved(int id) const { return id >= 0 && id < kContentBase; }
  bool is_view(int id) const { return id >= kViewBase && id < kContentBase; }
  bool is_content(int id) const { return id >= kContentBase && id < size; }

  void check(int id) const {
    if (id < 0 || id >= size) {
      throw VocabError("token id " + std::to_string(id) + " out of range for vocab size " +
                       std::to_string(size));
    }
  }

  std::string token_name(int id) const {
    check(id);
    switch (id) {
      case kPad: return "<pad>";
      case kBos: return "<bos>";
      case kQueryMark: return "<q>";
      case kPassageMark: return "<p>";
      default: break;
    }
    if (is_view(id)) return "<v" + std::to_string(id - kViewBase + 1) + ">";
    return "w" + std::to_string(id);
  }

  int parse_token(const std::string& word) const {
    if (word == "<pad>") return kPad;
    if (word == "<bos>") return kBos;
    if (word == "<q>") return kQueryMark;
    if (word == "<p>") return kPassageMark;
    if (word.size() >= 4 && word.rfind("<v", 0) == 0 && word.back() == '>') {
      const int k = std::stoi(word.substr(2, word.size() - 3));
      if (k < 1 || k > kMaxViews) throw VocabError("unknown token: " + word);
      return kViewBase + k - 1;
    }
    if (!word.empty() && word[0] == 'w') {
      try {
        const int id = std::stoi(word.substr(1));
        if (is_content(id)) return id;
      } catch (const std::exception&) {
      }
    }
    throw VocabError("unknown token: " + word);
  }

  /// Whitespace-split tokenizer over the closed vocabulary.
  std::vector<int> tokenize(const std::string& text) const {
    std::vector<int> out;
    std::istringstream is(text);
    std::string word;
    while (is >> word) out.push_back(parse_token(word));
    return out;
  }

  std::string detokenize(const std::vector<int>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += token_name(ids[i]);
    }
    return out;
  }
};

}  // namespace mvp

#endif  // MVP_VOCAB_HPP_
