// Copyright 2026 The Contrast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "contrast/heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

void check_labels(const Tensor& w, const std::vector<std::string>& rows, const std::vector<std::string>& cols) {
  if (w.rank() != 2 || w.rows() != rows.size() || w.cols() != cols.size()) {
    throw ShapeError("heatmap: labels " + std::to_string(rows.size()) + "x" + std::to_string(cols.size()) +
                     " do not match weights " + shape_string(w.shape()));
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string attention_csv(const Tensor& weights, const std::vector<std::string>& target_tokens,
                          const std::vector<std::string>& source_tokens) {
  check_labels(weights, target_tokens, source_tokens);
  std::ostringstream os;
  for (const auto& s : source_tokens) os << ',' << csv_field(s);
  os << '\n';
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    os << csv_field(target_tokens[r]);
    for (std::size_t c = 0; c < weights.cols(); ++c) os << ',' << number(weights.at(r, c));
    os << '\n';
  }
  return os.str();
}

std::string attention_svg(const Tensor& weights, const std::vector<std::string>& target_tokens,
                          const std::vector<std::string>& source_tokens, const std::string& title) {
  check_labels(weights, target_tokens, source_tokens);
  constexpr int kCell = 28, kLeft = 90, kTop = 110;
  const int width = kLeft + kCell * static_cast<int>(source_tokens.size()) + 10;
  const int height = kTop + kCell * static_cast<int>(target_tokens.size()) + 10;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"11\">\n";
  os << "<title>" << xml_escape(title) << "</title>\n";
  os << "<text x=\"4\" y=\"14\">" << xml_escape(title) << "</text>\n";
  for (std::size_t c = 0; c < source_tokens.size(); ++c) {
    const int x = kLeft + kCell * static_cast<int>(c) + kCell / 2;
    os << "<text transform=\"translate(" << x << "," << kTop - 6 << ") rotate(-60)\">"
       << xml_escape(source_tokens[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < target_tokens.size(); ++r) {
    const int y = kTop + kCell * static_cast<int>(r);
    os << "<text x=\"4\" y=\"" << y + kCell / 2 + 4 << "\">" << xml_escape(target_tokens[r]) << "</text>\n";
    for (std::size_t c = 0; c < source_tokens.size(); ++c) {
      const double v = std::clamp(weights.at(r, c), 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      os << "<rect class=\"cell\" x=\"" << kLeft + kCell * static_cast<int>(c) << "\" y=\"" << y
         << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\"rgb(" << shade << ',' << shade
         << ",255)\"><title>" << number(weights.at(r, c)) << "</title></rect>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace contrast
