#pragma once

#include <string>
#include <utility>
#include <vector>

namespace opal {

// One named pass/fail entry of a verification run. `detail` carries the
// residual expression (or other diagnostics) when the check fails.
struct CheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::vector<CheckItem> items;

  void add(std::string name, bool pass, std::string detail = "") {
    items.push_back(CheckItem{std::move(name), pass, std::move(detail)});
  }
  void merge(const Report& other) {
    items.insert(items.end(), other.items.begin(), other.items.end());
  }
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
  std::size_t fail_count() const {
    std::size_t n = 0;
    for (const auto& it : items)
      if (!it.pass) ++n;
    return n;
  }
  std::string to_text() const {
    std::string out;
    for (const auto& it : items) {
      out += it.pass ? "PASS  " : "FAIL  ";
      out += it.name;
      if (!it.pass && !it.detail.empty()) {
        out += "  [";
        out += it.detail;
        out += "]";
      }
      out += "\n";
    }
    return out;
  }
};

}  // namespace opal
