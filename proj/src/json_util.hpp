#pragma once

#include <set>
#include <string>

#include "json.hpp"
#include "pmsim/errors.hpp"

namespace pmsim::detail {

using json = nlohmann::ordered_json;

/// Strict reader over one JSON object: typed lookups with defaults, and a
/// final check that every key was consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>* defaults)
      : j_(j), path_(std::move(path)), defaults_(defaults) {
    if (!j_.is_object()) throw ParseError(where(""), "expected an object");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ParseError(where(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ParseError(where(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    if (!has(key)) return fill(key, fallback);
    return number(key);
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ParseError(where(key), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fill(key, fallback);
    return integer(key);
  }
  unsigned long long unsigned_integer(const std::string& key, unsigned long long fallback) {
    if (!has(key)) return fill(key, fallback);
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ParseError(where(key), "expected a non-negative integer");
    }
    return v.get<unsigned long long>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ParseError(where(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fill(key, fallback);
    return string(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ParseError(where(item.key()), "unknown key");
    }
  }

  std::vector<std::string>* defaults() const { return defaults_; }

 private:
  template <class T>
  T fill(const std::string& key, T value) {
    if (defaults_ != nullptr) {
      json v = value;
      defaults_->push_back(where(key) + " = " + v.dump());
    }
    return value;
  }

  const json& j_;
  std::string path_;
  std::vector<std::string>* defaults_;
  std::set<std::string> seen_;
};

}  // namespace pmsim::detail
