// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "fds/common.hpp"

namespace fds::detail {

using json = nlohmann::ordered_json;

// Typed field access that reports the offending path on failure.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::Validation, path_ + ": expected an object");
  }

  const json& at(const std::string& key) const {
    auto it = j_.find(key);
    if (it == j_.end()) fail(ErrorCode::Validation, sub(key) + ": missing field");
    return *it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  /// Rejects any key not in `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* a : allowed) known = known || it.key() == a;
      if (!known) fail(ErrorCode::Validation, sub(it.key()) + ": unknown key");
    }
  }
  bool boolean(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(ErrorCode::Validation, sub(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(ErrorCode::Validation, sub(key) + ": expected a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(ErrorCode::Validation, sub(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(ErrorCode::Validation, sub(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(ErrorCode::Validation, sub(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t n) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != n)
      fail(ErrorCode::Validation, sub(key) + ": expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(ErrorCode::Validation, sub(key) + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

// Re-raises library argument errors as validation errors tagged with a path.
template <typename F>
void with_path(const std::string& path, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    fail(ErrorCode::Validation, path + ": " + e.what());
  }
}

}  // namespace fds::detail
