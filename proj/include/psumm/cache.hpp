#pragma once

// On-disk cache of labeler completions keyed by (dialog id, prompt hash).
// Writes go through a temporary file and a rename, so a crash never leaves
// a half-written entry behind.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "psumm/backend_types.hpp"
#include "psumm/text.hpp"
#include "psumm/wire.hpp"

namespace psumm {

class CompletionCache {
 public:
  // An empty directory disables the cache.
  explicit CompletionCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  bool enabled() const noexcept { return !dir_.empty(); }

  std::filesystem::path path_for(std::string_view dialog_id, std::string_view prompt) const {
    std::string safe;
    for (char c : dialog_id) safe.push_back(text::is_ascii_alnum(c) || c == '-' || c == '_' ? c : '_');
    if (safe.size() > 64) safe.resize(64);
    // The id hash keeps sanitized ids that collide apart.
    return dir_ / (safe + "-" + text::hex64(text::fnv1a(dialog_id)).substr(0, 8) + "-" +
                   text::hex64(text::fnv1a(prompt)) + ".json");
  }

  std::optional<backends::CompletionResult> get(std::string_view dialog_id, std::string_view prompt) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(path_for(dialog_id, prompt));
    if (!in) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(in);
      if (j.value("prompt", std::string()) != prompt) return std::nullopt;
      return wire::parse_complete_response(j.at("completion"));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void put(std::string_view dialog_id, std::string_view prompt, const backends::CompletionResult& r) const {
    if (!enabled()) return;
    auto target = path_for(dialog_id, prompt);
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      nlohmann::json j{{"dialog_id", dialog_id}, {"prompt", prompt}, {"completion", wire::complete_response(r)}};
      out << j.dump();
    }
    std::filesystem::rename(tmp, target);
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace psumm
